#!/usr/bin/env node
/**
 * plotview — render figures from the simulator's output directory.
 *
 * Usage:
 *   plotview <histogram|loss-curves|scalability|trajectory>
 *            --in <dir> --out <file.svg>
 *            [--strategy <name>] [--robot <k>] [--width <px>] [--height <px>]
 *
 * Reads only the documented CSV schemas; every plotted number comes verbatim
 * from the input files. Output is SVG (this environment has no rasterizer,
 * so .png targets are rejected with a hint).
 */

import { readFileSync, writeFileSync, existsSync } from "node:fs";
import { join } from "node:path";
import { parseCsv, SchemaError } from "./csv";
import { buildOption, FIGURE_KINDS, FigureKind, FigureFilters, INPUT_FILES } from "./figures";
import { renderSvg } from "./render";

export interface CliArgs {
  kind: FigureKind;
  inDir: string;
  out: string;
  filters: FigureFilters;
  width: number;
  height: number;
}

export class UsageError extends Error {}

export function parseArgs(argv: string[]): CliArgs {
  if (argv.length === 0) {
    throw new UsageError(
      `usage: plotview <${FIGURE_KINDS.join("|")}> --in <dir> --out <file.svg> ` +
        "[--strategy <name>] [--robot <k>] [--width <px>] [--height <px>]",
    );
  }
  const kind = argv[0] as FigureKind;
  if (!FIGURE_KINDS.includes(kind)) {
    throw new UsageError(`unknown figure kind "${argv[0]}" (expected ${FIGURE_KINDS.join(", ")})`);
  }
  const args: Partial<CliArgs> = { kind, filters: {}, width: 900, height: 560 };
  for (let i = 1; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (value === undefined) {
      throw new UsageError(`flag ${flag} needs a value`);
    }
    switch (flag) {
      case "--in":
        args.inDir = value;
        break;
      case "--out":
        args.out = value;
        break;
      case "--strategy":
        args.filters!.strategy = value;
        break;
      case "--robot": {
        const robot = Number(value);
        if (!Number.isInteger(robot) || robot < 1) {
          throw new UsageError(`--robot must be a positive integer, got "${value}"`);
        }
        args.filters!.robot = robot;
        break;
      }
      case "--width":
        args.width = Number(value);
        break;
      case "--height":
        args.height = Number(value);
        break;
      default:
        throw new UsageError(`unknown flag ${flag}`);
    }
  }
  if (!args.inDir || !args.out) {
    throw new UsageError("--in and --out are required");
  }
  if (args.out.toLowerCase().endsWith(".png")) {
    throw new UsageError("PNG rasterization is unavailable here; use an .svg output path");
  }
  return args as CliArgs;
}

export function run(args: CliArgs): string {
  const file = INPUT_FILES[args.kind];
  const path = join(args.inDir, file);
  if (!existsSync(path)) {
    throw new SchemaError(`input file not found: ${path}`);
  }
  const table = parseCsv(readFileSync(path, "utf8"), file);
  const option = buildOption(args.kind, table, args.filters, file);
  const svg = renderSvg(option, args.width, args.height);
  writeFileSync(args.out, svg);
  return args.out;
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    const out = run(args);
    console.log(`wrote ${out}`);
    return 0;
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`usage error: ${err.message}`);
      return 2;
    }
    if (err instanceof SchemaError) {
      console.error(`input error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
