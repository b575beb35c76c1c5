/**
 * Chart-option builders for the four figure kinds.
 *
 * These are pure mappings from parsed CSV tables to echarts options: every
 * plotted number is carried verbatim from the source columns, never
 * recomputed, so a round-trip test can diff series data against the files.
 */

import type { EChartsOption, SeriesOption } from "echarts";
import { CsvTable, SchemaError, numbers, requireColumns, strings } from "./csv";

export interface FigureFilters {
  strategy?: string;
  robot?: number;
}

const GRID = { left: 70, right: 90, top: 56, bottom: 56 };

function baseOption(title: string): EChartsOption {
  return {
    animation: false,
    backgroundColor: "#ffffff",
    title: { text: title, left: "center" },
    grid: GRID,
    legend: { bottom: 0, type: "plain" },
  };
}

/** Percentage-frequency bars of per-step dropped-link counts. */
export function histogramOption(table: CsvTable, file = "linkdrop_hist.csv"): EChartsOption {
  requireColumns(table, ["dropped", "steps", "percent"], file);
  const dropped = numbers(table, "dropped", file);
  const percent = numbers(table, "percent", file);
  return {
    ...baseOption("Dropped communication links per step"),
    xAxis: { type: "category", name: "links dropped", data: dropped.map(String) },
    yAxis: { type: "value", name: "% of steps" },
    legend: undefined,
    series: [{ type: "bar", name: "percent", data: percent }],
  };
}

/** Cumulative-loss curves over time, one line per strategy (or one robot's column). */
export function lossCurvesOption(
  table: CsvTable,
  filters: FigureFilters = {},
  file = "curves.csv",
): EChartsOption {
  requireColumns(table, ["strategy", "t", "total_mean"], file);
  const column = filters.robot != null ? `robot${filters.robot}_mean` : "total_mean";
  requireColumns(table, [column], file);
  const strategies = [...new Set(strings(table, "strategy", file))];
  const wanted = filters.strategy ? strategies.filter((s) => s === filters.strategy) : strategies;
  if (wanted.length === 0) {
    throw new SchemaError(`${file}: no rows for strategy "${filters.strategy}"`);
  }
  const series: SeriesOption[] = wanted.map((strat) => {
    const rows = table.rows.filter((r) => r.strategy === strat);
    return {
      type: "line",
      name: strat,
      showSymbol: false,
      data: rows.map((r) => [r.t as number, r[column] as number]),
    };
  });
  const what = filters.robot != null ? `robot ${filters.robot}` : "all robots";
  return {
    ...baseOption(`Mean cumulative prediction loss (${what})`),
    xAxis: { type: "value", name: "step" },
    yAxis: { type: "value", name: "cumulative loss" },
    series,
  };
}

/** Per-robot average cumulative loss versus fleet size, with the reliability-cost overlay. */
export function scalabilityOption(
  table: CsvTable,
  filters: FigureFilters = {},
  file = "sweep.csv",
): EChartsOption {
  requireColumns(table, ["strategy", "n", "per_robot_avg_mean", "reliability_cost"], file);
  const strategies = [...new Set(strings(table, "strategy", file))];
  const wanted = filters.strategy ? strategies.filter((s) => s === filters.strategy) : strategies;
  if (wanted.length === 0) {
    throw new SchemaError(`${file}: no rows for strategy "${filters.strategy}"`);
  }
  const series: SeriesOption[] = wanted.map((strat) => {
    const rows = table.rows.filter((r) => r.strategy === strat);
    return {
      type: "line",
      name: strat,
      showSymbol: true,
      data: rows.map((r) => [r.n as number, r.per_robot_avg_mean as number]),
    };
  });
  const first = table.rows.filter((r) => r.strategy === strategies[0]);
  series.push({
    type: "line",
    name: "reliability cost",
    yAxisIndex: 1,
    showSymbol: false,
    lineStyle: { type: "dashed" },
    data: first.map((r) => [r.n as number, r.reliability_cost as number]),
  });
  return {
    ...baseOption("Average cumulative loss per robot vs fleet size"),
    xAxis: { type: "value", name: "robots" },
    yAxis: [
      { type: "value", name: "avg cumulative loss / robot" },
      { type: "value", name: "reliability cost" },
    ],
    series,
  };
}

/** Robot and target traces from a step log. */
export function trajectoryOption(
  table: CsvTable,
  filters: FigureFilters = {},
  file = "steps.csv",
): EChartsOption {
  requireColumns(table, ["t", "robot", "x", "y", "target_x", "target_y"], file);
  const robots = [...new Set(numbers(table, "robot", file))].sort((a, b) => a - b);
  const wanted = filters.robot != null ? robots.filter((r) => r === filters.robot) : robots;
  if (wanted.length === 0) {
    throw new SchemaError(`${file}: no rows for robot ${filters.robot}`);
  }
  const series: SeriesOption[] = wanted.map((robot) => {
    const rows = table.rows.filter((r) => r.robot === robot);
    return {
      type: "line",
      name: `robot ${robot}`,
      showSymbol: false,
      data: rows.map((r) => [r.x as number, r.y as number]),
    };
  });
  const targetRows = table.rows.filter((r) => r.robot === robots[0]);
  series.push({
    type: "line",
    name: "target",
    showSymbol: false,
    lineStyle: { type: "dashed", width: 2 },
    data: targetRows.map((r) => [r.target_x as number, r.target_y as number]),
  });
  return {
    ...baseOption("Trajectories"),
    xAxis: { type: "value", name: "x (m)", scale: true },
    yAxis: { type: "value", name: "y (m)", scale: true },
    series,
  };
}

export const FIGURE_KINDS = ["histogram", "loss-curves", "scalability", "trajectory"] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

export const INPUT_FILES: Record<FigureKind, string> = {
  histogram: "linkdrop_hist.csv",
  "loss-curves": "curves.csv",
  scalability: "sweep.csv",
  trajectory: "steps.csv",
};

export function buildOption(
  kind: FigureKind,
  table: CsvTable,
  filters: FigureFilters,
  file: string,
): EChartsOption {
  switch (kind) {
    case "histogram":
      return histogramOption(table, file);
    case "loss-curves":
      return lossCurvesOption(table, filters, file);
    case "scalability":
      return scalabilityOption(table, filters, file);
    case "trajectory":
      return trajectoryOption(table, filters, file);
  }
}
