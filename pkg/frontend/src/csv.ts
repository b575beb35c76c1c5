/**
 * CSV loading for the simulator's output files.
 *
 * Values are parsed with dynamic typing (numbers become numbers); schema
 * checks name the offending column so a mismatched file fails loudly.
 */

import Papa from "papaparse";

export class SchemaError extends Error {}

export interface CsvTable {
  columns: string[];
  rows: Record<string, string | number>[];
}

export function parseCsv(text: string, file = "<input>"): CsvTable {
  const result = Papa.parse<Record<string, string | number>>(text.trim(), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (result.errors.length > 0) {
    const e = result.errors[0];
    throw new SchemaError(`${file}: malformed CSV (${e.message} at row ${e.row})`);
  }
  const columns = result.meta.fields ?? [];
  if (columns.length === 0) {
    throw new SchemaError(`${file}: no header row`);
  }
  return { columns, rows: result.data };
}

export function requireColumns(table: CsvTable, needed: string[], file: string): void {
  for (const col of needed) {
    if (!table.columns.includes(col)) {
      throw new SchemaError(`${file}: missing required column "${col}"`);
    }
  }
}

export function numbers(table: CsvTable, column: string, file = "<input>"): number[] {
  requireColumns(table, [column], file);
  return table.rows.map((r, idx) => {
    const v = r[column];
    if (typeof v !== "number" || !isFinite(v)) {
      throw new SchemaError(`${file}: column "${column}" row ${idx + 1} is not a finite number`);
    }
    return v;
  });
}

export function strings(table: CsvTable, column: string, file = "<input>"): string[] {
  requireColumns(table, [column], file);
  return table.rows.map((r) => String(r[column]));
}
