/** Numeric CSV parsing and tolerance-based comparison of prediction files. */

import * as fs from "fs";

export function readCsvMatrix(path: string): number[][] {
  const rows: number[][] = [];
  const text = fs.readFileSync(path, "utf8");
  for (const line of text.split(/\r?\n/)) {
    if (line.trim() === "") continue;
    const row = line.split(",").map((cell) => {
      const value = Number(cell);
      if (Number.isNaN(value)) {
        throw new Error(`non-numeric cell ${JSON.stringify(cell)} in ${path}`);
      }
      return value;
    });
    rows.push(row);
  }
  return rows;
}

export interface ComparisonResult {
  rows: number;
  columns: number;
  maxAbsDiff: number;
  withinTolerance: boolean;
}

export function compareMatrices(
  a: number[][],
  b: number[][],
  tolerance: number,
): ComparisonResult {
  if (a.length !== b.length) {
    throw new Error(`row count mismatch: ${a.length} vs ${b.length}`);
  }
  let maxAbsDiff = 0;
  let columns = 0;
  for (let r = 0; r < a.length; r++) {
    if (a[r].length !== b[r].length) {
      throw new Error(`column count mismatch on row ${r + 1}: ${a[r].length} vs ${b[r].length}`);
    }
    columns = a[r].length;
    for (let c = 0; c < a[r].length; c++) {
      maxAbsDiff = Math.max(maxAbsDiff, Math.abs(a[r][c] - b[r][c]));
    }
  }
  return { rows: a.length, columns, maxAbsDiff, withinTolerance: maxAbsDiff <= tolerance };
}

export function comparePredictionFiles(
  actualPath: string,
  expectedPath: string,
  tolerance: number,
): ComparisonResult {
  return compareMatrices(readCsvMatrix(actualPath), readCsvMatrix(expectedPath), tolerance);
}
