/**
 * Builds the generated model together with the CSV driver and runs it.
 *
 * The model side of the interchange is plain text: the C++ source emitted
 * by the primary toolkit plus its JSON manifest sidecar. No ABI is shared;
 * either side can be rebuilt independently.
 */

import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { spawnSync } from "child_process";

import { compileBinary } from "./compile";
import { generateDriverSource, ModelManifest } from "./driver";

export interface DriverConfig {
  modelSourcePath: string;
  inputCsvPath: string;
  outputCsvPath: string;
  repeatCount: number;
  /** Defaults to `<modelSourcePath>.manifest.json`. */
  manifestPath?: string;
}

export interface DriverResult {
  rows: number;
  latencyUsPerObs: number;
  binarySizeBytes: number;
  manifest: ModelManifest;
}

export class DriverError extends Error {
  constructor(message: string, readonly exitCode: number) {
    super(message);
  }
}

export function loadManifest(config: DriverConfig): ModelManifest {
  const manifestPath = config.manifestPath ?? `${config.modelSourcePath}.manifest.json`;
  const manifest = JSON.parse(fs.readFileSync(manifestPath, "utf8")) as ModelManifest;
  for (const key of ["n_trees", "total_nodes", "n_classes", "n_features",
                     "expected_size_bytes"] as const) {
    if (typeof manifest[key] !== "number") {
      throw new Error(`manifest ${manifestPath} is missing numeric field ${key}`);
    }
  }
  return manifest;
}

export function runDriver(config: DriverConfig): DriverResult {
  if (config.repeatCount < 1) {
    throw new DriverError("repeat count must be >= 1", 3);
  }
  const manifest = loadManifest(config);
  const workDir = fs.mkdtempSync(path.join(os.tmpdir(), "forest-harness-"));
  try {
    const driverPath = path.join(workDir, "driver.cpp");
    const binaryPath = path.join(workDir, "driver");
    fs.writeFileSync(driverPath, generateDriverSource(manifest));
    compileBinary([config.modelSourcePath, driverPath], binaryPath);
    const binarySizeBytes = fs.statSync(binaryPath).size;

    const run = spawnSync(binaryPath, [
      config.inputCsvPath,
      config.outputCsvPath,
      String(config.repeatCount),
    ], { encoding: "utf8" });
    if (run.error) {
      throw new DriverError(`failed to launch driver: ${run.error.message}`, 1);
    }
    if (run.status !== 0) {
      throw new DriverError(
        `driver exited with status ${run.status}: ${(run.stderr ?? "").trim()}`,
        run.status ?? 1,
      );
    }
    const match = /latency_us_per_obs=([0-9.eE+-]+)/.exec(run.stdout ?? "");
    if (!match) {
      throw new DriverError(`driver produced no latency line: ${run.stdout}`, 1);
    }
    const rowsMatch = /rows=(\d+)/.exec(run.stdout ?? "");
    return {
      rows: rowsMatch ? Number(rowsMatch[1]) : 0,
      latencyUsPerObs: Number(match[1]),
      binarySizeBytes,
      manifest,
    };
  } finally {
    fs.rmSync(workDir, { recursive: true, force: true });
  }
}
