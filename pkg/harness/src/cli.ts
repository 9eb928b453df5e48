#!/usr/bin/env node
/**
 * Compile-and-compare harness for generated decision-forest C++ code.
 *
 * Exit codes: 0 success, 1 runtime/shape/comparison failure, 2 compile
 * failure, 3 usage error.
 */

import { CompileError } from "./compile";
import { comparePredictionFiles } from "./compare";
import { DriverError, runDriver } from "./runner";

interface CliOptions {
  model?: string;
  input?: string;
  output?: string;
  manifest?: string;
  expected?: string;
  repeat: number;
  tolerance: number;
}

function parseArgs(argv: string[]): CliOptions {
  const options: CliOptions = { repeat: 1, tolerance: 1e-6 };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = argv[i + 1];
    switch (flag) {
      case "--model": options.model = value; i++; break;
      case "--input": options.input = value; i++; break;
      case "--output": options.output = value; i++; break;
      case "--manifest": options.manifest = value; i++; break;
      case "--expected": options.expected = value; i++; break;
      case "--repeat": options.repeat = Number(value); i++; break;
      case "--tolerance": options.tolerance = Number(value); i++; break;
      case "--help":
        usage();
        process.exit(0);
      default:
        throw new UsageError(`unknown flag ${flag}`);
    }
  }
  if (!options.model || !options.input || !options.output) {
    throw new UsageError("--model, --input and --output are required");
  }
  if (!Number.isFinite(options.repeat) || options.repeat < 1) {
    throw new UsageError("--repeat must be a positive integer");
  }
  return options;
}

class UsageError extends Error {}

function usage(): void {
  console.log(
    "usage: slimtrees-harness --model model.cpp --input x.csv --output preds.csv\n" +
    "         [--manifest model.cpp.manifest.json] [--repeat N]\n" +
    "         [--expected expected.csv] [--tolerance 1e-6]\n\n" +
    "Compiles the generated model with a CSV driver, writes one class vector\n" +
    "per input row, prints the mean latency per observation, and (when\n" +
    "--expected is given) diffs the predictions within the tolerance.");
}

export function main(argv: string[]): number {
  let options: CliOptions;
  try {
    options = parseArgs(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    usage();
    return 3;
  }

  try {
    const result = runDriver({
      modelSourcePath: options.model!,
      inputCsvPath: options.input!,
      outputCsvPath: options.output!,
      repeatCount: options.repeat,
      manifestPath: options.manifest,
    });
    console.log(
      `rows=${result.rows} latency_us_per_obs=${result.latencyUsPerObs.toFixed(6)} ` +
      `binary_bytes=${result.binarySizeBytes} model_bytes=${result.manifest.expected_size_bytes}`);

    if (options.expected) {
      const diff = comparePredictionFiles(options.output!, options.expected, options.tolerance);
      console.log(
        `compared=${diff.rows}x${diff.columns} max_abs_diff=${diff.maxAbsDiff.toExponential(3)}`);
      if (!diff.withinTolerance) {
        console.error(
          `error: predictions differ by ${diff.maxAbsDiff} (tolerance ${options.tolerance})`);
        return 1;
      }
    }
    return 0;
  } catch (err) {
    if (err instanceof CompileError) {
      console.error(`error: ${err.message}\n${err.compilerOutput}`);
      return 2;
    }
    if (err instanceof DriverError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
