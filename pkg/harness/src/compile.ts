/** Invokes the host C++ compiler on the model and driver sources. */

import { spawnSync } from "child_process";

export class CompileError extends Error {
  constructor(message: string, readonly compilerOutput: string) {
    super(message);
  }
}

export function compilerCommand(): string {
  return process.env.CXX ?? "g++";
}

export function compileBinary(sources: string[], outputPath: string): void {
  const cxx = compilerCommand();
  const args = ["-O2", "-o", outputPath, ...sources];
  const result = spawnSync(cxx, args, { encoding: "utf8" });
  if (result.error) {
    throw new CompileError(`failed to launch ${cxx}: ${result.error.message}`, "");
  }
  if (result.status !== 0) {
    throw new CompileError(
      `${cxx} exited with status ${result.status}`,
      `${result.stdout ?? ""}${result.stderr ?? ""}`,
    );
  }
}
