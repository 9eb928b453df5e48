export { CompileError, compileBinary, compilerCommand } from "./compile";
export { ComparisonResult, compareMatrices, comparePredictionFiles,
         readCsvMatrix } from "./compare";
export { ModelManifest, generateDriverSource } from "./driver";
export { DriverConfig, DriverError, DriverResult, loadManifest, runDriver } from "./runner";
