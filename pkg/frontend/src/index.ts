export { TirRegressor } from "./regressor.js";
export { DEFAULT_PARAMS, EngineError, NotFittedError } from "./types.js";
export type { ModelDocument, ModelTerm, TirParams } from "./types.js";
