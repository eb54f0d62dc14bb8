/** One summand of an expression: func applied to a product of powers. */
export interface ModelTerm {
  exponents: number[];
  func: string;
  weight: number;
}

/**
 * Serialized model document exchanged with the engine.
 *
 * The represented model is `g(p(x) / (1 + q(x)))` where p and q are weighted
 * sums of transformed variable interactions.
 */
export interface ModelDocument {
  g: string;
  p: { intercept: number | null; terms: ModelTerm[] };
  q: { terms: ModelTerm[] };
}

/** Hyperparameters; each maps 1:1 to an engine CLI flag. */
export interface TirParams {
  /** Individuals per generation (`--pop`). */
  popSize: number;
  /** Generations of the evolutionary search (`--gens`). */
  generations: number;
  /** Crossover probability (`--pc`). */
  crossoverProb: number;
  /** Mutation probability (`--pm`). */
  mutationProb: number;
  /** Max total terms per model (`--budget`); engine default when null. */
  budget: number | null;
  /** Inclusive integer exponent range (`--exp-range`). */
  expRange: [number, number];
  /** Choose the exponent range by cross-validation (`--grid-search`). */
  gridSearch: boolean;
  /** Grid-search folds (`--folds`). */
  folds: number;
  /** Grid-search population (`--cv-pop`). */
  cvPopSize: number;
  /** Grid-search generations (`--cv-gens`). */
  cvGenerations: number;
  /** Size-penalty rule (`--penalty-rule`). */
  penaltyRule: "none" | "samples" | "dim" | "points";
  /** Size-penalty constant (`--penalty-c`). */
  penaltyC: number;
  /** Seed (`--seed`). */
  randomState: number;
  /** Engine executable; override when `tirgp` is not on PATH. */
  engineCommand: string[];
}

export const DEFAULT_PARAMS: TirParams = {
  popSize: 1000,
  generations: 500,
  crossoverProb: 0.3,
  mutationProb: 0.7,
  budget: null,
  expRange: [-5, 5],
  gridSearch: false,
  folds: 5,
  cvPopSize: 100,
  cvGenerations: 20,
  penaltyRule: "none",
  penaltyC: 0.01,
  randomState: 0,
  engineCommand: process.env.TIRGP_BIN ? [process.env.TIRGP_BIN] : ["tirgp"],
};

/** Thrown when predict/score is called before fit. */
export class NotFittedError extends Error {
  constructor() {
    super("this TirRegressor is not fitted yet; call fit(X, y) first");
    this.name = "NotFittedError";
  }
}

/** Thrown when the engine subprocess fails. */
export class EngineError extends Error {
  constructor(message: string, readonly stderr: string) {
    super(stderr ? `${message}\n${stderr.trim()}` : message);
    this.name = "EngineError";
  }
}
