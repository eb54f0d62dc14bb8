import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { readPredictions, runEngine, withWorkdir, writeCsv } from "./engine.js";
import {
  DEFAULT_PARAMS,
  ModelDocument,
  NotFittedError,
  TirParams,
} from "./types.js";

interface TrainReport {
  r2_train: number | null;
  size: number;
  model: ModelDocument;
  model_text: { infix: string; python: string; s_expression: string };
}

function validateMatrix(X: number[][], name = "X"): void {
  if (!Array.isArray(X) || X.length === 0) {
    throw new Error(`${name} must be a non-empty array of rows`);
  }
  const d = X[0].length;
  if (d === 0) throw new Error(`${name} rows must have at least one feature`);
  for (const row of X) {
    if (row.length !== d) throw new Error(`${name} rows have inconsistent lengths`);
    for (const v of row) {
      if (typeof v !== "number" || !Number.isFinite(v)) {
        throw new Error(`${name} must contain only finite numbers`);
      }
    }
  }
}

/**
 * Fit/predict wrapper around the symbolic regression engine.
 *
 * All numeric work happens in the engine process: fit shells out to
 * `tirgp train`, stores the returned model document, and predict replays it
 * through `tirgp predict`, so client predictions are exactly the engine's.
 */
export class TirRegressor {
  private params: TirParams;
  private model: ModelDocument | null = null;
  private nFeatures = 0;
  private infix = "";
  private trainR2: number | null = null;

  constructor(params: Partial<TirParams> = {}) {
    this.params = { ...DEFAULT_PARAMS, ...params };
  }

  getParams(): TirParams {
    return { ...this.params, expRange: [...this.params.expRange] };
  }

  setParams(params: Partial<TirParams>): this {
    this.params = { ...this.params, ...params };
    return this;
  }

  get fitted(): boolean {
    return this.model !== null;
  }

  /** Infix rendering of the fitted model. */
  expression(): string {
    if (!this.model) throw new NotFittedError();
    return this.infix;
  }

  /** The engine's serialized model document (shared exchange format). */
  modelDocument(): ModelDocument {
    if (!this.model) throw new NotFittedError();
    return JSON.parse(JSON.stringify(this.model)) as ModelDocument;
  }

  /** Training R2 the engine reported for the fitted model. */
  trainScore(): number | null {
    if (!this.model) throw new NotFittedError();
    return this.trainR2;
  }

  private trainFlags(): string[] {
    const p = this.params;
    const flags = [
      "--pop", String(p.popSize),
      "--gens", String(p.generations),
      "--pc", String(p.crossoverProb),
      "--pm", String(p.mutationProb),
      // = form: a negative lower bound must not look like a new flag
      `--exp-range=${p.expRange[0]},${p.expRange[1]}`,
      "--folds", String(p.folds),
      "--cv-pop", String(p.cvPopSize),
      "--cv-gens", String(p.cvGenerations),
      "--penalty-rule", p.penaltyRule,
      "--penalty-c", String(p.penaltyC),
      "--seed", String(p.randomState),
      // the client hands over its entire training set
      "--train-ratio", "1.0",
    ];
    if (p.budget !== null) flags.push("--budget", String(p.budget));
    if (p.gridSearch) flags.push("--grid-search");
    return flags;
  }

  fit(X: number[][], y: number[]): this {
    validateMatrix(X);
    if (!Array.isArray(y) || y.length !== X.length) {
      throw new Error("y must have one value per row of X");
    }
    for (const v of y) {
      if (typeof v !== "number" || !Number.isFinite(v)) {
        throw new Error("y must contain only finite numbers");
      }
    }
    const report = withWorkdir((dir) => {
      const data = join(dir, "train.csv");
      const out = join(dir, "report.json");
      writeCsv(data, X, y);
      runEngine(this.params.engineCommand, [
        "train", "--dataset", data, "--out", out, ...this.trainFlags(),
      ]);
      return JSON.parse(readFileSync(out, "utf-8")) as TrainReport;
    });
    this.model = report.model;
    this.nFeatures = X[0].length;
    this.infix = report.model_text.infix;
    this.trainR2 = report.r2_train;
    return this;
  }

  predict(X: number[][]): number[] {
    if (!this.model) throw new NotFittedError();
    validateMatrix(X);
    if (X[0].length !== this.nFeatures) {
      throw new Error(
        `X has ${X[0].length} features, the model expects ${this.nFeatures}`,
      );
    }
    return withWorkdir((dir) => {
      const modelPath = join(dir, "model.json");
      const data = join(dir, "features.csv");
      const out = join(dir, "predictions.txt");
      writeFileSync(modelPath, JSON.stringify(this.model), "utf-8");
      writeCsv(data, X);
      runEngine(this.params.engineCommand, [
        "predict", "--model", modelPath, "--dataset", data, "--out", out,
      ]);
      return readPredictions(out);
    });
  }

  /** Coefficient of determination on (X, y). */
  score(X: number[][], y: number[]): number {
    const pred = this.predict(X);
    if (y.length !== pred.length) {
      throw new Error("y must have one value per row of X");
    }
    const mean = y.reduce((a, b) => a + b, 0) / y.length;
    let ssRes = 0;
    let ssTot = 0;
    for (let i = 0; i < y.length; i++) {
      ssRes += (y[i] - pred[i]) ** 2;
      ssTot += (y[i] - mean) ** 2;
    }
    if (ssTot === 0) return Number.NaN;
    return 1 - ssRes / ssTot;
  }
}
