import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { EngineError } from "./types.js";

/** Run one engine subcommand; throws EngineError on a nonzero exit. */
export function runEngine(command: string[], args: string[]): string {
  const [bin, ...prefix] = command;
  const proc = spawnSync(bin, [...prefix, ...args], {
    encoding: "utf-8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (proc.error) {
    throw new EngineError(`failed to launch engine '${command.join(" ")}'`, String(proc.error));
  }
  if (proc.status !== 0) {
    throw new EngineError(`engine exited with status ${proc.status}`, proc.stderr ?? "");
  }
  return proc.stdout ?? "";
}

/** Temp workspace for one engine exchange. */
export function withWorkdir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "tirgp-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

/** Write rows as a headed CSV with x0..x{d-1} columns, plus a target column when given. */
export function writeCsv(path: string, X: number[][], y?: number[]): void {
  const d = X[0]?.length ?? 0;
  const header = [...Array.from({ length: d }, (_, i) => `x${i}`)];
  if (y) header.push("target");
  const lines = [header.join(",")];
  for (let i = 0; i < X.length; i++) {
    const row = X[i].map(String);
    if (y) row.push(String(y[i]));
    lines.push(row.join(","));
  }
  writeFileSync(path, lines.join("\n") + "\n", "utf-8");
}

/** Parse the engine's one-value-per-line predictions; the NaN token becomes NaN. */
export function readPredictions(path: string): number[] {
  const text = readFileSync(path, "utf-8");
  return text
    .split("\n")
    .filter((line) => line.length > 0)
    .map((line) => (line === "NaN" ? Number.NaN : Number(line)));
}
