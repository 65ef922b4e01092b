import * as fs from "fs";

import { encodeEmbeddings } from "./format.js";
import { hashNgramRow, randomRow } from "./vectors.js";

export interface ExportOptions {
  input: string;
  output: string;
  mode: string; // "random" | "hash-ngram"
  dim: number;
  seed: number;
  batchSize: number;
}

export const ENCODERS = ["random", "hash-ngram"] as const;

export function readLines(path: string): string[] {
  const raw = fs.readFileSync(path, "utf-8");
  const lines = raw.split("\n");
  // A trailing LF terminates the last line rather than opening an empty one;
  // interior empty lines still count (one row per line, never skipped).
  if (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  return lines;
}

function encodeBatch(lines: string[], offset: number, opts: ExportOptions): Float32Array[] {
  return lines.map((line, i) => {
    if (opts.mode === "random") {
      return randomRow(opts.seed, offset + i, opts.dim);
    }
    return hashNgramRow(line, opts.dim);
  });
}

export function exportEmbeddings(opts: ExportOptions): { count: number; dim: number } {
  if (!(ENCODERS as readonly string[]).includes(opts.mode)) {
    throw new Error(`unknown encoder name: ${opts.mode} (expected random or hash-ngram)`);
  }
  if (!Number.isInteger(opts.dim) || opts.dim <= 0) {
    throw new Error(`dim must be a positive integer, got ${opts.dim}`);
  }
  if (!Number.isInteger(opts.batchSize) || opts.batchSize <= 0) {
    throw new Error(`batch size must be a positive integer, got ${opts.batchSize}`);
  }
  const lines = readLines(opts.input);
  const rows: Float32Array[] = [];
  for (let start = 0; start < lines.length; start += opts.batchSize) {
    const batch = lines.slice(start, start + opts.batchSize);
    rows.push(...encodeBatch(batch, start, opts));
  }
  fs.writeFileSync(opts.output, encodeEmbeddings(rows, opts.dim));
  return { count: rows.length, dim: opts.dim };
}
