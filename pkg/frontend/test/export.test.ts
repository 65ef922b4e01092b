import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { exportEmbeddings, readLines } from "../src/export.js";
import { decodeEmbeddings } from "../src/format.js";
import { hashNgramRow, randomRow } from "../src/vectors.js";

let dir: string;

beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "embed-export-"));
});

afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

function writeSentences(name: string, lines: string[]): string {
  const p = path.join(dir, name);
  fs.writeFileSync(p, lines.map((l) => l + "\n").join(""));
  return p;
}

describe("line handling", () => {
  it("keeps interior empty lines as rows", () => {
    const p = writeSentences("s.txt", ["hello", "", "world"]);
    expect(readLines(p)).toEqual(["hello", "", "world"]);
  });
});

describe("random mode", () => {
  it("writes one loadable row per line", () => {
    const input = writeSentences("s.txt", ["one", "two", "three"]);
    const output = path.join(dir, "out.btx");
    const { count, dim } = exportEmbeddings({
      input, output, mode: "random", dim: 8, seed: 3, batchSize: 64,
    });
    expect([count, dim]).toEqual([3, 8]);
    const decoded = decodeEmbeddings(fs.readFileSync(output));
    expect(decoded.count).toBe(3);
    expect(decoded.dim).toBe(8);
  });

  it("is byte-identical across reruns", () => {
    const input = writeSentences("s.txt", ["a", "b", "c", ""]);
    const o1 = path.join(dir, "a.btx");
    const o2 = path.join(dir, "b.btx");
    exportEmbeddings({ input, output: o1, mode: "random", dim: 16, seed: 7, batchSize: 64 });
    exportEmbeddings({ input, output: o2, mode: "random", dim: 16, seed: 7, batchSize: 64 });
    expect(fs.readFileSync(o1).equals(fs.readFileSync(o2))).toBe(true);
  });

  it("is independent of batch size", () => {
    const lines = Array.from({ length: 37 }, (_, i) => `sentence ${i}`);
    const input = writeSentences("s.txt", lines);
    const o1 = path.join(dir, "a.btx");
    const o2 = path.join(dir, "b.btx");
    exportEmbeddings({ input, output: o1, mode: "random", dim: 12, seed: 5, batchSize: 1 });
    exportEmbeddings({ input, output: o2, mode: "random", dim: 12, seed: 5, batchSize: 64 });
    expect(fs.readFileSync(o1).equals(fs.readFileSync(o2))).toBe(true);
  });

  it("differs across seeds", () => {
    const input = writeSentences("s.txt", ["x"]);
    const o1 = path.join(dir, "a.btx");
    const o2 = path.join(dir, "b.btx");
    exportEmbeddings({ input, output: o1, mode: "random", dim: 8, seed: 1, batchSize: 8 });
    exportEmbeddings({ input, output: o2, mode: "random", dim: 8, seed: 2, batchSize: 8 });
    expect(fs.readFileSync(o1).equals(fs.readFileSync(o2))).toBe(false);
  });

  it("emits unit-norm rows", () => {
    const row = randomRow(11, 4, 32);
    const norm = Math.sqrt(row.reduce((acc, v) => acc + v * v, 0));
    expect(Math.abs(norm - 1)).toBeLessThan(1e-5);
  });

  it("rejects non-positive dim", () => {
    const input = writeSentences("s.txt", ["x"]);
    expect(() =>
      exportEmbeddings({ input, output: path.join(dir, "o"), mode: "random", dim: 0, seed: 0, batchSize: 8 }),
    ).toThrow(/dim/);
  });
});

describe("encoder mode", () => {
  it("rejects unknown encoder names", () => {
    const input = writeSentences("s.txt", ["x"]);
    expect(() =>
      exportEmbeddings({ input, output: path.join(dir, "o"), mode: "some-encoder", dim: 8, seed: 0, batchSize: 8 }),
    ).toThrow(/unknown encoder/);
  });

  it("hash-ngram is deterministic and normalized", () => {
    const a = hashNgramRow("hello world", 64);
    const b = hashNgramRow("hello world", 64);
    expect(Array.from(a)).toEqual(Array.from(b));
    const norm = Math.sqrt(a.reduce((acc, v) => acc + v * v, 0));
    expect(Math.abs(norm - 1)).toBeLessThan(1e-5);
  });

  it("hash-ngram ranks similar strings closer", () => {
    const q = hashNgramRow("the quick brown fox", 128);
    const near = hashNgramRow("the quick brown foxes", 128);
    const far = hashNgramRow("completely unrelated words", 128);
    const dot = (u: Float32Array, v: Float32Array) =>
      u.reduce((acc, x, i) => acc + x * v[i], 0);
    expect(dot(q, near)).toBeGreaterThan(dot(q, far));
  });

  it("exports hash-ngram files loadable by the shared reader", () => {
    const input = writeSentences("s.txt", ["alpha", "beta"]);
    const output = path.join(dir, "o.btx");
    exportEmbeddings({ input, output, mode: "hash-ngram", dim: 32, seed: 0, batchSize: 1 });
    expect(decodeEmbeddings(fs.readFileSync(output)).count).toBe(2);
  });
});
