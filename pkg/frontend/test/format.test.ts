import * as fs from "fs";
import * as path from "path";
import { describe, expect, it } from "vitest";

import { decodeEmbeddings, encodeEmbeddings, MAGIC } from "../src/format.js";

const FIXTURES = path.join(__dirname, "..", "fixtures");

describe("binary layout", () => {
  it("writes magic, u32 count, u32 dim, then float32 payload", () => {
    const buf = encodeEmbeddings([new Float32Array([0.5])], 1);
    expect(buf.subarray(0, 8).equals(MAGIC)).toBe(true);
    expect(buf.readUInt32LE(8)).toBe(1);
    expect(buf.readUInt32LE(12)).toBe(1);
    expect(buf.readFloatLE(16)).toBe(0.5);
    expect(buf.length).toBe(20);
  });

  it("round-trips rows exactly", () => {
    const rows = [new Float32Array([1.5, -2.25]), new Float32Array([0, 3])];
    const decoded = decodeEmbeddings(encodeEmbeddings(rows, 2));
    expect(decoded.count).toBe(2);
    expect(decoded.dim).toBe(2);
    expect(Array.from(decoded.rows[0])).toEqual([1.5, -2.25]);
    expect(Array.from(decoded.rows[1])).toEqual([0, 3]);
  });

  it("supports zero rows", () => {
    const decoded = decodeEmbeddings(encodeEmbeddings([], 7));
    expect(decoded.count).toBe(0);
    expect(decoded.dim).toBe(7);
  });

  it("rejects bad magic", () => {
    const buf = encodeEmbeddings([new Float32Array([1])], 1);
    buf[0] = 0x58;
    expect(() => decodeEmbeddings(buf)).toThrow(/magic/);
  });

  it("rejects truncated payload", () => {
    const buf = encodeEmbeddings([new Float32Array([1, 2])], 2);
    expect(() => decodeEmbeddings(buf.subarray(0, buf.length - 1))).toThrow(/payload/);
  });
});

describe("cross-component fixture", () => {
  it("parses a file written by the Python toolkit", () => {
    const raw = fs.readFileSync(path.join(FIXTURES, "reference.btx"));
    const expected = JSON.parse(
      fs.readFileSync(path.join(FIXTURES, "reference.json"), "utf-8"),
    ) as { count: number; dim: number; rows: number[][] };
    const decoded = decodeEmbeddings(raw);
    expect(decoded.count).toBe(expected.count);
    expect(decoded.dim).toBe(expected.dim);
    decoded.rows.forEach((row, i) => {
      row.forEach((v, j) => expect(v).toBeCloseTo(expected.rows[i][j], 6));
    });
  });

  it("re-encodes the fixture byte-identically", () => {
    const raw = fs.readFileSync(path.join(FIXTURES, "reference.btx"));
    const decoded = decodeEmbeddings(raw);
    expect(encodeEmbeddings(decoded.rows, decoded.dim).equals(raw)).toBe(true);
  });
});
