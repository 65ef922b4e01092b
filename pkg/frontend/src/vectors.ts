// Deterministic vector sources. Both derive every row from a counter-style
// hash of its own inputs, so output never depends on batching or order.

const MASK = (1n << 64n) - 1n;

// splitmix64 finalizer: a high-quality 64-bit mix usable as a counter hash.
function mix64(x: bigint): bigint {
  let z = x & MASK;
  z ^= z >> 30n;
  z = (z * 0xbf58476d1ce4e5b9n) & MASK;
  z ^= z >> 27n;
  z = (z * 0x94d049bb133111ebn) & MASK;
  z ^= z >> 31n;
  return z;
}

function toUnitInterval(h: bigint): number {
  // top 53 bits -> [0, 1)
  return Number(h >> 11n) / 2 ** 53;
}

function l2NormalizeInPlace(row: Float32Array): void {
  let sumSq = 0;
  for (let j = 0; j < row.length; j++) sumSq += row[j] * row[j];
  const norm = Math.sqrt(sumSq);
  if (norm === 0) return; // zero rows pass through, matching the toolkit
  for (let j = 0; j < row.length; j++) {
    row[j] = Math.fround(row[j] / norm);
  }
}

/** Row for (seed, lineIndex): values hashed per (seed, line, column), mapped
 * to [-1, 1), then L2-normalized. Independent of batch size by construction. */
export function randomRow(seed: number, lineIndex: number, dim: number): Float32Array {
  const base = mix64(mix64(BigInt(seed) & MASK) ^ BigInt(lineIndex));
  const row = new Float32Array(dim);
  for (let j = 0; j < dim; j++) {
    row[j] = Math.fround(2 * toUnitInterval(mix64(base ^ BigInt(j))) - 1);
  }
  l2NormalizeInPlace(row);
  return row;
}

function hashString(text: string): bigint {
  const bytes = Buffer.from(text, "utf-8");
  let h = 0xcbf29ce484222325n; // FNV-1a over utf-8 bytes, then mixed
  for (const b of bytes) {
    h = ((h ^ BigInt(b)) * 0x100000001b3n) & MASK;
  }
  return mix64(h);
}

/** Lexical encoder: character trigrams hashed into dim buckets with a signed
 * contribution, L2-normalized. A deterministic, dependency-free stand-in for
 * a sentence encoder; similar strings land near each other. */
export function hashNgramRow(text: string, dim: number): Float32Array {
  const row = new Float32Array(dim);
  const padded = ` ${text} `;
  for (let i = 0; i + 3 <= padded.length; i++) {
    const h = hashString(padded.slice(i, i + 3));
    const bucket = Number(h % BigInt(dim));
    const sign = (h >> 63n) === 0n ? 1 : -1;
    row[bucket] += sign;
  }
  l2NormalizeInPlace(row);
  return row;
}
