// Binary embedding file format shared with the Python toolkit:
// magic "BTXEMB1\n" (8 bytes), u32-LE row count, u32-LE dimension, then
// count*dim float32-LE values in row-major order.

export const MAGIC = Buffer.from("BTXEMB1\n", "ascii");
const HEADER_BYTES = MAGIC.length + 8;

export function encodeEmbeddings(rows: Float32Array[], dim: number): Buffer {
  const payload = Buffer.alloc(rows.length * dim * 4);
  rows.forEach((row, i) => {
    if (row.length !== dim) {
      throw new Error(`row ${i} has ${row.length} values, expected ${dim}`);
    }
    for (let j = 0; j < dim; j++) {
      payload.writeFloatLE(row[j], (i * dim + j) * 4);
    }
  });
  const header = Buffer.alloc(HEADER_BYTES);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(rows.length, MAGIC.length);
  header.writeUInt32LE(dim, MAGIC.length + 4);
  return Buffer.concat([header, payload]);
}

export interface DecodedEmbeddings {
  count: number;
  dim: number;
  rows: Float32Array[];
}

export function decodeEmbeddings(raw: Buffer): DecodedEmbeddings {
  if (raw.length < HEADER_BYTES || !raw.subarray(0, MAGIC.length).equals(MAGIC)) {
    throw new Error("bad magic: not a BTXEMB1 embedding file");
  }
  const count = raw.readUInt32LE(MAGIC.length);
  const dim = raw.readUInt32LE(MAGIC.length + 4);
  if (dim === 0) {
    throw new Error("bad dim: dimension is 0");
  }
  const expected = count * dim * 4;
  const payload = raw.subarray(HEADER_BYTES);
  if (payload.length !== expected) {
    throw new Error(`bad payload: ${payload.length} bytes, expected ${expected}`);
  }
  const rows: Float32Array[] = [];
  for (let i = 0; i < count; i++) {
    const row = new Float32Array(dim);
    for (let j = 0; j < dim; j++) {
      row[j] = payload.readFloatLE((i * dim + j) * 4);
    }
    rows.push(row);
  }
  return { count, dim, rows };
}
