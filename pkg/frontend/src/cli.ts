#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { exportEmbeddings } from "./export.js";

const argv = yargs(hideBin(process.argv))
  .scriptName("embed-export")
  .usage("$0 --in FILE --out FILE [--mode random|hash-ngram] [--dim N] [--seed N] [--batch-size N]")
  .option("in", { type: "string", demandOption: true, describe: "sentence file, one per line" })
  .option("out", { type: "string", demandOption: true, describe: "embedding file to write" })
  .option("mode", { type: "string", default: "random", describe: "random | hash-ngram" })
  .option("dim", { type: "number", default: 64, describe: "embedding dimension" })
  .option("seed", { type: "number", default: 0, describe: "seed for random mode" })
  .option("batch-size", { type: "number", default: 64, describe: "lines encoded per batch" })
  .strict()
  .parseSync();

try {
  const { count, dim } = exportEmbeddings({
    input: argv.in,
    output: argv.out,
    mode: argv.mode,
    dim: argv.dim,
    seed: argv.seed,
    batchSize: argv["batch-size"],
  });
  console.log(`wrote ${count} x ${dim} embeddings to ${argv.out}`);
} catch (err) {
  console.error(`embed-export: ${err instanceof Error ? err.message : err}`);
  process.exit(1);
}
