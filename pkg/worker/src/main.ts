#!/usr/bin/env node
/**
 * Child-worker entry point.
 *
 *   node dist/main.js --train train.bin --val val.bin [--epochs 3]
 *
 * Reads JSONL evaluation requests on stdin, answers one JSONL response
 * per request on stdout. Diagnostics go to stderr only.
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { DEFAULT_CHILD } from "./child";
import { loadCifar10Binary } from "./dataset";
import { serve } from "./serve";

async function main(): Promise<void> {
  const argv = await yargs(hideBin(process.argv))
    .option("train", {
      type: "string",
      demandOption: true,
      describe: "training set (CIFAR-10 binary format)",
    })
    .option("val", {
      type: "string",
      demandOption: true,
      describe: "validation set (CIFAR-10 binary format)",
    })
    .option("epochs", { type: "number", default: DEFAULT_CHILD.epochs })
    .option("batch-size", { type: "number", default: DEFAULT_CHILD.batchSize })
    .option("learning-rate", { type: "number", default: DEFAULT_CHILD.learningRate })
    .option("train-size", {
      type: "number",
      describe: "default reduced training-set size when requests omit train_size",
    })
    .strict()
    .parse();

  const train = loadCifar10Binary(argv.train);
  const val = loadCifar10Binary(argv.val);
  process.stderr.write(
    `child-worker ready: ${train.count} train / ${val.count} val examples\n`,
  );
  await serve(process.stdin, process.stdout, {
    train,
    val,
    child: {
      epochs: argv.epochs,
      batchSize: argv["batch-size"],
      learningRate: argv["learning-rate"],
    },
    defaultTrainSize: argv["train-size"],
  });
}

main().catch((err) => {
  process.stderr.write(`fatal: ${err?.stack ?? err}\n`);
  process.exit(1);
});
