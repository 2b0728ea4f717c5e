#!/usr/bin/env node
// Long-running evaluator worker: prepares the original network, frozen
// feature detectors and boundary feature pairs once, then answers
// newline-delimited JSON requests with trained sub-network errors.

import * as crypto from "crypto";
import * as fs from "fs";
import * as path from "path";
import * as readline from "readline";
import * as tf from "@tensorflow/tfjs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { holdoutSplit, syntheticDataset } from "./data";
import { Preset, geneBounds, numSubnets, presetSpec } from "./model";
import { failLine, handshakeLine, okLine, parseRequestLine } from "./protocol";
import { OriginalNetwork, SubnetTrainingInputs, boundaryFeatures,
         trainDetectors, trainOriginal, trainSubnet } from "./train";

interface WorkerArgs {
  preset: string;
  smoke: boolean;
  seed: number;
  epochs: number;
  samples: number;
  numClasses?: number;
  batchSize: number;
  lr: number;
  featureConstraint: boolean;
  objective: "detector" | "l2";
  cacheDir?: string;
}

function parseArgs(): WorkerArgs {
  const argv = yargs(hideBin(process.argv))
    .option("preset", { type: "string", default: "resnet56" })
    .option("smoke", { type: "boolean", default: false,
                       describe: "shrink channel widths for fast CPU runs" })
    .option("seed", { type: "number", default: 0 })
    .option("epochs", { type: "number", default: 3 })
    .option("samples", { type: "number", default: 500 })
    .option("num-classes", { type: "number" })
    .option("batch-size", { type: "number", default: 64 })
    .option("lr", { type: "number", default: 0.01 })
    .option("feature-constraint", {
      type: "boolean", default: true,
      describe: "--no-feature-constraint drops the feature-distance loss term" })
    .option("objective", {
      choices: ["detector", "l2"] as const, default: "detector" as const,
      describe: "error objective: detector error or feature distance" })
    .option("cache-dir", { type: "string" })
    .strict()
    .parseSync();
  return {
    preset: argv.preset,
    smoke: argv.smoke,
    seed: argv.seed,
    epochs: argv.epochs,
    samples: argv.samples,
    numClasses: argv["num-classes"],
    batchSize: argv["batch-size"],
    lr: argv.lr,
    featureConstraint: argv["feature-constraint"],
    objective: argv.objective,
    cacheDir: argv["cache-dir"],
  };
}

interface Context {
  preset: Preset;
  original: OriginalNetwork;
  detectors: tf.LayersModel[];
  inputs: SubnetTrainingInputs[];
}

function configKey(args: WorkerArgs, preset: Preset): string {
  const payload = JSON.stringify([preset.name, preset.widthScale, args.seed,
                                  args.epochs, args.samples, preset.numClasses,
                                  args.batchSize, args.lr]);
  return crypto.createHash("sha256").update(payload).digest("hex").slice(0, 16);
}

async function dumpWeights(models: tf.LayersModel[]): Promise<number[][][]> {
  const out: number[][][] = [];
  for (const model of models) {
    const weights: number[][] = [];
    for (const w of model.getWeights()) {
      weights.push(Array.from(await w.data()));
    }
    out.push(weights);
  }
  return out;
}

function loadWeights(models: tf.LayersModel[], dump: number[][][]): void {
  models.forEach((model, i) => {
    const current = model.getWeights();
    model.setWeights(current.map(
      (w, j) => tf.tensor(dump[i][j], w.shape as number[])));
  });
}

async function prepare(args: WorkerArgs): Promise<Context> {
  const preset = presetSpec(args.preset, args.smoke, args.numClasses);
  const dataset = syntheticDataset(args.samples, preset.inputSize,
                                   preset.numClasses, args.seed);
  const { train, test } = holdoutSplit(dataset);

  const cachePath = args.cacheDir
    ? path.join(args.cacheDir, `state_${configKey(args, preset)}.json`)
    : null;

  let original: OriginalNetwork;
  let detectors: tf.LayersModel[];
  let cached = false;
  if (cachePath && fs.existsSync(cachePath)) {
    try {
      const state = JSON.parse(fs.readFileSync(cachePath, "utf-8"));
      original = trainOriginal(preset, train, 0, args.seed, args.batchSize,
                               args.lr);
      loadWeights([...original.subnets, original.head], state.original);
      const trainFeatures = boundaryFeatures(original.subnets, train.images);
      detectors = trainDetectors(preset, trainFeatures, train, 0, args.seed,
                                 args.batchSize, args.lr);
      loadWeights(detectors, state.detectors);
      cached = true;
    } catch {
      cached = false;
    }
  }
  if (!cached) {
    original = trainOriginal(preset, train, args.epochs, args.seed,
                             args.batchSize, args.lr);
    const trainFeatures = boundaryFeatures(original.subnets, train.images);
    detectors = trainDetectors(preset, trainFeatures, train, args.epochs,
                               args.seed, args.batchSize, args.lr);
    if (cachePath) {
      fs.mkdirSync(path.dirname(cachePath), { recursive: true });
      fs.writeFileSync(cachePath, JSON.stringify({
        original: await dumpWeights([...original!.subnets, original!.head]),
        detectors: await dumpWeights(detectors),
      }));
    }
  }

  // feature pairs for every sub-network from one pass over the data
  const trainFeatures = boundaryFeatures(original!.subnets, train.images);
  const testFeatures = boundaryFeatures(original!.subnets, test.images);
  const inputs: SubnetTrainingInputs[] = [];
  for (let i = 0; i < numSubnets(preset); i++) {
    inputs.push({
      inputTrain: i === 0 ? train.images : trainFeatures[i - 1],
      targetTrain: trainFeatures[i],
      inputTest: i === 0 ? test.images : testFeatures[i - 1],
      targetTest: testFeatures[i],
      oneHotTrain: train.oneHot,
      labelsTest: test.labels,
    });
  }
  return { preset, original: original!, detectors: detectors!, inputs };
}

function evaluate(ctx: Context, args: WorkerArgs, subnet: number,
                  genes: number[]): number {
  const result = trainSubnet(
    ctx.preset, subnet, genes, ctx.original.subnets[subnet],
    ctx.detectors[subnet], ctx.inputs[subnet], {
      epochs: args.epochs,
      seed: args.seed,
      batchSize: args.batchSize,
      learningRate: args.lr,
      featureConstraint: args.featureConstraint,
    });
  const value = args.objective === "l2" ? result.l2 : result.error;
  if (!Number.isFinite(value)) throw new Error("training diverged");
  return value;
}

async function main(): Promise<void> {
  const args = parseArgs();
  const ctx = await prepare(args);
  const cache = new Map<string, number>();
  process.stdout.write(handshakeLine(numSubnets(ctx.preset)) + "\n");

  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  for await (const line of rl) {
    if (!line.trim()) continue;
    const parsed = parseRequestLine(line);
    if (parsed === null) continue;
    if ("reply" in parsed) {
      process.stdout.write(parsed.reply + "\n");
      continue;
    }
    const { id, subnet, genes } = parsed.request;
    if (subnet >= numSubnets(ctx.preset)) {
      process.stdout.write(failLine(id, `unknown subnet ${subnet}`) + "\n");
      continue;
    }
    const bounds = geneBounds(ctx.preset, subnet);
    if (genes.length !== bounds.length
        || genes.some((g, i) => g < 1 || g > bounds[i])) {
      process.stdout.write(
        failLine(id, `genes do not fit bounds ${JSON.stringify(bounds)}`) + "\n");
      continue;
    }
    const key = `${subnet}:${genes.join(",")}`;
    try {
      let value = cache.get(key);
      if (value === undefined) {
        value = evaluate(ctx, args, subnet, genes);
        cache.set(key, value);
      }
      process.stdout.write(okLine(id, value) + "\n");
    } catch (err) {
      process.stdout.write(failLine(id, String(err)) + "\n");
    }
  }
}

main().catch((err) => {
  process.stderr.write(String(err?.stack ?? err) + "\n");
  process.exit(1);
});
