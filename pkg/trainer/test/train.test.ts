import * as tf from "@tensorflow/tfjs";
import { beforeAll, describe, expect, it } from "vitest";
import { holdoutSplit, syntheticDataset } from "../src/data";
import { presetSpec } from "../src/model";
import { OriginalNetwork, SubnetTrainingInputs, boundaryFeatures,
         trainDetectors, trainOriginal, trainSubnet } from "../src/train";

const preset = presetSpec("tiny", false);
const SEED = 42;
const EPOCHS = 3;
const BATCH = 64;
const LR = 0.01;

let original: OriginalNetwork;
let detectors: tf.LayersModel[];
let inputs: SubnetTrainingInputs[];

beforeAll(() => {
  const ds = syntheticDataset(500, preset.inputSize, preset.numClasses, SEED);
  const { train, test } = holdoutSplit(ds);
  original = trainOriginal(preset, train, EPOCHS, SEED, BATCH, LR);
  const trainFeatures = boundaryFeatures(original.subnets, train.images);
  const testFeatures = boundaryFeatures(original.subnets, test.images);
  detectors = trainDetectors(preset, trainFeatures, train, EPOCHS, SEED,
                             BATCH, LR);
  inputs = trainFeatures.map((_, i) => ({
    inputTrain: i === 0 ? train.images : trainFeatures[i - 1],
    targetTrain: trainFeatures[i],
    inputTest: i === 0 ? test.images : testFeatures[i - 1],
    targetTest: testFeatures[i],
    oneHotTrain: train.oneHot,
    labelsTest: test.labels,
  }));
});

const opts = {
  epochs: EPOCHS, seed: SEED, batchSize: BATCH, learningRate: LR,
  featureConstraint: true,
};

describe("trainSubnet", () => {
  it("strictly decreases the combined loss each epoch on a pruned coding", () => {
    const result = trainSubnet(preset, 0, [2, 2], original.subnets[0],
                               detectors[0], inputs[0], opts);
    expect(result.lossHistory).toHaveLength(EPOCHS + 1);
    for (let i = 1; i < result.lossHistory.length; i++) {
      expect(result.lossHistory[i]).toBeLessThan(result.lossHistory[i - 1]);
    }
  });

  it("reports a bounded detector error and nonnegative feature distance", () => {
    const result = trainSubnet(preset, 1, [3, 3], original.subnets[1],
                               detectors[1], inputs[1], opts);
    expect(result.error).toBeGreaterThanOrEqual(0);
    expect(result.error).toBeLessThanOrEqual(1);
    expect(result.l2).toBeGreaterThanOrEqual(0);
    expect(Number.isFinite(result.l2)).toBe(true);
  });

  it("is deterministic for a fixed seed and coding", () => {
    const a = trainSubnet(preset, 0, [1, 2], original.subnets[0],
                          detectors[0], inputs[0], opts);
    const b = trainSubnet(preset, 0, [1, 2], original.subnets[0],
                          detectors[0], inputs[0], opts);
    expect(b.error).toBe(a.error);
    expect(b.l2).toBe(a.l2);
    expect(b.lossHistory).toEqual(a.lossHistory);
  });

  it("leaves the frozen detector untouched", () => {
    const before = detectors[0].getWeights().map((w) => w.dataSync().slice());
    trainSubnet(preset, 0, [2, 1], original.subnets[0], detectors[0],
                inputs[0], opts);
    const after = detectors[0].getWeights().map((w) => w.dataSync());
    expect(after.length).toBe(before.length);
    after.forEach((w, i) => expect(Array.from(w)).toEqual(Array.from(before[i])));
  });

  it("starts from a lower loss without the feature constraint", () => {
    const withTerm = trainSubnet(preset, 0, [2, 2], original.subnets[0],
                                 detectors[0], inputs[0],
                                 { ...opts, epochs: 0 });
    const without = trainSubnet(preset, 0, [2, 2], original.subnets[0],
                                detectors[0], inputs[0],
                                { ...opts, epochs: 0, featureConstraint: false });
    expect(without.lossHistory[0]).toBeLessThan(withTerm.lossHistory[0]);
  });
});
