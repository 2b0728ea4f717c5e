import * as tf from "@tensorflow/tfjs";
import { Dataset } from "./data";
import { Preset, buildDetector, buildHead, buildSubnet, inheritWeights,
         numSubnets, trainableVariables } from "./model";
import { SplitMix64, codingSeed, subseed } from "./rng";

export interface LossParts {
  loss: tf.Scalar;
  l2: tf.Scalar;
  ce: tf.Scalar;
}

// total = 1/2 * (||F' - F||_2 + CE(A(F'), Y)); the L2 norm runs over the
// flattened feature tensors. Dropping the feature term is the
// no-constraint ablation.
export function combinedLoss(fPrime: tf.Tensor, f: tf.Tensor,
                             logits: tf.Tensor, oneHot: tf.Tensor,
                             featureConstraint = true): LossParts {
  const l2 = (featureConstraint
    ? tf.norm(tf.sub(fPrime, f))
    : tf.scalar(0)) as tf.Scalar;
  const ce = tf.losses.softmaxCrossEntropy(oneHot, logits) as tf.Scalar;
  const loss = tf.mul(0.5, tf.add(l2, ce)) as tf.Scalar;
  return { loss, l2, ce };
}

function* batches(count: number, batchSize: number): Generator<[number, number]> {
  for (let start = 0; start < count; start += batchSize) {
    yield [start, Math.min(batchSize, count - start)];
  }
}

function sliceImages(t: tf.Tensor4D, start: number, count: number): tf.Tensor4D {
  return tf.slice(t, [start, 0, 0, 0], [count, -1, -1, -1]) as tf.Tensor4D;
}

export interface OriginalNetwork {
  subnets: tf.LayersModel[];
  head: tf.LayersModel;
}

export function applyChain(models: tf.LayersModel[], x: tf.Tensor): tf.Tensor {
  return models.reduce((t, m) => m.apply(t) as tf.Tensor, x);
}

// Brief end-to-end training of the unpruned network on the synthetic
// dataset, standing in for the pre-trained network the search assumes.
export function trainOriginal(preset: Preset, train: Dataset, epochs: number,
                              seed: number, batchSize: number,
                              learningRate: number): OriginalNetwork {
  const subnets = Array.from({ length: numSubnets(preset) },
    (_, i) => buildSubnet(preset, i, null, subseed(seed, 100 + i)));
  const head = buildHead(preset, subseed(seed, 200));
  const vars = trainableVariables([...subnets, head]);
  const optimizer = tf.train.adam(learningRate);
  const count = train.images.shape[0];
  for (let epoch = 0; epoch < epochs; epoch++) {
    for (const [start, n] of batches(count, batchSize)) {
      optimizer.minimize(() => tf.tidy(() => {
        const x = sliceImages(train.images, start, n);
        const y = tf.slice(train.oneHot, [start, 0], [n, -1]);
        const logits = applyChain([...subnets, head], x);
        return tf.losses.softmaxCrossEntropy(y, logits) as tf.Scalar;
      }), false, vars);
    }
  }
  optimizer.dispose();
  return { subnets, head };
}

// Boundary features F_i (output of sub-network i) for the given images.
export function boundaryFeatures(subnets: tf.LayersModel[],
                                 images: tf.Tensor4D): tf.Tensor4D[] {
  const features: tf.Tensor4D[] = [];
  let x: tf.Tensor = images;
  for (const subnet of subnets) {
    x = subnet.apply(x) as tf.Tensor;
    features.push(x as tf.Tensor4D);
  }
  return features;
}

// One frozen detector per boundary, trained with cross-entropy on the
// original network's intermediate features.
export function trainDetectors(preset: Preset, features: tf.Tensor4D[],
                               train: Dataset, epochs: number, seed: number,
                               batchSize: number,
                               learningRate: number): tf.LayersModel[] {
  const detectors: tf.LayersModel[] = [];
  const count = train.images.shape[0];
  for (let i = 0; i < features.length; i++) {
    const detector = buildDetector(preset, i, subseed(seed, 300 + i));
    const vars = trainableVariables([detector]);
    const optimizer = tf.train.adam(learningRate);
    for (let epoch = 0; epoch < epochs; epoch++) {
      for (const [start, n] of batches(count, batchSize)) {
        optimizer.minimize(() => tf.tidy(() => {
          const x = sliceImages(features[i], start, n);
          const y = tf.slice(train.oneHot, [start, 0], [n, -1]);
          return tf.losses.softmaxCrossEntropy(
            y, detector.apply(x) as tf.Tensor) as tf.Scalar;
        }), false, vars);
      }
    }
    optimizer.dispose();
    detector.trainable = false;
    detectors.push(detector);
  }
  return detectors;
}

export interface SubnetTrainingInputs {
  inputTrain: tf.Tensor4D;   // original F_{i-1} (or images for i = 0)
  targetTrain: tf.Tensor4D;  // original F_i
  inputTest: tf.Tensor4D;
  targetTest: tf.Tensor4D;
  oneHotTrain: tf.Tensor2D;
  labelsTest: tf.Tensor1D;
}

export interface SubnetTrainingResult {
  error: number;       // detector-measured classification error, in [0, 1]
  l2: number;          // feature distance after training, held-out data
  lossHistory: number[]; // full-train loss before training and per epoch
}

export interface SubnetTrainingOptions {
  epochs: number;
  seed: number;
  batchSize: number;
  learningRate: number;
  featureConstraint: boolean;
}

// Train one pruned sub-network against the frozen detector, minimizing
// the combined feature-distance + classification loss, and measure its
// held-out error. Weights are inherited from the original sub-network.
export function trainSubnet(preset: Preset, subnet: number, genes: number[],
                            original: tf.LayersModel, detector: tf.LayersModel,
                            io: SubnetTrainingInputs,
                            opts: SubnetTrainingOptions): SubnetTrainingResult {
  const runSeed = codingSeed(opts.seed, subnet, genes);
  const pruned = buildSubnet(preset, subnet, genes, runSeed);
  inheritWeights(pruned, original, preset, subnet, genes,
                 new SplitMix64(runSeed ^ 0x5eedn));
  const vars = trainableVariables([pruned]);
  const optimizer = tf.train.adam(opts.learningRate);
  const count = io.inputTrain.shape[0];

  const fullLoss = (): number => tf.tidy(() => {
    const fPrime = pruned.apply(io.inputTrain) as tf.Tensor;
    const logits = detector.apply(fPrime) as tf.Tensor;
    const parts = combinedLoss(fPrime, io.targetTrain, logits, io.oneHotTrain,
                               opts.featureConstraint);
    return parts.loss.dataSync()[0];
  });

  const lossHistory = [fullLoss()];
  for (let epoch = 0; epoch < opts.epochs; epoch++) {
    for (const [start, n] of batches(count, opts.batchSize)) {
      optimizer.minimize(() => tf.tidy(() => {
        const x = sliceImages(io.inputTrain, start, n);
        const target = sliceImages(io.targetTrain, start, n);
        const y = tf.slice(io.oneHotTrain, [start, 0], [n, -1]);
        const fPrime = pruned.apply(x) as tf.Tensor;
        const logits = detector.apply(fPrime) as tf.Tensor;
        return combinedLoss(fPrime, target, logits, y,
                            opts.featureConstraint).loss;
      }), false, vars);
    }
    lossHistory.push(fullLoss());
  }
  optimizer.dispose();

  const [error, l2] = tf.tidy(() => {
    const fPrime = pruned.apply(io.inputTest) as tf.Tensor;
    const logits = detector.apply(fPrime) as tf.Tensor;
    const predictions = tf.argMax(logits, 1);
    const mismatch = tf.notEqual(predictions, io.labelsTest);
    const errorRate = tf.mean(tf.cast(mismatch, "float32")).dataSync()[0];
    const distance = tf.norm(tf.sub(fPrime, io.targetTest)).dataSync()[0];
    return [errorRate, distance];
  });
  pruned.dispose();
  return { error, l2, lossHistory };
}
