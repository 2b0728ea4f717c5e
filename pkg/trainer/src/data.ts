import * as tf from "@tensorflow/tfjs";
import { SplitMix64 } from "./rng";

export interface Dataset {
  images: tf.Tensor4D;
  labels: tf.Tensor1D;
  oneHot: tf.Tensor2D;
  numClasses: number;
}

// Seeded class-conditional Gaussian blobs rendered as small images.
export function syntheticDataset(samples: number, size: number,
                                 numClasses: number, seed: number): Dataset {
  const rng = new SplitMix64(seed);
  const channels = 3;
  const dim = size * size * channels;
  const means: number[][] = [];
  for (let c = 0; c < numClasses; c++) {
    means.push(Array.from({ length: dim }, () => 2 * rng.random() - 1));
  }
  const data = new Float32Array(samples * dim);
  const labels = new Int32Array(samples);
  for (let i = 0; i < samples; i++) {
    const c = i % numClasses;
    labels[i] = c;
    for (let j = 0; j < dim; j++) {
      data[i * dim + j] = means[c][j] + 0.3 * rng.normal();
    }
  }
  const images = tf.tensor4d(data, [samples, size, size, channels]);
  const labelTensor = tf.tensor1d(labels, "int32");
  return {
    images,
    labels: labelTensor,
    oneHot: tf.oneHot(labelTensor, numClasses) as tf.Tensor2D,
    numClasses,
  };
}

export interface SplitDataset {
  train: Dataset;
  test: Dataset;
}

export function holdoutSplit(ds: Dataset, testFraction = 0.2): SplitDataset {
  const total = ds.images.shape[0];
  const testCount = Math.max(1, Math.floor(total * testFraction));
  const trainCount = total - testCount;
  const take = (start: number, count: number): Dataset => ({
    images: tf.slice(ds.images, [start, 0, 0, 0],
                     [count, -1, -1, -1]) as tf.Tensor4D,
    labels: tf.slice(ds.labels, [start], [count]) as tf.Tensor1D,
    oneHot: tf.slice(ds.oneHot, [start, 0], [count, -1]) as tf.Tensor2D,
    numClasses: ds.numClasses,
  });
  return { train: take(0, trainCount), test: take(trainCount, testCount) };
}
