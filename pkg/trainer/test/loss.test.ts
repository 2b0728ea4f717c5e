import * as tf from "@tensorflow/tfjs";
import { describe, expect, it } from "vitest";
import { combinedLoss } from "../src/train";

const val = (t: tf.Scalar): number => t.dataSync()[0];

describe("combinedLoss", () => {
  it("halves the sum of feature distance and cross-entropy", () => {
    // ||F' - F||_2 = 3, CE on uniform logits vs a one-hot label = ln 2
    const fPrime = tf.tensor2d([[3, 0, 0, 0]]);
    const f = tf.zeros([1, 4]);
    const logits = tf.tensor2d([[0, 0]]);
    const oneHot = tf.tensor2d([[1, 0]]);
    const parts = combinedLoss(fPrime, f, logits, oneHot);
    expect(val(parts.l2)).toBeCloseTo(3, 5);
    expect(val(parts.ce)).toBeCloseTo(Math.log(2), 5);
    expect(val(parts.loss)).toBeCloseTo(0.5 * (3 + Math.log(2)), 5);
  });

  it("reduces to half the cross-entropy when features match", () => {
    const f = tf.tensor2d([[1, 2, 3]]);
    const logits = tf.tensor2d([[5, -5]]);
    const oneHot = tf.tensor2d([[1, 0]]);
    const parts = combinedLoss(f, f, logits, oneHot);
    expect(val(parts.l2)).toBe(0);
    expect(val(parts.loss)).toBeCloseTo(0.5 * val(parts.ce), 6);
  });

  it("drops the feature term without the constraint", () => {
    const fPrime = tf.tensor2d([[10, 10]]);
    const f = tf.zeros([1, 2]);
    const logits = tf.tensor2d([[0, 0]]);
    const oneHot = tf.tensor2d([[0, 1]]);
    const parts = combinedLoss(fPrime, f, logits, oneHot, false);
    expect(val(parts.l2)).toBe(0);
    expect(val(parts.loss)).toBeCloseTo(0.5 * Math.log(2), 5);
  });
});
