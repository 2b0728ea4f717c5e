import * as tf from "@tensorflow/tfjs";
import { SplitMix64 } from "./rng";

export interface Preset {
  name: string;
  widths: number[];        // unscaled gene bound per sub-network
  blocksPerSubnet: number; // genes per sub-network
  inputSize: number;
  numClasses: number;
  widthScale: number;      // smoke runs shrink channel counts
}

export function presetSpec(name: string, smoke: boolean,
                           numClasses?: number): Preset {
  if (name === "resnet56") {
    return {
      name, widths: [16, 32, 64], blocksPerSubnet: 9, inputSize: 8,
      numClasses: numClasses ?? 10, widthScale: smoke ? 0.25 : 1,
    };
  }
  if (name === "tiny") {
    return {
      name, widths: [4, 8], blocksPerSubnet: 2, inputSize: 4,
      numClasses: numClasses ?? 2, widthScale: 1,
    };
  }
  throw new Error(`unknown preset ${name}`);
}

export function numSubnets(preset: Preset): number {
  return preset.widths.length;
}

export function geneBounds(preset: Preset, subnet: number): number[] {
  return Array(preset.blocksPerSubnet).fill(preset.widths[subnet]);
}

export function scaledWidth(preset: Preset, width: number): number {
  return Math.max(1, Math.round(width * preset.widthScale));
}

export function subnetInputShape(preset: Preset, subnet: number):
  [number, number, number] {
  // the stride-2 first block halves the size, so subnet i receives the
  // previous sub-network's output resolution
  const size = preset.inputSize >> Math.max(0, subnet - 1);
  const channels = subnet === 0 ? 3 : scaledWidth(preset, preset.widths[subnet - 1]);
  return [size, size, channels];
}

function conv(filters: number, kernel: number, strides: number,
              name: string, rng: SplitMix64, activation?: "relu") {
  return tf.layers.conv2d({
    filters, kernelSize: kernel, strides, padding: "same", activation,
    kernelInitializer: tf.initializers.glorotUniform({ seed: rng.int32() }),
    name,
  });
}

function residualBlock(x: tf.SymbolicTensor, filtersMid: number,
                       filtersOut: number, stride: number, prefix: string,
                       rng: SplitMix64): tf.SymbolicTensor {
  const inChannels = x.shape[3] as number;
  let y = conv(filtersMid, 3, stride, `${prefix}_c1`, rng, "relu")
    .apply(x) as tf.SymbolicTensor;
  y = conv(filtersOut, 3, 1, `${prefix}_c2`, rng)
    .apply(y) as tf.SymbolicTensor;
  let shortcut = x;
  if (stride !== 1 || inChannels !== filtersOut) {
    shortcut = conv(filtersOut, 1, stride, `${prefix}_sc`, rng)
      .apply(x) as tf.SymbolicTensor;
  }
  const added = tf.layers.add().apply([y, shortcut]) as tf.SymbolicTensor;
  return tf.layers.reLU().apply(added) as tf.SymbolicTensor;
}

// One sub-network: a stack of two-conv residual blocks. The first block
// of every sub-network after the first halves the resolution. Genes set
// the first-conv width of each block; the second conv always restores
// the sub-network's full width so interfaces never change.
export function buildSubnet(preset: Preset, subnet: number,
                            genes: number[] | null,
                            seed: bigint | number): tf.LayersModel {
  const rng = new SplitMix64(seed);
  const bounds = geneBounds(preset, subnet);
  if (genes !== null) {
    if (genes.length !== bounds.length) {
      throw new Error(`expected ${bounds.length} genes, got ${genes.length}`);
    }
    genes.forEach((g, i) => {
      if (g < 1 || g > bounds[i]) {
        throw new Error(`gene ${g} at position ${i} outside [1, ${bounds[i]}]`);
      }
    });
  }
  const input = tf.input({ shape: subnetInputShape(preset, subnet) });
  const outWidth = scaledWidth(preset, preset.widths[subnet]);
  let x = input;
  for (let b = 0; b < preset.blocksPerSubnet; b++) {
    const stride = subnet > 0 && b === 0 ? 2 : 1;
    const mid = scaledWidth(preset, genes ? genes[b] : bounds[b]);
    x = residualBlock(x, mid, outWidth, stride, `s${subnet}_b${b}`, rng);
  }
  return tf.model({ inputs: input, outputs: x, name: `subnet${subnet}` });
}

export function subnetOutputShape(preset: Preset, subnet: number):
  [number, number, number] {
  const size = preset.inputSize >> subnet;
  return [size, size, scaledWidth(preset, preset.widths[subnet])];
}

export function detectorBlockCount(preset: Preset, subnet: number): number {
  return numSubnets(preset) - 1 - subnet;
}

// Feature detector at boundary i: the closer to the output, the fewer
// residual blocks (each halves resolution and doubles channels); the
// final position carries the head alone.
export function buildDetector(preset: Preset, subnet: number,
                              seed: bigint | number): tf.LayersModel {
  const rng = new SplitMix64(seed);
  const input = tf.input({ shape: subnetOutputShape(preset, subnet) });
  let x = input;
  let channels = subnetOutputShape(preset, subnet)[2];
  for (let b = 0; b < detectorBlockCount(preset, subnet); b++) {
    channels *= 2;
    x = residualBlock(x, channels, channels, 2, `d${subnet}_b${b}`, rng);
  }
  x = tf.layers.globalAveragePooling2d({}).apply(x) as tf.SymbolicTensor;
  const logits = tf.layers.dense({
    units: preset.numClasses,
    kernelInitializer: tf.initializers.glorotUniform({ seed: rng.int32() }),
    name: `d${subnet}_head`,
  }).apply(x) as tf.SymbolicTensor;
  return tf.model({ inputs: input, outputs: logits, name: `detector${subnet}` });
}

// Classification head used when briefly training the unpruned network.
export function buildHead(preset: Preset, seed: bigint | number): tf.LayersModel {
  const rng = new SplitMix64(seed);
  const last = numSubnets(preset) - 1;
  const input = tf.input({ shape: subnetOutputShape(preset, last) });
  let x = tf.layers.globalAveragePooling2d({}).apply(input) as tf.SymbolicTensor;
  const logits = tf.layers.dense({
    units: preset.numClasses,
    kernelInitializer: tf.initializers.glorotUniform({ seed: rng.int32() }),
  }).apply(x) as tf.SymbolicTensor;
  return tf.model({ inputs: input, outputs: logits, name: "head" });
}

export function trainableVariables(models: tf.LayersModel[]): tf.Variable[] {
  const vars: tf.Variable[] = [];
  for (const model of models) {
    for (const w of model.trainableWeights) {
      // LayerVariable wraps the backing tf.Variable in .val
      vars.push((w as unknown as { val: tf.Variable }).val);
    }
  }
  return vars;
}

// Copy weights from the unpruned sub-network into a pruned clone.
// Every block inherits a random subset of the original first-conv
// channels (the whole set when the gene is unpruned, so a baseline
// coding reproduces the original exactly); second convs and shortcuts
// copy the matching slices.
export function inheritWeights(pruned: tf.LayersModel,
                               original: tf.LayersModel,
                               preset: Preset, subnet: number,
                               genes: number[], rng: SplitMix64): void {
  for (let b = 0; b < preset.blocksPerSubnet; b++) {
    const prefix = `s${subnet}_b${b}`;
    const origMid = scaledWidth(preset, preset.widths[subnet]);
    const prunedMid = scaledWidth(preset, genes[b]);
    const sel = prunedMid === origMid
      ? Array.from({ length: origMid }, (_, i) => i)
      : rng.choose(origMid, prunedMid);
    const selTensor = tf.tensor1d(sel, "int32");

    const [k1, b1] = original.getLayer(`${prefix}_c1`).getWeights();
    pruned.getLayer(`${prefix}_c1`).setWeights([
      tf.gather(k1, selTensor, 3), tf.gather(b1, selTensor, 0)]);

    const [k2, b2] = original.getLayer(`${prefix}_c2`).getWeights();
    pruned.getLayer(`${prefix}_c2`).setWeights([
      tf.gather(k2, selTensor, 2), b2]);

    try {
      const shortcut = original.getLayer(`${prefix}_sc`);
      pruned.getLayer(`${prefix}_sc`).setWeights(shortcut.getWeights());
    } catch {
      // identity shortcut: nothing to copy
    }
    selTensor.dispose();
  }
}
