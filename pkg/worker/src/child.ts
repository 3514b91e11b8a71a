/**
 * The child model: a small CNN (2 conv blocks + 1 dense softmax) trained
 * on standardized pixels, with the candidate policy applied per example
 * per epoch in the 8-bit domain. Validation accuracy is the reward.
 *
 * Determinism: all weight initializers are seeded, data order comes from
 * our own PRNG, and training runs on the deterministic CPU backend, so
 * identical (policy, seed) requests reproduce the same reward.
 */

import * as tf from "@tensorflow/tfjs";

import { applyPolicy } from "./augment";
import { ChannelStats, Dataset, IMAGE_SIZE, channelStats, imageAt, reduceDataset } from "./dataset";
import { SubPolicy } from "./protocol";
import { Rng } from "./rng";

export interface ChildConfig {
  epochs: number;
  batchSize: number;
  learningRate: number;
}

export const DEFAULT_CHILD: ChildConfig = {
  epochs: 6,
  batchSize: 32,
  learningRate: 0.05,
};

function buildModel(numClasses: number, seed: number): tf.LayersModel {
  // strided convolutions instead of pooling keep the pure-JS CPU backend
  // fast enough for search-time evaluation
  const model = tf.sequential();
  model.add(
    tf.layers.conv2d({
      inputShape: [IMAGE_SIZE, IMAGE_SIZE, 3],
      filters: 4,
      kernelSize: 3,
      strides: 2,
      activation: "relu",
      kernelInitializer: tf.initializers.glorotUniform({ seed }),
    }),
  );
  model.add(
    tf.layers.conv2d({
      filters: 8,
      kernelSize: 3,
      strides: 2,
      activation: "relu",
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 1 }),
    }),
  );
  model.add(tf.layers.flatten());
  model.add(
    tf.layers.dense({
      units: numClasses,
      activation: "softmax",
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 2 }),
    }),
  );
  model.compile({
    optimizer: tf.train.sgd(0), // lr set per step via cosine schedule
    loss: "sparseCategoricalCrossentropy",
  });
  return model;
}

function standardizedBatch(images: Uint8Array[], stats: ChannelStats): tf.Tensor4D {
  const n = images.length;
  const data = new Float32Array(n * IMAGE_SIZE * IMAGE_SIZE * 3);
  let o = 0;
  for (const img of images) {
    for (let i = 0; i < img.length; i += 3) {
      data[o++] = (img[i] - stats.mean[0]) / stats.std[0];
      data[o++] = (img[i + 1] - stats.mean[1]) / stats.std[1];
      data[o++] = (img[i + 2] - stats.mean[2]) / stats.std[2];
    }
  }
  return tf.tensor4d(data, [n, IMAGE_SIZE, IMAGE_SIZE, 3]);
}

/**
 * Train the child under `policy` (null = no augmentation) and return
 * validation accuracy in [0, 1].
 */
export async function evaluatePolicy(
  policy: SubPolicy[] | null,
  train: Dataset,
  val: Dataset,
  seed: number,
  cfg: ChildConfig = DEFAULT_CHILD,
  trainSize?: number,
): Promise<number> {
  if (cfg.epochs < 1) throw new Error("epochs must be >= 1");
  const reduced = trainSize !== undefined && trainSize < train.count
    ? reduceDataset(train, trainSize, seed)
    : train;
  const stats = channelStats(reduced);
  const model = buildModel(reduced.numClasses, seed);
  const orderRng = new Rng(seed, 1);
  const augRng = new Rng(seed, 2);
  const optimizer = model.optimizer as tf.SGDOptimizer;

  const n = reduced.count;
  const stepsTotal = cfg.epochs * Math.ceil(n / cfg.batchSize);
  let step = 0;
  try {
    for (let epoch = 0; epoch < cfg.epochs; epoch++) {
      const order = orderRng.shuffle(Array.from({ length: n }, (_, i) => i));
      for (let start = 0; start < n; start += cfg.batchSize) {
        const idx = order.slice(start, start + cfg.batchSize);
        const raw = idx.map((i) => imageAt(reduced, i));
        const batchImages = policy
          ? raw.map((img, i) => applyPolicy(policy, img, augRng, { images: raw, current: i }))
          : raw;
        const x = standardizedBatch(batchImages, stats);
        const y = tf.tensor1d(idx.map((i) => reduced.labels[i]), "float32");
        const lr = 0.5 * cfg.learningRate * (1 + Math.cos((Math.PI * step) / stepsTotal));
        optimizer.setLearningRate(lr);
        await model.trainOnBatch(x, y);
        x.dispose();
        y.dispose();
        step++;
      }
    }

    const valImages = Array.from({ length: val.count }, (_, i) => imageAt(val, i));
    const xv = standardizedBatch(valImages, stats);
    const pred = tf.tidy(() => (model.predict(xv) as tf.Tensor2D).argMax(1));
    const predData = await pred.data();
    xv.dispose();
    pred.dispose();
    let correct = 0;
    for (let i = 0; i < val.count; i++) {
      if (predData[i] === val.labels[i]) correct++;
    }
    return correct / val.count;
  } finally {
    model.dispose();
  }
}
