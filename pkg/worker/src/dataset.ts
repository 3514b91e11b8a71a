/**
 * CIFAR-10 binary format: records of 3073 bytes — one label byte (0-9)
 * followed by a 32x32 RGB image stored channel-planar (1024 red bytes,
 * then green, then blue). Images are kept as interleaved HWC uint8.
 */

import * as fs from "fs";

import { Rng } from "./rng";

export const IMAGE_SIZE = 32;
export const RECORD_BYTES = 3073;
const PLANE = IMAGE_SIZE * IMAGE_SIZE;

export interface Dataset {
  /** (N * 32 * 32 * 3) interleaved uint8 pixels. */
  images: Uint8Array;
  labels: Uint8Array;
  count: number;
  numClasses: number;
}

export function imageAt(ds: Dataset, i: number): Uint8Array {
  const stride = PLANE * 3;
  return ds.images.subarray(i * stride, (i + 1) * stride);
}

export function loadCifar10Binary(path: string): Dataset {
  const raw = fs.readFileSync(path);
  if (raw.length === 0 || raw.length % RECORD_BYTES !== 0) {
    throw new Error(`${path}: size ${raw.length} is not a multiple of ${RECORD_BYTES}-byte records`);
  }
  const count = raw.length / RECORD_BYTES;
  const images = new Uint8Array(count * PLANE * 3);
  const labels = new Uint8Array(count);
  for (let i = 0; i < count; i++) {
    const rec = raw.subarray(i * RECORD_BYTES, (i + 1) * RECORD_BYTES);
    if (rec[0] > 9) throw new Error(`${path}: record ${i} has label byte ${rec[0]} > 9`);
    labels[i] = rec[0];
    const out = images.subarray(i * PLANE * 3, (i + 1) * PLANE * 3);
    for (let p = 0; p < PLANE; p++) {
      out[p * 3] = rec[1 + p];
      out[p * 3 + 1] = rec[1 + PLANE + p];
      out[p * 3 + 2] = rec[1 + 2 * PLANE + p];
    }
  }
  return { images, labels, count, numClasses: 10 };
}

export function saveCifar10Binary(ds: Dataset, path: string): void {
  const raw = new Uint8Array(ds.count * RECORD_BYTES);
  for (let i = 0; i < ds.count; i++) {
    const rec = raw.subarray(i * RECORD_BYTES, (i + 1) * RECORD_BYTES);
    rec[0] = ds.labels[i];
    const img = imageAt(ds, i);
    for (let p = 0; p < PLANE; p++) {
      rec[1 + p] = img[p * 3];
      rec[1 + PLANE + p] = img[p * 3 + 1];
      rec[1 + 2 * PLANE + p] = img[p * 3 + 2];
    }
  }
  fs.writeFileSync(path, raw);
}

/** Seeded uniform subsample without replacement. */
export function reduceDataset(ds: Dataset, n: number, seed: number): Dataset {
  if (n > ds.count) throw new Error(`cannot sample ${n} from ${ds.count} examples`);
  const idx = new Rng(seed, 7).sampleIndices(ds.count, n);
  const stride = PLANE * 3;
  const images = new Uint8Array(n * stride);
  const labels = new Uint8Array(n);
  idx.forEach((src, dst) => {
    images.set(ds.images.subarray(src * stride, (src + 1) * stride), dst * stride);
    labels[dst] = ds.labels[src];
  });
  return { images, labels, count: n, numClasses: ds.numClasses };
}

export interface ChannelStats {
  mean: [number, number, number];
  std: [number, number, number];
}

export function channelStats(ds: Dataset): ChannelStats {
  const sum = [0, 0, 0];
  const sumSq = [0, 0, 0];
  const n = ds.images.length / 3;
  for (let i = 0; i < ds.images.length; i += 3) {
    for (let c = 0; c < 3; c++) {
      const v = ds.images[i + c];
      sum[c] += v;
      sumSq[c] += v * v;
    }
  }
  const mean = sum.map((s) => s / n) as [number, number, number];
  const std = sumSq.map((s, c) => {
    const v = Math.sqrt(s / n - mean[c] * mean[c]);
    return v > 0 ? v : 1;
  }) as [number, number, number];
  return { mean, std };
}
