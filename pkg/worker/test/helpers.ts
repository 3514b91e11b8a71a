/**
 * Test fixtures: a small synthetic classification dataset in CIFAR-10
 * binary layout. Training images are class glyphs rendered at a fixed
 * brightness and a narrow contrast band; validation images draw both from
 * much wider ranges. Augmentation policies rich in photometric operations
 * (AutoContrast, Equalize, Brightness, Contrast) train a model that stays
 * accurate across that wider range, so they measurably raise validation
 * accuracy over identity augmentation.
 */

import * as fs from "fs";
import * as os from "os";
import * as path from "path";

import { Dataset, IMAGE_SIZE, saveCifar10Binary } from "../src/dataset";
import { OPERATION_KINDS, OperationKind, SubPolicy } from "../src/protocol";
import { Rng } from "../src/rng";

const NUM_CLASSES = 10;
const CELLS = 8;

function classPattern(seed: number, cls: number): Int8Array {
  const rng = new Rng(seed, 10_000 + cls);
  const pat = new Int8Array(CELLS * CELLS);
  for (let i = 0; i < pat.length; i++) pat[i] = rng.random() < 0.5 ? -1 : 1;
  return pat;
}

function renderSample(pattern: Int8Array, rng: Rng, wideRange: boolean): Uint8Array {
  const scale = IMAGE_SIZE / CELLS;
  const amp = wideRange ? rng.uniform(8, 95) : rng.uniform(20, 35);
  const base = wideRange ? rng.uniform(50, 205) : 128;
  const img = new Uint8Array(IMAGE_SIZE * IMAGE_SIZE * 3);
  for (let y = 0; y < IMAGE_SIZE; y++) {
    for (let x = 0; x < IMAGE_SIZE; x++) {
      const cell = pattern[Math.floor(y / scale) * CELLS + Math.floor(x / scale)];
      for (let c = 0; c < 3; c++) {
        const v = base + amp * cell + rng.uniform(-10, 10);
        img[(y * IMAGE_SIZE + x) * 3 + c] = Math.max(0, Math.min(255, Math.round(v)));
      }
    }
  }
  return img;
}

export function syntheticInvariance(
  count: number,
  seed: number,
  transformed: boolean,
): Dataset {
  const patterns = Array.from({ length: NUM_CLASSES }, (_, c) => classPattern(seed, c));
  const images = new Uint8Array(count * IMAGE_SIZE * IMAGE_SIZE * 3);
  const labels = new Uint8Array(count);
  for (let i = 0; i < count; i++) {
    const label = i % NUM_CLASSES;
    labels[i] = label;
    const rng = new Rng(seed, (transformed ? 2_000_000 : 1_000_000) + i);
    const img = renderSample(patterns[label], rng, transformed);
    images.set(img, i * IMAGE_SIZE * IMAGE_SIZE * 3);
  }
  return { images, labels, count, numClasses: NUM_CLASSES };
}

/** Write train/val fixture files; returns their paths. */
export function writeFixtureDataset(
  nTrain: number,
  nVal: number,
  seed: number,
): { dir: string; trainPath: string; valPath: string } {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "worker-fixture-"));
  const trainPath = path.join(dir, "train.bin");
  const valPath = path.join(dir, "val.bin");
  saveCifar10Binary(syntheticInvariance(nTrain, seed, false), trainPath);
  saveCifar10Binary(syntheticInvariance(nVal, seed, true), valPath);
  return { dir, trainPath, valPath };
}

export const IDENTITY_POLICY: SubPolicy[] = [
  [
    ["Invert", 0, 0],
    ["Invert", 0, 0],
  ],
];

/** Parse the search side's policy text format: "(Kind,0.x,m)&(Kind,0.x,m)" lines. */
export function parsePolicyText(text: string): SubPolicy[] {
  const kinds = new Set<string>(OPERATION_KINDS);
  const policy: SubPolicy[] = [];
  for (const line of text.split("\n")) {
    if (line.trim() === "") continue;
    const ops = line.trim().split("&").map((part) => {
      const m = /^\((\w+),([\d.]+),(\d)\)$/.exec(part.trim());
      if (!m || !kinds.has(m[1])) throw new Error(`bad policy line: ${line}`);
      const prob = Math.round(parseFloat(m[2]) * 10);
      return [m[1] as OperationKind, prob, parseInt(m[3], 10)] as const;
    });
    if (ops.length !== 2) throw new Error(`bad policy line: ${line}`);
    policy.push([[...ops[0]], [...ops[1]]] as SubPolicy);
  }
  return policy;
}
