/**
 * Image operations and policy application for 32x32 RGB uint8 images
 * (interleaved HWC). These mirror the search side's operation semantics —
 * same kinds, same probability/magnitude discretization — but are an
 * independent implementation; the protocol only exchanges indices.
 */

import { IMAGE_SIZE } from "./dataset";
import { OperationKind, OperationSpec, SubPolicy } from "./protocol";
import { Rng } from "./rng";

const S = IMAGE_SIZE;
const CHANNELS = 3;
const GRAY_FILL = 128;

type Image = Uint8Array; // length S * S * 3

const clampByte = (v: number): number => (v < 0 ? 0 : v > 255 ? 255 : Math.round(v));

export function invert(img: Image): Image {
  const out = new Uint8Array(img.length);
  for (let i = 0; i < img.length; i++) out[i] = 255 - img[i];
  return out;
}

export function solarize(img: Image, threshold: number): Image {
  const out = new Uint8Array(img.length);
  for (let i = 0; i < img.length; i++) out[i] = img[i] < threshold ? img[i] : 255 - img[i];
  return out;
}

export function posterize(img: Image, bits: number): Image {
  const mask = (0xff << (8 - bits)) & 0xff;
  const out = new Uint8Array(img.length);
  for (let i = 0; i < img.length; i++) out[i] = img[i] & mask;
  return out;
}

export function equalize(img: Image): Image {
  const out = new Uint8Array(img.length);
  for (let c = 0; c < CHANNELS; c++) {
    const hist = new Array(256).fill(0);
    for (let i = c; i < img.length; i += CHANNELS) hist[img[i]]++;
    // cumulative LUT mapping the channel's CDF onto the full range
    const total = S * S;
    const lut = new Array(256).fill(0);
    let cum = 0;
    for (let v = 0; v < 256; v++) {
      cum += hist[v];
      lut[v] = Math.round(((cum - hist[v] / 2) * 255) / total);
    }
    for (let i = c; i < img.length; i += CHANNELS) out[i] = lut[img[i]];
  }
  return out;
}

export function autocontrast(img: Image): Image {
  const out = new Uint8Array(img.length);
  for (let c = 0; c < CHANNELS; c++) {
    let lo = 255;
    let hi = 0;
    for (let i = c; i < img.length; i += CHANNELS) {
      if (img[i] < lo) lo = img[i];
      if (img[i] > hi) hi = img[i];
    }
    if (hi <= lo) {
      for (let i = c; i < img.length; i += CHANNELS) out[i] = img[i];
      continue;
    }
    const scale = 255 / (hi - lo);
    for (let i = c; i < img.length; i += CHANNELS) out[i] = clampByte((img[i] - lo) * scale);
  }
  return out;
}

function blend(img: Image, degenerate: Image, factor: number): Image {
  const out = new Uint8Array(img.length);
  for (let i = 0; i < img.length; i++) {
    out[i] = clampByte(degenerate[i] + factor * (img[i] - degenerate[i]));
  }
  return out;
}

function luma(img: Image): Float64Array {
  const out = new Float64Array(S * S);
  for (let p = 0; p < S * S; p++) {
    out[p] = 0.299 * img[p * 3] + 0.587 * img[p * 3 + 1] + 0.114 * img[p * 3 + 2];
  }
  return out;
}

export function enhance(
  img: Image,
  kind: "Contrast" | "Color" | "Brightness" | "Sharpness",
  factor: number,
): Image {
  const degenerate = new Uint8Array(img.length);
  if (kind === "Brightness") {
    // degenerate stays black
  } else if (kind === "Color") {
    const l = luma(img);
    for (let p = 0; p < S * S; p++) {
      const g = clampByte(l[p]);
      degenerate[p * 3] = g;
      degenerate[p * 3 + 1] = g;
      degenerate[p * 3 + 2] = g;
    }
  } else if (kind === "Contrast") {
    const l = luma(img);
    let mean = 0;
    for (let p = 0; p < S * S; p++) mean += l[p];
    const g = clampByte(mean / (S * S));
    degenerate.fill(g);
  } else {
    // Sharpness: 3x3 smoothing (center-weighted), borders copied
    degenerate.set(img);
    for (let y = 1; y < S - 1; y++) {
      for (let x = 1; x < S - 1; x++) {
        for (let c = 0; c < 3; c++) {
          let acc = 0;
          for (let dy = -1; dy <= 1; dy++) {
            for (let dx = -1; dx <= 1; dx++) {
              const w = dx === 0 && dy === 0 ? 5 : 1;
              acc += w * img[((y + dy) * S + (x + dx)) * 3 + c];
            }
          }
          degenerate[(y * S + x) * 3 + c] = clampByte(acc / 13);
        }
      }
    }
  }
  return blend(img, degenerate, factor);
}

/** Inverse-mapped nearest-neighbor affine: out(x,y) = in(a*x+b*y+c, d*x+e*y+f). */
function affine(img: Image, m: [number, number, number, number, number, number]): Image {
  const [a, b, c, d, e, f] = m;
  const out = new Uint8Array(img.length);
  for (let y = 0; y < S; y++) {
    for (let x = 0; x < S; x++) {
      const sx = Math.floor(a * (x + 0.5) + b * (y + 0.5) + c);
      const sy = Math.floor(d * (x + 0.5) + e * (y + 0.5) + f);
      const o = (y * S + x) * 3;
      if (sx >= 0 && sx < S && sy >= 0 && sy < S) {
        const s = (sy * S + sx) * 3;
        out[o] = img[s];
        out[o + 1] = img[s + 1];
        out[o + 2] = img[s + 2];
      } else {
        out[o] = GRAY_FILL;
        out[o + 1] = GRAY_FILL;
        out[o + 2] = GRAY_FILL;
      }
    }
  }
  return out;
}

export const shearX = (img: Image, v: number): Image => affine(img, [1, v, 0, 0, 1, 0]);
export const shearY = (img: Image, v: number): Image => affine(img, [1, 0, 0, v, 1, 0]);
export const translateX = (img: Image, px: number): Image => affine(img, [1, 0, px, 0, 1, 0]);
export const translateY = (img: Image, px: number): Image => affine(img, [1, 0, 0, 0, 1, px]);

export function rotate(img: Image, degrees: number): Image {
  const rad = (degrees * Math.PI) / 180;
  const cos = Math.cos(rad);
  const sin = Math.sin(rad);
  const cx = S / 2;
  const cy = S / 2;
  // rotate about the image center
  return affine(img, [cos, sin, cx - cos * cx - sin * cy, -sin, cos, cy + sin * cx - cos * cy]);
}

export function cutout(img: Image, size: number, rng: Rng): Image {
  const out = new Uint8Array(img);
  if (size <= 0) return out;
  const cx = rng.int(S);
  const cy = rng.int(S);
  const half = Math.floor(size / 2);
  const x0 = Math.max(cx - half, 0);
  const y0 = Math.max(cy - half, 0);
  const x1 = Math.min(cx - half + size, S);
  const y1 = Math.min(cy - half + size, S);
  for (let y = y0; y < y1; y++) {
    for (let x = x0; x < x1; x++) {
      const o = (y * S + x) * 3;
      out[o] = GRAY_FILL;
      out[o + 1] = GRAY_FILL;
      out[o + 2] = GRAY_FILL;
    }
  }
  return out;
}

export function samplePair(img: Image, partner: Image, weight: number): Image {
  const out = new Uint8Array(img.length);
  for (let i = 0; i < img.length; i++) {
    out[i] = clampByte((1 - weight) * img[i] + weight * partner[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// magnitude discretization (10 levels onto each operation's range)

const SIGNED_MAX: Partial<Record<OperationKind, number>> = {
  ShearX: 0.3,
  ShearY: 0.3,
  TranslateX: (150 * S) / 331,
  TranslateY: (150 * S) / 331,
  Rotate: 30,
};

export function magnitudeValue(kind: OperationKind, mag: number, rng: Rng): number {
  const frac = mag / 9;
  const signedMax = SIGNED_MAX[kind];
  if (signedMax !== undefined) {
    const sign = rng.random() < 0.5 ? -1 : 1;
    return sign * frac * signedMax;
  }
  switch (kind) {
    case "Solarize":
      return 256 * (1 - frac);
    case "Posterize":
      return Math.round(8 - frac * 4);
    case "Contrast":
    case "Color":
    case "Brightness":
    case "Sharpness":
      return 1 + (rng.random() < 0.5 ? -1 : 1) * frac * 0.9;
    case "Cutout":
      return Math.round(frac * ((60 * S) / 331));
    case "SamplePairing":
      return frac * 0.4;
    default:
      return 0; // Invert, Equalize, AutoContrast take no magnitude
  }
}

export function applyOperation(
  spec: OperationSpec,
  img: Image,
  rng: Rng,
  batch?: { images: Image[]; current: number },
): Image {
  const [kind, , mag] = spec;
  const value = magnitudeValue(kind, mag, rng);
  switch (kind) {
    case "Invert":
      return invert(img);
    case "Solarize":
      return solarize(img, value);
    case "Posterize":
      return posterize(img, value);
    case "Equalize":
      return equalize(img);
    case "AutoContrast":
      return autocontrast(img);
    case "Contrast":
    case "Color":
    case "Brightness":
    case "Sharpness":
      return enhance(img, kind, value);
    case "ShearX":
      return shearX(img, value);
    case "ShearY":
      return shearY(img, value);
    case "TranslateX":
      return translateX(img, value);
    case "TranslateY":
      return translateY(img, value);
    case "Rotate":
      return rotate(img, value);
    case "Cutout":
      return cutout(img, value, rng);
    case "SamplePairing": {
      if (!batch || batch.images.length < 2) return img;
      let j = rng.int(batch.images.length - 1);
      if (j >= batch.current) j++; // never pair with itself
      return samplePair(img, batch.images[j], value);
    }
  }
}

/** Draw one sub-policy uniformly and apply its two gated operations. */
export function applyPolicy(
  policy: SubPolicy[],
  img: Image,
  rng: Rng,
  batch?: { images: Image[]; current: number },
): Image {
  const sub = policy[rng.int(policy.length)];
  let out = img;
  for (const spec of sub) {
    const prob = spec[1] / 10;
    if (rng.random() < prob) out = applyOperation(spec, out, rng, batch);
  }
  return out;
}
