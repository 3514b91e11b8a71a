"""8-bit RGB image kernel.

Images are C-contiguous ``uint8`` arrays of shape ``(height, width, 3)``.
All operations return a new array and never modify their input. The
deterministic operations are bit-compatible with Pillow's implementations
(verified byte-for-byte in the test suite); the quirks that matter for
that compatibility are noted inline:

* blends run in float32 and truncate toward zero,
* the grayscale weights are the 16-bit fixed-point luma coefficients,
* geometric warps use 16.16 fixed-point inverse mapping with
  nearest-neighbor sampling.
"""

from __future__ import annotations

import math

import numpy as np

from .rng import RngStream

__all__ = [
    "new_image",
    "validate_image",
    "invert",
    "solarize",
    "posterize",
    "equalize",
    "autocontrast",
    "enhance",
    "affine",
    "shear_x",
    "shear_y",
    "translate_x",
    "translate_y",
    "rotate",
    "cutout",
    "sample_pair",
    "flip_pad_crop",
    "GRAY_FILL",
]

ImageArray = np.ndarray

GRAY_FILL = 128

_ENHANCE_KINDS = ("contrast", "color", "brightness", "sharpness")


def new_image(width: int, height: int, fill: int = 0) -> ImageArray:
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be >= 1")
    return np.full((height, width, 3), fill, dtype=np.uint8)


def validate_image(img: ImageArray) -> ImageArray:
    if not isinstance(img, np.ndarray):
        raise TypeError("image must be a numpy array")
    if img.dtype != np.uint8 or img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) uint8 image, got {img.dtype} {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image dimensions must be >= 1")
    return img


# ---------------------------------------------------------------------------
# pointwise / per-channel operations


def invert(img: ImageArray) -> ImageArray:
    return 255 - img


def solarize(img: ImageArray, threshold: float) -> ImageArray:
    if not 0 <= threshold <= 256:
        raise ValueError(f"solarize threshold must be in [0, 256], got {threshold}")
    return np.where(img < threshold, img, 255 - img).astype(np.uint8)


def posterize(img: ImageArray, bits: int) -> ImageArray:
    if not 1 <= bits <= 8:
        raise ValueError(f"posterize bits must be in [1, 8], got {bits}")
    mask = np.uint8(0xFF & ~((1 << (8 - bits)) - 1))
    return img & mask


def _equalize_lut(hist: np.ndarray) -> np.ndarray | None:
    nonzero = hist[hist > 0]
    if len(nonzero) <= 1:
        return None
    step = (int(hist.sum()) - int(nonzero[-1])) // 255
    if step == 0:
        return None
    # lut[i] = (step//2 + sum(hist[:i])) // step, clamped
    n = step // 2 + np.concatenate(([0], np.cumsum(hist)[:-1]))
    return np.clip(n // step, 0, 255).astype(np.uint8)


def equalize(img: ImageArray) -> ImageArray:
    out = img.copy()
    for c in range(3):
        ch = img[:, :, c]
        lut = _equalize_lut(np.bincount(ch.ravel(), minlength=256))
        if lut is not None:
            out[:, :, c] = lut[ch]
    return out


def autocontrast(img: ImageArray) -> ImageArray:
    out = img.copy()
    ix = np.arange(256, dtype=np.float64)
    for c in range(3):
        ch = img[:, :, c]
        lo = int(ch.min())
        hi = int(ch.max())
        if hi <= lo:
            continue
        scale = 255.0 / (hi - lo)
        # truncation toward zero, then clamp
        lut = np.clip((ix * scale - lo * scale).astype(np.int64), 0, 255)
        out[:, :, c] = lut.astype(np.uint8)[ch]
    return out


def _luma(img: ImageArray) -> np.ndarray:
    r = img[:, :, 0].astype(np.int64)
    g = img[:, :, 1].astype(np.int64)
    b = img[:, :, 2].astype(np.int64)
    return ((r * 19595 + g * 38470 + b * 7471 + 0x8000) >> 16).astype(np.uint8)


def _smooth(img: ImageArray) -> ImageArray:
    # 3x3 kernel [1,1,1;1,5,1;1,1,1]/13, border copied from the input
    h, w, _ = img.shape
    out = img.copy()
    if h < 3 or w < 3:
        return out
    a = img.astype(np.float64)
    acc = np.zeros((h - 2, w - 2, 3), dtype=np.float64)
    k = ((1, 1, 1), (1, 5, 1), (1, 1, 1))
    for dy in range(3):
        for dx in range(3):
            acc += k[dy][dx] * a[dy : dy + h - 2, dx : dx + w - 2]
    out[1:-1, 1:-1] = np.clip(np.floor(acc / 13.0 + 0.5), 0, 255).astype(np.uint8)
    return out


def _degenerate(img: ImageArray, kind: str) -> ImageArray:
    if kind == "brightness":
        return np.zeros_like(img)
    if kind == "color":
        return np.repeat(_luma(img)[:, :, None], 3, axis=2)
    if kind == "contrast":
        gray = _luma(img)
        mean = int(gray.sum() / gray.size + 0.5)
        return np.full_like(img, mean)
    if kind == "sharpness":
        return _smooth(img)
    raise ValueError(f"unknown enhance kind {kind!r}")


def enhance(img: ImageArray, kind: str, factor: float) -> ImageArray:
    """Blend toward/away from the kind's degenerate image.

    factor 1 is the identity, factor 0 the degenerate; values above 1
    extrapolate. Arithmetic runs in float32 with truncation, matching the
    reference blend.
    """
    if kind not in _ENHANCE_KINDS:
        raise ValueError(f"unknown enhance kind {kind!r}")
    if not (math.isfinite(factor) and factor >= 0):
        raise ValueError(f"enhance factor must be a finite value >= 0, got {factor}")
    deg = _degenerate(img, kind).astype(np.float32)
    t = deg + np.float32(factor) * (img.astype(np.float32) - deg)
    return np.where(t <= 0, 0, np.where(t >= 255, 255, t.astype(np.int64))).astype(np.uint8)


# ---------------------------------------------------------------------------
# geometric operations

_FIX_BITS = 16
_FIX_ONE = 1 << _FIX_BITS


def _fix(v: float) -> int:
    return int(v * _FIX_ONE + (0.5 if v >= 0 else -0.5))


_grid_cache: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def _grid(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    key = (h, w)
    if key not in _grid_cache:
        yy, xx = np.mgrid[0:h, 0:w]
        _grid_cache[key] = (yy.astype(np.int64), xx.astype(np.int64))
    return _grid_cache[key]


def affine(img: ImageArray, matrix: tuple[float, ...], fill: int = GRAY_FILL) -> ImageArray:
    """Inverse-mapped affine warp, nearest sampling, fixed output size.

    ``matrix = (a, b, c, d, e, f)`` maps output pixel centers to source
    coordinates ``(a*x + b*y + c, d*x + e*y + f)``. Evaluated in 16.16
    fixed point for bit-parity with the reference warp.
    """
    for v in matrix:
        if not math.isfinite(v):
            raise ValueError(f"non-finite affine coefficient: {matrix}")
    h, w, _ = img.shape
    a0, a1, a2, a3, a4, a5 = matrix
    y, x = _grid(h, w)
    xin = _fix(a2 + a0 * 0.5 + a1 * 0.5) + x * _fix(a0) + y * _fix(a1)
    yin = _fix(a5 + a3 * 0.5 + a4 * 0.5) + x * _fix(a3) + y * _fix(a4)
    xx = xin >> _FIX_BITS
    yy = yin >> _FIX_BITS
    ok = (xx >= 0) & (xx < w) & (yy >= 0) & (yy < h)
    out = np.full_like(img, fill)
    out[ok] = img[yy[ok], xx[ok]]
    return out


def shear_x(img: ImageArray, v: float, fill: int = GRAY_FILL) -> ImageArray:
    return affine(img, (1.0, v, 0.0, 0.0, 1.0, 0.0), fill)


def shear_y(img: ImageArray, v: float, fill: int = GRAY_FILL) -> ImageArray:
    return affine(img, (1.0, 0.0, 0.0, v, 1.0, 0.0), fill)


def translate_x(img: ImageArray, v: float, fill: int = GRAY_FILL) -> ImageArray:
    return affine(img, (1.0, 0.0, v, 0.0, 1.0, 0.0), fill)


def translate_y(img: ImageArray, v: float, fill: int = GRAY_FILL) -> ImageArray:
    return affine(img, (1.0, 0.0, 0.0, 0.0, 1.0, v), fill)


def rotate(img: ImageArray, degrees: float, fill: int = GRAY_FILL) -> ImageArray:
    """Rotate about the image center by ``degrees``, same output size."""
    if not math.isfinite(degrees):
        raise ValueError("rotation angle must be finite")
    h, w, _ = img.shape
    cx, cy = w / 2.0, h / 2.0
    angle = -math.radians(degrees % 360.0)
    m = [
        round(math.cos(angle), 15),
        round(math.sin(angle), 15),
        0.0,
        round(-math.sin(angle), 15),
        round(math.cos(angle), 15),
        0.0,
    ]
    m[2] = m[0] * -cx + m[1] * -cy + cx
    m[5] = m[3] * -cx + m[4] * -cy + cy
    return affine(img, tuple(m), fill)


# ---------------------------------------------------------------------------
# stochastic operations


def cutout(img: ImageArray, size: int, rng: RngStream) -> ImageArray:
    """Gray out a size x size patch centered uniformly over the image.

    The patch is clipped at the borders, so the effective area can be
    smaller near edges. Draw order: center x, then center y.
    """
    if size < 0:
        raise ValueError(f"cutout size must be >= 0, got {size}")
    if size == 0:
        return img.copy()
    h, w, _ = img.shape
    cx = int(rng.integers(0, w))
    cy = int(rng.integers(0, h))
    x0 = max(cx - size // 2, 0)
    y0 = max(cy - size // 2, 0)
    x1 = min(cx - size // 2 + size, w)
    y1 = min(cy - size // 2 + size, h)
    out = img.copy()
    out[y0:y1, x0:x1] = GRAY_FILL
    return out


def sample_pair(img: ImageArray, partner: ImageArray, weight: float) -> ImageArray:
    """Blend with a partner image: round((1-w)*img + w*partner)."""
    if img.shape != partner.shape:
        raise ValueError(f"dimension mismatch: {img.shape} vs {partner.shape}")
    if not 0 <= weight <= 1:
        raise ValueError(f"sample_pair weight must be in [0, 1], got {weight}")
    a = img.astype(np.float64)
    b = partner.astype(np.float64)
    return np.floor((1.0 - weight) * a + weight * b + 0.5).astype(np.uint8)


def flip_pad_crop(img: ImageArray, rng: RngStream, pad: int) -> ImageArray:
    """Mirror with probability 0.5, zero-pad, crop back to original size.

    Draw order: flip gate, crop x offset, crop y offset.
    """
    if pad < 0:
        raise ValueError(f"pad must be >= 0, got {pad}")
    h, w, _ = img.shape
    out = img
    if rng.random() < 0.5:
        out = out[:, ::-1]
    padded = np.zeros((h + 2 * pad, w + 2 * pad, 3), dtype=np.uint8)
    padded[pad : pad + h, pad : pad + w] = out
    x0 = int(rng.integers(0, 2 * pad + 1))
    y0 = int(rng.integers(0, 2 * pad + 1))
    return padded[y0 : y0 + h, x0 : x0 + w].copy()
