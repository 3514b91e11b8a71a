"""Discrete augmentation policies and their stochastic application.

A policy is an ordered list of sub-policies; a sub-policy is exactly two
operations, each carrying a probability index (0..10, probability =
index/10) and a magnitude index (0..9). Applying a policy to an image
draws one sub-policy uniformly, then gates each of its two operations on
its probability; applied operations use the magnitude index mapped onto
the operation's parameter range.

The text format is one sub-policy per line, e.g.::

    (Invert,0.1,7)&(Contrast,0.2,6)

which is also the format of the three policy files shipped under
``augsearch/policies/``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from . import image as img_ops
from .image import ImageArray
from .rng import RngStream

__all__ = [
    "OperationKind",
    "OperationSpec",
    "SubPolicy",
    "Policy",
    "BatchContext",
    "magnitude_value",
    "apply_operation",
    "apply_sub_policy",
    "apply_policy",
    "parse_policy",
    "serialize_policy",
    "policy_to_json",
    "policy_from_json",
    "search_space_size",
    "load_builtin_policy",
    "identity_policy",
    "BUILTIN_POLICIES",
    "PROB_LEVELS",
    "MAG_LEVELS",
    "REFERENCE_IMAGE_SIZE",
]

PROB_LEVELS = 11
MAG_LEVELS = 10

# Magnitude ranges are anchored at this image size; pixel-valued
# magnitudes (translation, cutout) scale linearly with the actual size.
REFERENCE_IMAGE_SIZE = 331

BUILTIN_POLICIES = ("cifar10", "svhn", "imagenet")


class OperationKind(enum.Enum):
    SHEAR_X = "ShearX"
    SHEAR_Y = "ShearY"
    TRANSLATE_X = "TranslateX"
    TRANSLATE_Y = "TranslateY"
    ROTATE = "Rotate"
    AUTO_CONTRAST = "AutoContrast"
    INVERT = "Invert"
    EQUALIZE = "Equalize"
    SOLARIZE = "Solarize"
    POSTERIZE = "Posterize"
    CONTRAST = "Contrast"
    COLOR = "Color"
    BRIGHTNESS = "Brightness"
    SHARPNESS = "Sharpness"
    CUTOUT = "Cutout"
    SAMPLE_PAIRING = "SamplePairing"


_KIND_BY_NAME = {k.value: k for k in OperationKind}

_SIGNED_MAX = {
    OperationKind.SHEAR_X: 0.3,
    OperationKind.SHEAR_Y: 0.3,
    OperationKind.TRANSLATE_X: 150.0,
    OperationKind.TRANSLATE_Y: 150.0,
    OperationKind.ROTATE: 30.0,
}

_ENHANCERS = {
    OperationKind.CONTRAST: "contrast",
    OperationKind.COLOR: "color",
    OperationKind.BRIGHTNESS: "brightness",
    OperationKind.SHARPNESS: "sharpness",
}

_PIXEL_VALUED = {OperationKind.TRANSLATE_X, OperationKind.TRANSLATE_Y, OperationKind.CUTOUT}

_IGNORES_MAGNITUDE = {OperationKind.AUTO_CONTRAST, OperationKind.INVERT, OperationKind.EQUALIZE}


@dataclass(frozen=True)
class OperationSpec:
    kind: OperationKind
    prob_index: int
    mag_index: int

    def __post_init__(self) -> None:
        if not isinstance(self.kind, OperationKind):
            raise ValueError(f"unknown operation kind {self.kind!r}")
        if not 0 <= self.prob_index < PROB_LEVELS:
            raise ValueError(f"prob_index must be in [0, 10], got {self.prob_index}")
        if not 0 <= self.mag_index < MAG_LEVELS:
            raise ValueError(f"mag_index must be in [0, 9], got {self.mag_index}")

    @property
    def probability(self) -> float:
        return self.prob_index / 10.0


@dataclass(frozen=True)
class SubPolicy:
    ops: tuple[OperationSpec, OperationSpec]

    def __post_init__(self) -> None:
        if len(self.ops) != 2:
            raise ValueError("a sub-policy holds exactly 2 operations")
        object.__setattr__(self, "ops", tuple(self.ops))


@dataclass(frozen=True)
class Policy:
    sub_policies: tuple[SubPolicy, ...]

    def __post_init__(self) -> None:
        if len(self.sub_policies) == 0:
            raise ValueError("a policy needs at least one sub-policy")
        object.__setattr__(self, "sub_policies", tuple(self.sub_policies))

    def __len__(self) -> int:
        return len(self.sub_policies)


@dataclass
class BatchContext:
    """Mini-batch context for SamplePairing partner selection."""

    images: Sequence[ImageArray]
    current: int | None = None

    def partner(self, rng: RngStream) -> ImageArray | None:
        n = len(self.images)
        if n <= 1:
            return None
        idx = int(rng.integers(0, n - 1)) if self.current is not None else int(rng.integers(0, n))
        if self.current is not None and idx >= self.current:
            idx += 1
        return self.images[idx]


def identity_policy(n_sub: int = 1) -> Policy:
    op = OperationSpec(OperationKind.INVERT, 0, 0)
    return Policy(tuple(SubPolicy((op, op)) for _ in range(n_sub)))


def magnitude_value(
    kind: OperationKind, mag_index: int, image_size: int, rng: RngStream
) -> float:
    """Map a magnitude index onto the operation's concrete parameter.

    Index 0 is the least destructive end of the range. Symmetric ranges
    (shear, translate, rotate) and the enhancer deviation from 1.0 get a
    uniformly random sign drawn from ``rng``. Pixel-valued magnitudes
    scale with ``image_size`` relative to the 331-px reference.
    """
    if not 0 <= mag_index < MAG_LEVELS:
        raise ValueError(f"mag_index must be in [0, 9], got {mag_index}")
    frac = mag_index / (MAG_LEVELS - 1)
    if kind in _IGNORES_MAGNITUDE:
        return 0.0
    if kind in _SIGNED_MAX:
        value = frac * _SIGNED_MAX[kind]
        if kind in _PIXEL_VALUED:
            value *= image_size / REFERENCE_IMAGE_SIZE
        sign = 1.0 if rng.random() < 0.5 else -1.0
        return sign * value
    if kind in _ENHANCERS:
        sign = 1.0 if rng.random() < 0.5 else -1.0
        return 1.0 + sign * frac * 0.9
    if kind is OperationKind.SOLARIZE:
        return 256.0 * (1.0 - frac)
    if kind is OperationKind.POSTERIZE:
        return float(int(round(8.0 - frac * 4.0)))
    if kind is OperationKind.CUTOUT:
        return frac * 60.0 * image_size / REFERENCE_IMAGE_SIZE
    if kind is OperationKind.SAMPLE_PAIRING:
        return frac * 0.4
    raise ValueError(f"unknown operation kind {kind!r}")


def apply_operation(
    spec: OperationSpec,
    img: ImageArray,
    rng: RngStream,
    ctx: BatchContext | None = None,
) -> ImageArray:
    """Apply one operation unconditionally (no probability gate)."""
    kind = spec.kind
    size = max(img.shape[0], img.shape[1])
    value = magnitude_value(kind, spec.mag_index, size, rng)
    if kind is OperationKind.SHEAR_X:
        return img_ops.shear_x(img, value)
    if kind is OperationKind.SHEAR_Y:
        return img_ops.shear_y(img, value)
    if kind is OperationKind.TRANSLATE_X:
        return img_ops.translate_x(img, value)
    if kind is OperationKind.TRANSLATE_Y:
        return img_ops.translate_y(img, value)
    if kind is OperationKind.ROTATE:
        return img_ops.rotate(img, value)
    if kind is OperationKind.AUTO_CONTRAST:
        return img_ops.autocontrast(img)
    if kind is OperationKind.INVERT:
        return img_ops.invert(img)
    if kind is OperationKind.EQUALIZE:
        return img_ops.equalize(img)
    if kind is OperationKind.SOLARIZE:
        return img_ops.solarize(img, value)
    if kind is OperationKind.POSTERIZE:
        return img_ops.posterize(img, int(value))
    if kind in _ENHANCERS:
        return img_ops.enhance(img, _ENHANCERS[kind], value)
    if kind is OperationKind.CUTOUT:
        return img_ops.cutout(img, int(round(value)), rng)
    if kind is OperationKind.SAMPLE_PAIRING:
        partner = ctx.partner(rng) if ctx is not None else None
        if partner is None:
            return img.copy()
        return img_ops.sample_pair(img, partner, value)
    raise ValueError(f"unknown operation kind {kind!r}")


def apply_sub_policy(
    sp: SubPolicy,
    img: ImageArray,
    rng: RngStream,
    ctx: BatchContext | None = None,
) -> ImageArray:
    """Gate each of the two operations on its probability, in order."""
    out = img
    for spec in sp.ops:
        if rng.random() < spec.probability:
            out = apply_operation(spec, out, rng, ctx)
    return out


def apply_policy(
    p: Policy,
    img: ImageArray,
    rng: RngStream,
    ctx: BatchContext | None = None,
) -> ImageArray:
    """Draw one sub-policy uniformly, apply it."""
    idx = int(rng.integers(0, len(p.sub_policies)))
    return apply_sub_policy(p.sub_policies[idx], img, rng, ctx)


# ---------------------------------------------------------------------------
# serialization


class PolicyParseError(ValueError):
    pass


_OP_RE = re.compile(r"^\(([A-Za-z]+),([0-9]*\.[0-9]+),([0-9])\)$")


def _format_prob(prob_index: int) -> str:
    return f"{prob_index / 10.0:.1f}"


def serialize_policy(p: Policy) -> str:
    lines = []
    for sp in p.sub_policies:
        parts = [
            f"({spec.kind.value},{_format_prob(spec.prob_index)},{spec.mag_index})"
            for spec in sp.ops
        ]
        lines.append("&".join(parts))
    return "\n".join(lines) + "\n"


def _parse_op(token: str, lineno: int) -> OperationSpec:
    m = _OP_RE.match(token.strip())
    if not m:
        raise PolicyParseError(f"line {lineno}: malformed operation {token!r}")
    name, prob_text, mag_text = m.groups()
    kind = _KIND_BY_NAME.get(name)
    if kind is None:
        raise PolicyParseError(f"line {lineno}: unknown operation kind {name!r}")
    prob = float(prob_text)
    prob_index = round(prob * 10)
    if not 0 <= prob_index <= 10 or abs(prob_index / 10.0 - prob) > 1e-12:
        raise PolicyParseError(
            f"line {lineno}: probability {prob_text} is not on the 0.0..1.0 grid"
        )
    return OperationSpec(kind, prob_index, int(mag_text))


def parse_policy(text: str) -> Policy:
    subs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("&")
        if len(parts) != 2:
            raise PolicyParseError(f"line {lineno}: expected 2 '&'-joined operations")
        subs.append(SubPolicy(tuple(_parse_op(part, lineno) for part in parts)))
    if not subs:
        raise PolicyParseError("no sub-policies found")
    return Policy(tuple(subs))


def policy_to_json(p: Policy) -> list:
    """Structured form: [[[kind, prob, mag], [kind, prob, mag]], ...]."""
    return [
        [[spec.kind.value, spec.prob_index, spec.mag_index] for spec in sp.ops]
        for sp in p.sub_policies
    ]


def policy_from_json(data: list) -> Policy:
    subs = []
    for sp in data:
        if len(sp) != 2:
            raise PolicyParseError("each sub-policy needs exactly 2 operations")
        ops = []
        for entry in sp:
            name, prob_index, mag_index = entry
            kind = _KIND_BY_NAME.get(name)
            if kind is None:
                raise PolicyParseError(f"unknown operation kind {name!r}")
            ops.append(OperationSpec(kind, int(prob_index), int(mag_index)))
        subs.append(SubPolicy(tuple(ops)))
    return Policy(tuple(subs))


def load_builtin_policy(name: str) -> Policy:
    """Load one of the shipped policies: cifar10, svhn, imagenet."""
    if name not in BUILTIN_POLICIES:
        raise ValueError(f"unknown builtin policy {name!r}; choose from {BUILTIN_POLICIES}")
    text = resources.files("augsearch.policies").joinpath(f"{name}.txt").read_text()
    return parse_policy(text)


def search_space_size(num_sub_policies: int) -> int:
    """Exact cardinality of the discretized policy space."""
    if num_sub_policies < 1:
        raise ValueError("need at least one sub-policy")
    per_op = len(OperationKind) * MAG_LEVELS * PROB_LEVELS
    return per_op ** (2 * num_sub_policies)
