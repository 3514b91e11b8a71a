"""Token-sequence encoding of 5-sub-policy policies.

The search operates over sequences of 30 discrete decisions: for each of
5 sub-policies, two operations, each decided as (kind, probability,
magnitude) in that order. Position t therefore has vocabulary size 16,
11 or 10 according to t mod 3.
"""

from __future__ import annotations

from .policy import (
    MAG_LEVELS,
    PROB_LEVELS,
    OperationKind,
    OperationSpec,
    Policy,
    SubPolicy,
)
from .rng import RngStream

__all__ = [
    "SEQUENCE_LENGTH",
    "VOCAB_SIZES",
    "TokenDecodeError",
    "decode_tokens",
    "encode_policy",
    "mutate",
    "validate_tokens",
]

NUM_SUB_POLICIES = 5
SEQUENCE_LENGTH = NUM_SUB_POLICIES * 2 * 3  # 30

_KINDS = list(OperationKind)
_KIND_INDEX = {k: i for i, k in enumerate(_KINDS)}

# per-position vocabulary, period 3: (kind, prob, mag)
VOCAB_SIZES = tuple(
    (len(_KINDS), PROB_LEVELS, MAG_LEVELS)[t % 3] for t in range(SEQUENCE_LENGTH)
)


class TokenDecodeError(ValueError):
    pass


def validate_tokens(tokens) -> list[int]:
    toks = [int(t) for t in tokens]
    if len(toks) != SEQUENCE_LENGTH:
        raise TokenDecodeError(f"expected {SEQUENCE_LENGTH} tokens, got {len(toks)}")
    for t, (tok, vocab) in enumerate(zip(toks, VOCAB_SIZES)):
        if not 0 <= tok < vocab:
            raise TokenDecodeError(f"token {tok} at position {t} exceeds vocab {vocab}")
    return toks


def decode_tokens(tokens) -> Policy:
    toks = validate_tokens(tokens)
    subs = []
    for s in range(NUM_SUB_POLICIES):
        ops = []
        for o in range(2):
            base = (s * 2 + o) * 3
            ops.append(OperationSpec(_KINDS[toks[base]], toks[base + 1], toks[base + 2]))
        subs.append(SubPolicy(tuple(ops)))
    return Policy(tuple(subs))


def encode_policy(p: Policy) -> list[int]:
    if len(p.sub_policies) != NUM_SUB_POLICIES:
        raise ValueError(
            f"token encoding covers exactly {NUM_SUB_POLICIES} sub-policies, got {len(p)}"
        )
    tokens: list[int] = []
    for sp in p.sub_policies:
        for spec in sp.ops:
            tokens.extend((_KIND_INDEX[spec.kind], spec.prob_index, spec.mag_index))
    return tokens


def mutate(tokens, rng: RngStream) -> list[int]:
    """Resample one uniformly chosen position over its vocabulary."""
    toks = validate_tokens(tokens)
    pos = int(rng.integers(0, SEQUENCE_LENGTH))
    toks[pos] = int(rng.integers(0, VOCAB_SIZES[pos]))
    return toks
