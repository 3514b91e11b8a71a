"""Policy reward evaluation.

The built-in child is a one-hidden-layer perceptron over standardized
raw pixels, trained with the cosine-decay / weight-decay recipe, with the
candidate policy applied per example per epoch in the 8-bit domain before
standardization. Its final validation accuracy is the search reward.

``ExternalEvaluator`` speaks a line-delimited JSON protocol over a worker
subprocess's stdin/stdout so heavier child models (any language) can plug
into the same search loop.
"""

from __future__ import annotations

import json
import math
import subprocess
import threading
from dataclasses import dataclass, replace

import numpy as np

from . import codec
from .controller import Evaluator, SearchLog
from .datasets import LabeledDataset, compute_channel_stats, standardize_images
from .pipeline import AugmentPipeline, run_pipeline
from .policy import (
    MAG_LEVELS,
    PROB_LEVELS,
    BatchContext,
    OperationKind,
    OperationSpec,
    Policy,
    SubPolicy,
    policy_to_json,
)
from .rng import RngStream, stream_rng

__all__ = [
    "ChildConfig",
    "RewardRecord",
    "evaluate_policy",
    "make_evaluator",
    "ExternalEvaluator",
    "ProtocolError",
    "top_k_concat",
    "randomize_prob_mag",
    "sample_random_policy",
    "subpolicy_subset_sweep",
]


@dataclass
class ChildConfig:
    epochs: int = 5
    batch_size: int = 32
    hidden: int = 64
    learning_rate: float = 0.01
    weight_decay: float = 1e-4
    baseline_pad: int | None = None
    cutout_size: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class RewardRecord:
    tokens: list[int] | None
    policy: Policy
    reward: float
    evaluator_id: str
    seed: int
    duration: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.reward <= 1.0:
            raise ValueError(f"reward must be in [0, 1], got {self.reward}")


def _relu(x):
    return np.maximum(x, 0.0)


def evaluate_policy(
    p: Policy | None,
    train: LabeledDataset,
    val: LabeledDataset,
    cfg: ChildConfig,
) -> float:
    """Train the built-in child under the policy; return val accuracy.

    Fully deterministic given cfg.seed. The augmentation stream is
    separate from the child's init/shuffle stream, so the identity policy
    reproduces the unaugmented run bit for bit.
    """
    if len(train) == 0 or len(val) == 0:
        raise ValueError("train and val must be non-empty")
    if len(np.unique(train.labels)) < 2:
        raise ValueError("degenerate dataset: a single class cannot be learned")

    stats = compute_channel_stats(train)
    n = len(train)
    d = int(np.prod(train.images.shape[1:]))
    k = train.num_classes
    hid = cfg.hidden

    child_rng = stream_rng(cfg.seed, 0)
    aug_rng = stream_rng(cfg.seed, 1)
    pipeline = AugmentPipeline(cfg.baseline_pad, p, cfg.cutout_size)
    augmenting = (
        pipeline.baseline_pad is not None
        or pipeline.policy is not None
        or (pipeline.cutout_size or 0) > 0
    )

    w1 = (child_rng.standard_normal((d, hid)) * math.sqrt(2.0 / d)).astype(np.float32)
    b1 = np.zeros(hid, dtype=np.float32)
    w2 = (child_rng.standard_normal((hid, k)) * math.sqrt(2.0 / hid)).astype(np.float32)
    b2 = np.zeros(k, dtype=np.float32)

    steps_total = cfg.epochs * math.ceil(n / cfg.batch_size)
    step = 0
    for _ in range(cfg.epochs):
        perm = child_rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            raw = train.images[idx]
            if augmenting:
                batch_imgs = list(raw)
                aug = np.empty_like(raw)
                for i in range(len(idx)):
                    ctx = BatchContext(batch_imgs, current=i)
                    aug[i] = run_pipeline(pipeline, raw[i], aug_rng, ctx)
                raw = aug
            x = standardize_images(raw, stats).reshape(len(idx), d)
            y = train.labels[idx]

            # forward
            h_pre = x @ w1 + b1
            h = _relu(h_pre)
            logits = h @ w2 + b2
            logits -= logits.max(axis=1, keepdims=True)
            e = np.exp(logits)
            probs = e / e.sum(axis=1, keepdims=True)

            # backward (mean cross-entropy)
            dlogits = probs
            dlogits[np.arange(len(idx)), y] -= 1.0
            dlogits /= len(idx)
            dw2 = h.T @ dlogits + cfg.weight_decay * w2
            db2 = dlogits.sum(axis=0)
            dh = dlogits @ w2.T
            dh[h_pre <= 0] = 0.0
            dw1 = x.T @ dh + cfg.weight_decay * w1
            db1 = dh.sum(axis=0)

            lr = 0.5 * cfg.learning_rate * (1.0 + math.cos(math.pi * step / steps_total))
            w1 -= np.float32(lr) * dw1
            b1 -= np.float32(lr) * db1
            w2 -= np.float32(lr) * dw2
            b2 -= np.float32(lr) * db2
            step += 1

    xv = standardize_images(val.images, stats).reshape(len(val), d)
    pred = (_relu(xv @ w1 + b1) @ w2 + b2).argmax(axis=1)
    return float((pred == val.labels).mean())


def make_evaluator(
    train: LabeledDataset, val: LabeledDataset, cfg: ChildConfig | None = None
) -> Evaluator:
    """Bind a dataset and child recipe into an ``evaluator(policy, seed)``."""
    cfg = cfg or ChildConfig()

    def evaluator(p: Policy, seed: int) -> float:
        return evaluate_policy(p, train, val, replace(cfg, seed=seed))

    return evaluator


# ---------------------------------------------------------------------------
# external evaluator protocol


class ProtocolError(RuntimeError):
    pass


class ExternalEvaluator:
    """JSONL request/response over a worker subprocess's stdio.

    One request line per evaluation: ``{"id", "policy", "seed",
    "train_size"}``; the worker answers one ``{"id", "reward"}`` line.
    Timeouts, malformed responses, id mismatches and out-of-range rewards
    raise ProtocolError.
    """

    def __init__(self, command: list[str], timeout: float = 600.0, train_size: int | None = None):
        self.command = list(command)
        self.timeout = timeout
        self.train_size = train_size
        self._next_id = 0
        self._lock = threading.Lock()
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def _read_line(self) -> str:
        result: list[str] = []

        def reader():
            result.append(self._proc.stdout.readline())

        t = threading.Thread(target=reader, daemon=True)
        t.start()
        t.join(self.timeout)
        if t.is_alive() or not result or not result[0]:
            raise ProtocolError(f"worker did not answer within {self.timeout}s")
        return result[0]

    def evaluate(self, p: Policy, seed: int) -> float:
        with self._lock:
            req_id = self._next_id
            self._next_id += 1
            request = {"id": req_id, "policy": policy_to_json(p), "seed": int(seed)}
            if self.train_size is not None:
                request["train_size"] = self.train_size
            try:
                self._proc.stdin.write(json.dumps(request, separators=(",", ":")) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, ValueError) as exc:
                raise ProtocolError(f"worker pipe closed: {exc}") from exc
            line = self._read_line()
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed worker response: {line!r}") from exc
        if response.get("id") != req_id:
            raise ProtocolError(f"response id {response.get('id')} != request id {req_id}")
        if "error" in response:
            raise ProtocolError(f"worker error: {response['error']}")
        reward = response.get("reward")
        if not isinstance(reward, (int, float)) or not 0.0 <= float(reward) <= 1.0:
            raise ProtocolError(f"reward outside [0, 1]: {reward!r}")
        return float(reward)

    __call__ = evaluate

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except Exception:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def external_evaluate(p: Policy, worker: ExternalEvaluator, seed: int = 0) -> float:
    return worker.evaluate(p, seed)


# ---------------------------------------------------------------------------
# post-processing and ablations


def top_k_concat(log: SearchLog, k: int) -> Policy:
    """Concatenate the sub-policies of the k best distinct entries,
    in reward-descending order (earlier discovery wins ties)."""
    best = log.top_k(k)
    subs: list[SubPolicy] = []
    for rec in best:
        subs.extend(codec.decode_tokens(rec.tokens).sub_policies)
    return Policy(tuple(subs))


def randomize_prob_mag(p: Policy, rng: RngStream) -> Policy:
    """Keep every operation kind, resample its probability and magnitude."""
    subs = []
    for sp in p.sub_policies:
        ops = tuple(
            OperationSpec(
                spec.kind,
                int(rng.integers(0, PROB_LEVELS)),
                int(rng.integers(0, MAG_LEVELS)),
            )
            for spec in sp.ops
        )
        subs.append(SubPolicy(ops))
    return Policy(tuple(subs))


def sample_random_policy(n_sub: int, rng: RngStream) -> Policy:
    if n_sub < 1:
        raise ValueError("need at least one sub-policy")
    kinds = list(OperationKind)
    subs = []
    for _ in range(n_sub):
        ops = tuple(
            OperationSpec(
                kinds[int(rng.integers(0, len(kinds)))],
                int(rng.integers(0, PROB_LEVELS)),
                int(rng.integers(0, MAG_LEVELS)),
            )
            for _ in range(2)
        )
        subs.append(SubPolicy(ops))
    return Policy(tuple(subs))


def subpolicy_subset_sweep(
    pool: list[SubPolicy],
    sizes: list[int],
    repeats: int,
    evaluator: Evaluator,
    rng: RngStream,
) -> dict:
    """Evaluate random subsets of a sub-policy pool at each size.

    Reports mean and min/max validation error per size. A size equal to
    the pool size evaluates the full pool exactly once.
    """
    if not pool:
        raise ValueError("pool must be non-empty")
    report: dict = {"pool_size": len(pool), "repeats": repeats, "sizes": {}}
    for size in sizes:
        if not 1 <= size <= len(pool):
            raise ValueError(f"subset size {size} out of range 1..{len(pool)}")
        n_rep = 1 if size == len(pool) else repeats
        errors = []
        for _ in range(n_rep):
            idx = rng.choice(len(pool), size=size, replace=False)
            policy = Policy(tuple(pool[i] for i in idx))
            seed = int(rng.integers(0, 2**31))
            errors.append(1.0 - evaluator(policy, seed))
        report["sizes"][size] = {
            "mean_error": float(np.mean(errors)),
            "min_error": float(np.min(errors)),
            "max_error": float(np.max(errors)),
            "errors": [float(e) for e in errors],
        }
    return report
