"""Scikit-learn style wrappers.

``PolicyAugmenter`` is a transformer that applies an augmentation policy
to a batch of images; ``PolicySearch`` is an estimator whose ``fit`` runs
the policy search against the built-in child model and exposes the
concatenated best policy. Both compose with sklearn pipelines via
``get_params``/``set_params``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .controller import run_search
from .datasets import LabeledDataset
from .evaluation import ChildConfig, make_evaluator, top_k_concat
from .policy import BUILTIN_POLICIES, Policy, load_builtin_policy, parse_policy
from .pipeline import AugmentPipeline, run_pipeline
from .rng import stream_rng

__all__ = ["PolicyAugmenter", "PolicySearch"]


def _check_images(X) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim != 4 or X.shape[3] != 3 or X.dtype != np.uint8:
        raise ValueError(f"expected (N, H, W, 3) uint8 images, got {X.dtype} {X.shape}")
    return X


def _resolve_policy(policy) -> Policy | None:
    if policy is None or isinstance(policy, Policy):
        return policy
    if isinstance(policy, str):
        if policy in BUILTIN_POLICIES:
            return load_builtin_policy(policy)
        return parse_policy(policy)
    raise ValueError(f"policy must be a Policy, builtin name or policy text, got {type(policy)}")


class PolicyAugmenter(TransformerMixin, BaseEstimator):
    """Apply an augmentation policy to batches of 8-bit RGB images.

    Parameters mirror the pipeline stages: optional flip/pad/crop
    baseline, the policy itself (a ``Policy``, a builtin name such as
    ``"cifar10"``, or policy text), and an optional fixed cutout.
    Each image i is augmented from the stream ``(seed, offset + i)`` so
    transforms are reproducible and order-independent.
    """

    def __init__(self, policy="cifar10", seed=0, baseline_pad=None, cutout_size=None):
        self.policy = policy
        self.seed = seed
        self.baseline_pad = baseline_pad
        self.cutout_size = cutout_size

    def fit(self, X, y=None):
        _check_images(X)
        self.policy_ = _resolve_policy(self.policy)
        self.pipeline_ = AugmentPipeline(self.baseline_pad, self.policy_, self.cutout_size)
        return self

    def transform(self, X, stream_offset: int = 0):
        check_is_fitted(self, "pipeline_")
        X = _check_images(X)
        out = np.empty_like(X)
        for i in range(len(X)):
            rng = stream_rng(self.seed, stream_offset + i)
            out[i] = run_pipeline(self.pipeline_, X[i], rng)
        return out


class PolicySearch(BaseEstimator):
    """Search for an augmentation policy on labeled image data.

    ``fit(X, y)`` splits off a validation fraction, runs the chosen
    search algorithm with the built-in child as reward, and stores the
    top-k concatenated policy in ``best_policy_``.
    """

    def __init__(
        self,
        algorithm="ppo",
        budget=200,
        seed=0,
        val_fraction=0.1,
        top_k=5,
        epochs=8,
        threads=1,
    ):
        self.algorithm = algorithm
        self.budget = budget
        self.seed = seed
        self.val_fraction = val_fraction
        self.top_k = top_k
        self.epochs = epochs
        self.threads = threads

    def fit(self, X, y):
        X = _check_images(X)
        y = np.asarray(y, dtype=np.int64)
        n = len(X)
        n_val = max(1, int(n * self.val_fraction))
        perm = stream_rng(self.seed, 9).permutation(n)
        val_idx, train_idx = perm[:n_val], perm[n_val:]
        k = int(y.max()) + 1
        train = LabeledDataset(X[train_idx], y[train_idx], k)
        val = LabeledDataset(X[val_idx], y[val_idx], k)
        evaluator = make_evaluator(train, val, ChildConfig(epochs=self.epochs))
        self.log_ = run_search(
            self.algorithm, evaluator, self.budget, self.seed, threads=self.threads
        )
        self.best_policy_ = top_k_concat(self.log_, self.top_k)
        self.best_reward_ = max(e.reward for e in self.log_.entries if e.ok)
        return self

    def transform(self, X):
        check_is_fitted(self, "best_policy_")
        return PolicyAugmenter(self.best_policy_, seed=self.seed).fit(X).transform(X)
