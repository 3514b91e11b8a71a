"""Scikit-learn wrapper behavior."""

import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from augsearch.datasets import synth_invariance
from augsearch.estimators import PolicyAugmenter, PolicySearch
from augsearch.policy import identity_policy
from augsearch.rng import stream_rng


def images(n=8, seed=0):
    return stream_rng(seed).integers(0, 256, (n, 32, 32, 3)).astype(np.uint8)


class TestPolicyAugmenter:
    def test_builtin_name_resolves(self):
        aug = PolicyAugmenter(policy="cifar10").fit(images())
        assert len(aug.policy_.sub_policies) == 25

    def test_policy_text_resolves(self):
        aug = PolicyAugmenter(policy="(Invert,1.0,0)&(Invert,0.0,0)").fit(images())
        out = aug.transform(images())
        assert np.array_equal(out, 255 - images())

    def test_identity(self):
        X = images()
        out = PolicyAugmenter(policy=identity_policy()).fit(X).transform(X)
        assert np.array_equal(out, X)

    def test_transform_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            PolicyAugmenter().transform(images())

    def test_deterministic_and_seed_sensitive(self):
        X = images()
        a = PolicyAugmenter(policy="cifar10", seed=1).fit(X).transform(X)
        b = PolicyAugmenter(policy="cifar10", seed=1).fit(X).transform(X)
        c = PolicyAugmenter(policy="cifar10", seed=2).fit(X).transform(X)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_per_image_streams_are_order_independent(self):
        X = images()
        aug = PolicyAugmenter(policy="cifar10", seed=3).fit(X)
        full = aug.transform(X)
        # transforming image i alone with its stream offset reproduces row i
        single = aug.transform(X[4:5], stream_offset=4)
        assert np.array_equal(single[0], full[4])

    def test_rejects_float_input(self):
        with pytest.raises(ValueError, match="uint8"):
            PolicyAugmenter().fit(images().astype(np.float32))

    def test_get_set_params(self):
        aug = PolicyAugmenter()
        aug.set_params(seed=7, cutout_size=16)
        params = aug.get_params()
        assert params["seed"] == 7 and params["cutout_size"] == 16


class TestPolicySearch:
    @pytest.fixture(scope="class")
    @staticmethod
    def fitted():
        train, _, _ = synth_invariance(200, seed=4, invariances=("invert",))
        est = PolicySearch(algorithm="random", budget=12, seed=0, top_k=2, epochs=2)
        return est.fit(train.images, train.labels), train

    def test_fit_attributes(self, fitted):
        est, _ = fitted
        assert len(est.log_.entries) == 12
        assert len(est.best_policy_.sub_policies) == 10  # top_k * 5
        assert 0.0 <= est.best_reward_ <= 1.0

    def test_transform_applies_best_policy(self, fitted):
        est, train = fitted
        out = est.transform(train.images[:4])
        assert out.shape == (4, 32, 32, 3)
        assert out.dtype == np.uint8

    def test_transform_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            PolicySearch().transform(images())

    def test_refit_reproducible(self, fitted):
        est, train = fitted
        again = PolicySearch(algorithm="random", budget=12, seed=0, top_k=2, epochs=2)
        again.fit(train.images, train.labels)
        assert again.best_policy_ == est.best_policy_
        assert again.best_reward_ == est.best_reward_
