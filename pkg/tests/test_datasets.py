"""Dataset loaders, standardization, and the synthetic benchmark."""

import numpy as np
import pytest
from PIL import Image

from augsearch import datasets as D
from augsearch.datasets import LabeledDataset
from augsearch.rng import stream_rng


def make_dataset(n=20, seed=0, size=32, num_classes=10):
    rng = stream_rng(seed)
    images = rng.integers(0, 256, (n, size, size, 3)).astype(np.uint8)
    labels = (np.arange(n) % num_classes).astype(np.int64)
    return LabeledDataset(images, labels, num_classes)


class TestLabeledDataset:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            LabeledDataset(np.zeros((2, 32, 32), np.uint8), np.zeros(2), 10)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            LabeledDataset(np.zeros((2, 4, 4, 3), np.uint8), np.zeros(3), 10)

    def test_label_out_of_range(self):
        with pytest.raises(ValueError):
            LabeledDataset(np.zeros((1, 4, 4, 3), np.uint8), np.array([10]), 10)

    def test_len(self):
        assert len(make_dataset(7)) == 7


class TestCifarBinary:
    def test_round_trip_single_file(self, tmp_path):
        ds = make_dataset(10, seed=3)
        path = tmp_path / "batch.bin"
        D.save_cifar10_binary(ds, path)
        assert path.stat().st_size == 10 * 3073
        loaded = D.load_cifar10_binary(path)
        assert np.array_equal(loaded.images, ds.images)
        assert np.array_equal(loaded.labels, ds.labels)

    def test_channel_planar_layout(self, tmp_path):
        img = np.zeros((1, 32, 32, 3), np.uint8)
        img[0, 0, 0] = (10, 20, 30)
        ds = LabeledDataset(img, np.array([7]), 10)
        path = tmp_path / "one.bin"
        D.save_cifar10_binary(ds, path)
        raw = np.fromfile(path, dtype=np.uint8)
        assert raw[0] == 7
        assert raw[1] == 10  # red plane first
        assert raw[1 + 1024] == 20  # then green
        assert raw[1 + 2048] == 30  # then blue

    def test_directory_of_batches(self, tmp_path):
        a = make_dataset(4, seed=1)
        b = make_dataset(6, seed=2)
        D.save_cifar10_binary(a, tmp_path / "data_batch_1.bin")
        D.save_cifar10_binary(b, tmp_path / "data_batch_2.bin")
        loaded = D.load_cifar10_binary(tmp_path)
        assert len(loaded) == 10
        assert np.array_equal(loaded.images[:4], a.images)

    def test_truncated_file_rejected(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"\x00" * 3072)
        with pytest.raises(ValueError, match="3073"):
            D.load_cifar10_binary(path)

    def test_bad_label_byte_rejected(self, tmp_path):
        rec = bytearray(3073)
        rec[0] = 11
        path = tmp_path / "bad.bin"
        path.write_bytes(bytes(rec))
        with pytest.raises(ValueError, match="label"):
            D.load_cifar10_binary(path)

    def test_empty_directory_rejected(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            D.load_cifar10_binary(tmp_path)

    def test_wrong_image_size_rejected(self, tmp_path):
        ds = make_dataset(2, size=16)
        with pytest.raises(ValueError):
            D.save_cifar10_binary(ds, tmp_path / "x.bin")


class TestImageDirectory:
    def test_load(self, tmp_path):
        rng = stream_rng(4)
        for i in range(3):
            arr = rng.integers(0, 256, (8, 8, 3)).astype(np.uint8)
            Image.fromarray(arr).save(tmp_path / f"img{i}.png")
        (tmp_path / "manifest.txt").write_text(
            "# comment\nimg0.png 0\nimg1.png 1\nimg2.png 2\n"
        )
        ds = D.load_image_directory(tmp_path)
        assert len(ds) == 3
        assert ds.num_classes == 3
        assert list(ds.labels) == [0, 1, 2]

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            D.load_image_directory(tmp_path)

    def test_malformed_line_reports_number(self, tmp_path):
        (tmp_path / "manifest.txt").write_text("img.png notanumber\n")
        with pytest.raises(ValueError, match=":1:"):
            D.load_image_directory(tmp_path)

    def test_empty_manifest(self, tmp_path):
        (tmp_path / "manifest.txt").write_text("# nothing\n")
        with pytest.raises(ValueError, match="empty"):
            D.load_image_directory(tmp_path)


class TestReduce:
    def test_reduce_deterministic(self):
        ds = make_dataset(50)
        a = D.reduce_dataset(ds, 10, seed=5)
        b = D.reduce_dataset(ds, 10, seed=5)
        assert np.array_equal(a.images, b.images)
        assert len(a) == 10

    def test_reduce_without_replacement(self):
        ds = make_dataset(30)
        # tag each image so duplicates are detectable
        ds.images[:, 0, 0, 0] = np.arange(30)
        sub = D.reduce_dataset(ds, 30, seed=0)
        assert len(set(sub.images[:, 0, 0, 0].tolist())) == 30

    def test_reduce_too_large(self):
        with pytest.raises(ValueError):
            D.reduce_dataset(make_dataset(5), 6, seed=0)


class TestStandardization:
    def test_stats_and_transform(self):
        ds = make_dataset(40, seed=9)
        stats = D.compute_channel_stats(ds)
        x = D.standardize_images(ds.images, stats)
        assert x.dtype == np.float32
        flat = x.reshape(-1, 3)
        assert np.abs(flat.mean(axis=0)).max() < 1e-2
        assert np.abs(flat.std(axis=0) - 1.0).max() < 1e-2

    def test_constant_channel_warns(self):
        img = np.zeros((4, 8, 8, 3), np.uint8)
        ds = LabeledDataset(img, np.zeros(4, np.int64), 10)
        with pytest.warns(UserWarning, match="constant channel"):
            stats = D.compute_channel_stats(ds)
        assert (stats.std == 1.0).all()

    def test_empty_dataset(self):
        ds = LabeledDataset(np.zeros((0, 4, 4, 3), np.uint8), np.zeros(0), 10)
        with pytest.raises(ValueError):
            D.compute_channel_stats(ds)


class TestSynthInvariance:
    def test_shapes_and_determinism(self):
        a = D.synth_invariance(100, seed=1)
        b = D.synth_invariance(100, seed=1)
        for x, y in zip(a, b):
            assert np.array_equal(x.images, y.images)
        train, val, test = a
        assert train.images.shape == (100, 32, 32, 3)
        assert len(val) == 100 and len(test) == 100
        assert train.num_classes == 10

    def test_seed_changes_data(self):
        a, _, _ = D.synth_invariance(100, seed=1)
        b, _, _ = D.synth_invariance(100, seed=2)
        assert not np.array_equal(a.images, b.images)

    def test_labels_balanced(self):
        train, _, _ = D.synth_invariance(200, seed=0)
        counts = np.bincount(train.labels, minlength=10)
        assert (counts == 20).all()

    def test_min_size_enforced(self):
        with pytest.raises(ValueError):
            D.synth_invariance(50, seed=0)

    def test_unknown_invariance_rejected(self):
        with pytest.raises(ValueError, match="unknown invariances"):
            D.synth_invariance(100, seed=0, invariances=("blur",))

    def test_val_distribution_shift_hurts_plain_model(self):
        """A model fit on canonical training images should do much worse on
        the transformed validation split than on held-out canonical data."""
        from augsearch.evaluation import ChildConfig, evaluate_policy

        train, val, _ = D.synth_invariance(400, seed=3, invariances=("invert",))
        canon_train = LabeledDataset(train.images[:300], train.labels[:300], 10)
        canon_holdout = LabeledDataset(train.images[300:], train.labels[300:], 10)
        cfg = ChildConfig(epochs=3, seed=0)
        acc_canon = evaluate_policy(None, canon_train, canon_holdout, cfg)
        acc_shift = evaluate_policy(None, canon_train, val, cfg)
        assert acc_canon > 0.95
        assert acc_shift < acc_canon - 0.3
