"""Augmentation pipeline composition, visualization and benchmarking.

Stage order is fixed: baseline flip/pad/crop, then the learned policy,
then an optional fixed-size cutout. Absent stages are skipped.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import image as img_ops
from .image import ImageArray
from .policy import (
    BatchContext,
    OperationKind,
    OperationSpec,
    Policy,
    apply_operation,
    apply_policy,
    apply_sub_policy,
    serialize_policy,
)
from .rng import RngStream, stream_rng

__all__ = ["AugmentPipeline", "run_pipeline", "render_grid", "bench"]


@dataclass
class AugmentPipeline:
    baseline_pad: int | None = None
    policy: Policy | None = None
    cutout_size: int | None = None


def run_pipeline(
    pl: AugmentPipeline,
    img: ImageArray,
    rng: RngStream,
    ctx: BatchContext | None = None,
) -> ImageArray:
    out = img
    if pl.baseline_pad is not None:
        out = img_ops.flip_pad_crop(out, rng, pl.baseline_pad)
    if pl.policy is not None:
        out = apply_policy(pl.policy, out, rng, ctx)
    if pl.cutout_size is not None and pl.cutout_size > 0:
        out = img_ops.cutout(out, pl.cutout_size, rng)
    return out


def render_grid(
    p: Policy,
    images: list[ImageArray],
    rng: RngStream,
    columns: int,
) -> tuple[np.ndarray, list[str]]:
    """Raster of independent stochastic applications.

    Rows are the policy's sub-policies, columns independent draws; input
    images are cycled across columns. Returns the grid plus a text legend
    (one line per row), kept out of the pixels so outputs stay
    byte-comparable.
    """
    if not images:
        raise ValueError("render_grid needs at least one image")
    if columns < 1:
        raise ValueError("columns must be >= 1")
    h, w, _ = images[0].shape
    rows = len(p.sub_policies)
    grid = np.zeros((rows * h, columns * w, 3), dtype=np.uint8)
    for r, sp in enumerate(p.sub_policies):
        for col in range(columns):
            img = images[col % len(images)]
            cell = apply_sub_policy(sp, img, rng)
            grid[r * h : (r + 1) * h, col * w : (col + 1) * w] = cell
    legend = serialize_policy(p).splitlines()
    return grid, legend


def _bench_ops(img: ImageArray, reps: int, seed: int) -> dict[str, float]:
    per_op = {}
    for kind in OperationKind:
        spec = OperationSpec(kind, 10, 5)
        rng = stream_rng(seed, 7)
        t0 = time.perf_counter()
        for _ in range(reps):
            apply_operation(spec, img, rng)
        per_op[kind.value] = (time.perf_counter() - t0) / reps * 1e6
    return per_op


def bench(p: Policy, img_size: int = 32, count: int = 1000, threads: int = 1, seed: int = 0) -> dict:
    """Throughput report: policy applications/s (single- and
    multi-worker) plus a per-operation microsecond breakdown."""
    if count < 1:
        raise ValueError("count must be >= 1")
    img = stream_rng(seed, 5).integers(0, 256, (img_size, img_size, 3)).astype(np.uint8)

    def apply_indexed(i: int) -> ImageArray:
        return apply_policy(p, img, stream_rng(seed, 100 + i))

    t0 = time.perf_counter()
    single = [apply_indexed(i) for i in range(count)]
    t_single = time.perf_counter() - t0

    report = {
        "count": count,
        "image_size": img_size,
        "images_per_second": count / t_single,
        "per_op_microseconds": _bench_ops(img, max(20, min(200, count)), seed),
    }
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        # chunk per worker so pool dispatch overhead does not dominate
        # the ~50us per-application work
        def apply_range(bounds: tuple[int, int]) -> list[ImageArray]:
            return [apply_indexed(i) for i in range(*bounds)]

        step = -(-count // threads)
        chunks = [(s, min(s + step, count)) for s in range(0, count, step)]
        t0 = time.perf_counter()
        with ThreadPoolExecutor(max_workers=threads) as pool:
            multi = [img for part in pool.map(apply_range, chunks) for img in part]
        t_multi = time.perf_counter() - t0
        report["threads"] = threads
        report["images_per_second_threaded"] = count / t_multi
        report["deterministic_across_threads"] = all(
            np.array_equal(a, b) for a, b in zip(single, multi)
        )
    return report
