"""Command-line interface.

Subcommands: augment, search, policy show/validate, concat, ablate, grid,
bench. All randomness is keyed by --seed; failures exit nonzero with a
single machine-parsable ``error: ...`` line on stderr.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import datasets as ds
from .controller import SearchLog, run_search
from .evaluation import (
    ChildConfig,
    ExternalEvaluator,
    evaluate_policy,
    make_evaluator,
    randomize_prob_mag,
    sample_random_policy,
    subpolicy_subset_sweep,
    top_k_concat,
)
from .pipeline import AugmentPipeline, bench as run_bench, render_grid, run_pipeline
from .policy import (
    BUILTIN_POLICIES,
    Policy,
    load_builtin_policy,
    parse_policy,
    serialize_policy,
)
from .rng import stream_rng

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".gif")


def _fail_cleanly(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except Exception as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _load_policy_arg(value: str) -> Policy:
    if value in BUILTIN_POLICIES:
        return load_builtin_policy(value)
    return parse_policy(Path(value).read_text())


def _load_dataset_arg(spec: str, seed: int, train_size: int | None):
    """Resolve 'synth[:inv,inv]' or a dataset path into (train, val)."""
    if spec == "synth" or spec.startswith("synth:"):
        invariances = ("invert",)
        if ":" in spec:
            invariances = tuple(spec.split(":", 1)[1].split(","))
        n = train_size or 256
        train, val, _ = ds.synth_invariance(n, seed, invariances)
        return train, val
    path = Path(spec)
    if path.is_dir() and (path / "manifest.txt").exists():
        full = ds.load_image_directory(path)
    else:
        full = ds.load_cifar10_binary(path)
    if train_size is not None and train_size < len(full):
        full = ds.reduce_dataset(full, train_size, seed)
    # 90/10 train/validation split
    n_val = max(1, len(full) // 10)
    perm = stream_rng(seed, 99).permutation(len(full))
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    train = ds.LabeledDataset(full.images[train_idx], full.labels[train_idx], full.num_classes)
    val = ds.LabeledDataset(full.images[val_idx], full.labels[val_idx], full.num_classes)
    return train, val


@click.group()
def main():
    """Augmentation policy search toolkit."""


@main.command()
@click.option("--policy", "policy_arg", required=True, help="policy file or builtin name")
@click.option("--input", "input_dir", required=True, type=click.Path(exists=True))
@click.option("--output", "output_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--baseline", type=click.Choice(["cifar", "none"]), default="none", show_default=True)
@click.option("--cutout", type=int, default=0, show_default=True, help="fixed cutout size in px")
@click.option("--threads", type=int, default=1, show_default=True)
@_fail_cleanly
def augment(policy_arg, input_dir, output_dir, seed, baseline, cutout, threads):
    """Augment every image in a directory; outputs are PNG."""
    from concurrent.futures import ThreadPoolExecutor

    from PIL import Image

    policy = _load_policy_arg(policy_arg)
    pl = AugmentPipeline(
        baseline_pad=4 if baseline == "cifar" else None,
        policy=policy,
        cutout_size=cutout or None,
    )
    files = sorted(
        f for f in Path(input_dir).iterdir() if f.suffix.lower() in IMAGE_SUFFIXES
    )
    if not files:
        raise click.ClickException(f"no images found under {input_dir}")
    out_root = Path(output_dir)
    out_root.mkdir(parents=True, exist_ok=True)

    def one(item):
        index, f = item
        with Image.open(f) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
        out = run_pipeline(pl, arr, stream_rng(seed, index))
        Image.fromarray(out).save(out_root / (f.stem + ".png"))

    jobs = list(enumerate(files))
    if threads <= 1:
        for job in jobs:
            one(job)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(one, jobs))
    click.echo(f"augmented {len(files)} images -> {out_root}")


@main.command()
@click.option("--algo", type=click.Choice(["ppo", "random", "evolution"]), required=True)
@click.option("--dataset", required=True, help="dataset path, or synth[:invariances]")
@click.option("--budget", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--train-size", type=int, default=None)
@click.option("--epochs", type=int, default=8, show_default=True)
@click.option("--worker", default=None, help="external evaluator command (JSONL stdio)")
@_fail_cleanly
def search(algo, dataset, budget, seed, out_path, threads, train_size, epochs, worker):
    """Run a policy search and write a JSONL log."""
    if worker:
        import shlex

        evaluator = ExternalEvaluator(shlex.split(worker))
    else:
        train, val = _load_dataset_arg(dataset, seed, train_size)
        evaluator = make_evaluator(train, val, ChildConfig(epochs=epochs))
    log = run_search(algo, evaluator, budget, seed, threads=threads)
    log.save(out_path)
    with open(str(out_path) + ".meta.json", "w") as fh:
        json.dump({"elapsed_seconds": log.elapsed_seconds, "algorithm": algo}, fh)
    best = max((e.reward for e in log.entries if e.ok), default=None)
    click.echo(f"evaluated {len(log.entries)} policies, best reward {best}")


@main.group()
def policy():
    """Inspect or validate policy files."""


@policy.command("show")
@click.argument("policy_file")
@_fail_cleanly
def policy_show(policy_file):
    p = _load_policy_arg(policy_file)
    click.echo(serialize_policy(p), nl=False)


@policy.command("validate")
@click.argument("policy_file")
@_fail_cleanly
def policy_validate(policy_file):
    p = _load_policy_arg(policy_file)
    click.echo(f"ok: {len(p.sub_policies)} sub-policies")


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@_fail_cleanly
def concat(log_path, k, out_path):
    """Concatenate the top-k policies of a search log into one policy."""
    log = SearchLog.load(log_path)
    p = top_k_concat(log, k)
    Path(out_path).write_text(serialize_policy(p))
    click.echo(f"wrote {len(p.sub_policies)}-sub-policy policy to {out_path}")


@main.command()
@click.option("--mode", type=click.Choice(["randomize", "random-policy", "subset-sweep"]), required=True)
@click.option("--dataset", required=True)
@click.option("--policy", "policy_arg", default=None)
@click.option("--log", "log_path", default=None, type=click.Path(exists=True))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--repeats", type=int, default=20, show_default=True)
@click.option("--n-sub", type=int, default=25, show_default=True)
@click.option("--pool-size", type=int, default=50, show_default=True)
@click.option("--sizes", default="1,5,20", show_default=True)
@click.option("--train-size", type=int, default=None)
@click.option("--epochs", type=int, default=8, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@_fail_cleanly
def ablate(mode, dataset, policy_arg, log_path, seed, repeats, n_sub, pool_size, sizes,
           train_size, epochs, out_path):
    """Policy-randomization and subset-sweep ablations."""
    train, val = _load_dataset_arg(dataset, seed, train_size)
    cfg = ChildConfig(epochs=epochs)
    evaluator = make_evaluator(train, val, cfg)
    rng = stream_rng(seed, 3)
    if mode == "randomize":
        if not policy_arg:
            raise click.ClickException("--policy is required for --mode randomize")
        base = _load_policy_arg(policy_arg)
        base_reward = evaluator(base, seed)
        rewards = [
            evaluator(randomize_prob_mag(base, rng), int(rng.integers(0, 2**31)))
            for _ in range(repeats)
        ]
        report = {
            "mode": mode,
            "policy_reward": base_reward,
            "randomized_mean": float(np.mean(rewards)),
            "randomized_rewards": rewards,
        }
    elif mode == "random-policy":
        rewards = [
            evaluator(sample_random_policy(n_sub, rng), int(rng.integers(0, 2**31)))
            for _ in range(repeats)
        ]
        report = {
            "mode": mode,
            "mean_reward": float(np.mean(rewards)),
            "best_reward": float(np.max(rewards)),
            "rewards": rewards,
        }
    else:
        if not log_path:
            raise click.ClickException("--log is required for --mode subset-sweep")
        log = SearchLog.load(log_path)
        pool = _subpolicy_pool(log, pool_size)
        size_list = [int(s) for s in sizes.split(",")]
        report = subpolicy_subset_sweep(pool, size_list, repeats, evaluator, rng)
        report["mode"] = mode
    Path(out_path).write_text(json.dumps(report, indent=2))
    click.echo(f"wrote {mode} report to {out_path}")


def _subpolicy_pool(log: SearchLog, pool_size: int):
    """Distinct sub-policies of the log's best entries, reward order."""
    from . import codec

    seen = set()
    pool = []
    entries = sorted(
        (e for e in log.entries if e.ok and e.reward is not None),
        key=lambda e: (-e.reward, e.index),
    )
    for e in entries:
        for sp in codec.decode_tokens(e.tokens).sub_policies:
            if sp not in seen:
                seen.add(sp)
                pool.append(sp)
            if len(pool) >= pool_size:
                return pool
    return pool


@main.command()
@click.option("--policy", "policy_arg", required=True)
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--cols", type=int, default=4, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@_fail_cleanly
def grid(policy_arg, image_path, cols, seed, out_path):
    """Render a sub-policy x stochastic-application grid (PNG + legend)."""
    from PIL import Image

    p = _load_policy_arg(policy_arg)
    with Image.open(image_path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    raster, legend = render_grid(p, [arr], stream_rng(seed, 0), cols)
    Image.fromarray(raster).save(out_path)
    Path(str(out_path) + ".legend.txt").write_text("\n".join(legend) + "\n")
    click.echo(f"wrote {raster.shape[1]}x{raster.shape[0]} grid to {out_path}")


@main.command("bench")
@click.option("--policy", "policy_arg", required=True)
@click.option("--size", type=int, default=32, show_default=True)
@click.option("--count", type=int, default=2000, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_fail_cleanly
def bench_cmd(policy_arg, size, count, threads, seed):
    """Measure policy-application throughput."""
    p = _load_policy_arg(policy_arg)
    report = run_bench(p, img_size=size, count=count, threads=threads, seed=seed)
    click.echo(json.dumps(report, indent=2))


if __name__ == "__main__":
    main()
