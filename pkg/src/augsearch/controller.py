"""Search algorithms over the 30-token policy space.

The main searcher is a one-layer LSTM (hidden size 100) that emits the 30
decisions autoregressively through three per-decision-class softmax heads
and is trained with PPO (clipped ratio surrogate, entropy bonus, EMA
reward baseline). Random search and a mutation/tournament evolutionary
baseline share the same evaluation loop.

Everything runs in float64 numpy so gradients can be checked against
central finite differences.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import codec
from .codec import SEQUENCE_LENGTH, VOCAB_SIZES
from .policy import Policy
from .rng import RngStream, stream_rng

__all__ = [
    "ControllerConfig",
    "ControllerState",
    "Trajectory",
    "init_controller",
    "sample",
    "sample_batch",
    "head_probabilities",
    "ppo_loss_and_grads",
    "ppo_update",
    "random_search_step",
    "evolution_step",
    "SearchRecord",
    "SearchLog",
    "run_search",
]

_VOCABS = (16, 11, 10)  # decision classes: kind, prob, mag


@dataclass
class ControllerConfig:
    embed_dim: int = 32
    hidden_size: int = 100
    learning_rate: float = 3.5e-4
    clip_ratio: float = 0.2
    entropy_weight: float = 1e-5
    baseline_decay: float = 0.95
    init_range: float = 0.1


@dataclass
class ControllerState:
    cfg: ControllerConfig
    params: dict[str, np.ndarray]
    baseline: float | None = None
    step: int = 0


@dataclass
class Trajectory:
    tokens: list[int]
    logprobs: np.ndarray  # (30,), each <= 0
    reward: float | None = None

    @property
    def joint_logprob(self) -> float:
        return float(self.logprobs.sum())


def init_controller(cfg: ControllerConfig | None = None, rng: RngStream | None = None) -> ControllerState:
    cfg = cfg or ControllerConfig()
    rng = rng if rng is not None else stream_rng(0)
    E, H = cfg.embed_dim, cfg.hidden_size
    r = cfg.init_range

    def u(*shape):
        return rng.uniform(-r, r, size=shape)

    params = {
        "start": u(E),
        "W": u(4 * H, E),
        "U": u(4 * H, H),
        "b": u(4 * H),
    }
    for c, V in enumerate(_VOCABS):
        params[f"emb{c}"] = u(V, E)
        params[f"head{c}_w"] = u(V, H)
        params[f"head{c}_b"] = u(V)
    return ControllerState(cfg=cfg, params=params)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _log_softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def _step(params, H, x, h, c):
    z = x @ params["W"].T + h @ params["U"].T + params["b"]
    i = _sigmoid(z[:, :H])
    f = _sigmoid(z[:, H : 2 * H])
    g = np.tanh(z[:, 2 * H : 3 * H])
    o = _sigmoid(z[:, 3 * H :])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    return h_new, c_new, (i, f, g, o, tc)


def sample_batch(state: ControllerState, rng: RngStream, n: int) -> list[Trajectory]:
    """Sample n token sequences; draws are consumed serially per step."""
    p = state.params
    H = state.cfg.hidden_size
    h = np.zeros((n, H))
    c = np.zeros((n, H))
    x = np.broadcast_to(p["start"], (n, state.cfg.embed_dim)).copy()
    tokens = np.zeros((n, SEQUENCE_LENGTH), dtype=np.int64)
    logprobs = np.zeros((n, SEQUENCE_LENGTH))
    for t in range(SEQUENCE_LENGTH):
        cls = t % 3
        h, c, _ = _step(p, H, x, h, c)
        logits = h @ p[f"head{cls}_w"].T + p[f"head{cls}_b"]
        logp = _log_softmax(logits)
        probs = np.exp(logp)
        cdf = np.cumsum(probs, axis=1)
        u = rng.random(n)
        tok = (u[:, None] >= cdf).sum(axis=1)
        tok = np.minimum(tok, _VOCABS[cls] - 1)
        tokens[:, t] = tok
        logprobs[:, t] = logp[np.arange(n), tok]
        x = p[f"emb{cls}"][tok]
    return [Trajectory(tokens=[int(v) for v in tokens[b]], logprobs=logprobs[b].copy()) for b in range(n)]


def sample(state: ControllerState, rng: RngStream) -> Trajectory:
    return sample_batch(state, rng, 1)[0]


def head_probabilities(state: ControllerState) -> list[np.ndarray]:
    """Softmax distribution at each of the 30 steps along the greedy-free
    expected path (inputs teacher-forced with the argmax token)."""
    p = state.params
    H = state.cfg.hidden_size
    h = np.zeros((1, H))
    c = np.zeros((1, H))
    x = p["start"][None, :]
    out = []
    for t in range(SEQUENCE_LENGTH):
        cls = t % 3
        h, c, _ = _step(p, H, x, h, c)
        logits = h @ p[f"head{cls}_w"].T + p[f"head{cls}_b"]
        probs = np.exp(_log_softmax(logits))[0]
        out.append(probs)
        x = p[f"emb{cls}"][[int(probs.argmax())]]
    return out


def _forward_cached(params, cfg, tokens: np.ndarray):
    """Teacher-forced forward over a (B, 30) token matrix, caching
    everything the backward pass needs."""
    B, T = tokens.shape
    H = cfg.hidden_size
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    x = np.broadcast_to(params["start"], (B, cfg.embed_dim)).copy()
    cache = []
    logprobs = np.zeros((B, T))
    entropies = np.zeros((B, T))
    log_ps = []
    for t in range(T):
        cls = t % 3
        h_prev, c_prev = h, c
        h, c, gates = _step(params, H, x, h, c)
        logits = h @ params[f"head{cls}_w"].T + params[f"head{cls}_b"]
        logp = _log_softmax(logits)
        probs = np.exp(logp)
        tok = tokens[:, t]
        logprobs[:, t] = logp[np.arange(B), tok]
        entropies[:, t] = -(probs * logp).sum(axis=1)
        cache.append((x, h_prev, c_prev, gates, h, c))
        log_ps.append((logp, probs))
        if t + 1 < T:
            x = params[f"emb{cls}"][tok]
    return logprobs, entropies, cache, log_ps


def _backward(params, cfg, tokens, cache, log_ps, dlogit_fn):
    """Backprop through heads and LSTM. ``dlogit_fn(t, logp, probs)``
    returns dLoss/dlogits for step t."""
    B, T = tokens.shape
    H = cfg.hidden_size
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        cls = t % 3
        x, h_prev, c_prev, (i, f, g, o, tc), h, c = cache[t]
        logp, probs = log_ps[t]
        dlogits = dlogit_fn(t, logp, probs)
        grads[f"head{cls}_w"] += dlogits.T @ h
        grads[f"head{cls}_b"] += dlogits.sum(axis=0)
        dh = dlogits @ params[f"head{cls}_w"] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dc_next = dc * f
        dz = np.concatenate(
            [di * i * (1 - i), df * f * (1 - f), dg * (1 - g * g), do * o * (1 - o)], axis=1
        )
        grads["W"] += dz.T @ x
        grads["U"] += dz.T @ h_prev
        grads["b"] += dz.sum(axis=0)
        dx = dz @ params["W"]
        dh_next = dz @ params["U"]
        if t == 0:
            grads["start"] += dx.sum(axis=0)
        else:
            prev_cls = (t - 1) % 3
            np.add.at(grads[f"emb{prev_cls}"], tokens[:, t - 1], dx)
    return grads


def ppo_loss_and_grads(
    state: ControllerState,
    tokens: np.ndarray,
    old_logprobs: np.ndarray,
    advantages: np.ndarray,
):
    """Clipped-surrogate PPO loss (to minimize) and its exact gradients.

    tokens: (B, 30) int; old_logprobs: (B,) joint sampling-time log-probs;
    advantages: (B,) reward minus baseline.
    """
    cfg = state.cfg
    params = state.params
    B = tokens.shape[0]
    logprobs, entropies, cache, log_ps = _forward_cached(params, cfg, tokens)
    new_joint = logprobs.sum(axis=1)
    ratio = np.exp(new_joint - old_logprobs)
    lo, hi = 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio
    surr = np.minimum(ratio * advantages, np.clip(ratio, lo, hi) * advantages)
    entropy_per_traj = entropies.sum(axis=1)
    loss = -(surr.mean() + cfg.entropy_weight * entropy_per_traj.mean())

    # gradient of the unclipped branch only; the clipped branch is locally
    # constant in the parameters
    active = ratio * advantages <= np.clip(ratio, lo, hi) * advantages
    coef = np.where(active, ratio * advantages, 0.0)

    onehots = np.arange(max(_VOCABS))

    def dlogit_fn(t, logp, probs):
        tok = tokens[:, t]
        one = (onehots[: probs.shape[1]][None, :] == tok[:, None]).astype(float)
        d_ratio = -(coef[:, None] / B) * (one - probs)
        ent = -(probs * logp).sum(axis=1, keepdims=True)
        d_ent = (cfg.entropy_weight / B) * probs * (logp + ent)
        return d_ratio + d_ent

    grads = _backward(params, cfg, tokens, cache, log_ps, dlogit_fn)
    metrics = {
        "loss": float(loss),
        "entropy": float(entropy_per_traj.mean()),
        "ratio_mean": float(ratio.mean()),
        "kl": float((old_logprobs - new_joint).mean()),
    }
    return loss, grads, metrics


def ppo_update(state: ControllerState, batch: Sequence[Trajectory]) -> dict:
    """One PPO step over a batch of reward-carrying trajectories.

    Updates parameters in place with plain SGD and advances the EMA
    reward baseline. A non-finite gradient rejects the whole update.
    """
    batch = [t for t in batch if t.reward is not None]
    if not batch:
        raise ValueError("ppo_update needs a non-empty batch with rewards")
    cfg = state.cfg
    rewards = np.array([t.reward for t in batch], dtype=np.float64)
    if state.baseline is None:
        state.baseline = float(rewards.mean())
    advantages = rewards - state.baseline
    tokens = np.array([t.tokens for t in batch], dtype=np.int64)
    old_lp = np.array([t.joint_logprob for t in batch], dtype=np.float64)
    loss, grads, metrics = ppo_loss_and_grads(state, tokens, old_lp, advantages)

    if not all(np.isfinite(g).all() for g in grads.values()):
        metrics.update(rejected=True, reason="non-finite gradient")
        return metrics

    for k, g in grads.items():
        state.params[k] -= cfg.learning_rate * g
    state.baseline = cfg.baseline_decay * state.baseline + (1 - cfg.baseline_decay) * float(
        rewards.mean()
    )
    state.step += 1
    metrics.update(
        rejected=False,
        mean_reward=float(rewards.mean()),
        baseline=state.baseline,
        grad_norm=float(np.sqrt(sum((g * g).sum() for g in grads.values()))),
    )
    return metrics


# ---------------------------------------------------------------------------
# baseline searchers


def random_search_step(rng: RngStream) -> list[int]:
    return [int(rng.integers(0, v)) for v in VOCAB_SIZES]


def evolution_step(population: Sequence[tuple[list[int], float]], rng: RngStream) -> list[int]:
    """Size-2 tournament selection, then a single-position mutation."""
    if not population:
        raise ValueError("evolution_step needs a non-empty population")
    n = len(population)
    a = int(rng.integers(0, n))
    b = int(rng.integers(0, n))
    parent = population[a] if population[a][1] >= population[b][1] else population[b]
    return codec.mutate(parent[0], rng)


# ---------------------------------------------------------------------------
# search driver


@dataclass
class SearchRecord:
    index: int
    tokens: list[int]
    reward: float | None
    ok: bool = True


@dataclass
class SearchLog:
    entries: list[SearchRecord] = field(default_factory=list)
    elapsed_seconds: float = 0.0

    def best_so_far(self) -> list[float]:
        best = -np.inf
        curve = []
        for e in self.entries:
            if e.ok and e.reward is not None:
                best = max(best, e.reward)
            curve.append(best)
        return curve

    def top_k(self, k: int) -> list[SearchRecord]:
        """k best distinct token sequences; reward ties break toward the
        earlier discovery."""
        seen: set[tuple[int, ...]] = set()
        unique = []
        for e in self.entries:
            if not e.ok or e.reward is None:
                continue
            key = tuple(e.tokens)
            if key in seen:
                continue
            seen.add(key)
            unique.append(e)
        if len(unique) < k:
            raise ValueError(f"log has only {len(unique)} distinct evaluated entries, need {k}")
        unique.sort(key=lambda e: (-e.reward, e.index))
        return unique[:k]

    def save(self, path) -> None:
        with open(path, "w") as fh:
            for e in self.entries:
                fh.write(
                    json.dumps(
                        {"index": e.index, "tokens": e.tokens, "reward": e.reward, "ok": e.ok},
                        separators=(",", ":"),
                    )
                    + "\n"
                )

    @classmethod
    def load(cls, path) -> "SearchLog":
        log = cls()
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                d = json.loads(line)
                log.entries.append(
                    SearchRecord(d["index"], list(d["tokens"]), d["reward"], d.get("ok", True))
                )
        return log


Evaluator = Callable[[Policy, int], float]


def _eval_seed(seed: int, index: int) -> int:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(1, int(index)))
    return int(ss.generate_state(1)[0])


def _evaluate_batch(
    candidates: list[list[int]],
    start_index: int,
    evaluator: Evaluator,
    seed: int,
    threads: int,
) -> list[SearchRecord]:
    """Evaluate a batch of token sequences, each pinned to a seed derived
    from its global index so results do not depend on scheduling."""
    from concurrent.futures import ThreadPoolExecutor

    def one(args):
        offset, tokens = args
        index = start_index + offset
        policy = codec.decode_tokens(tokens)
        eval_seed = _eval_seed(seed, index)
        for attempt in range(2):
            try:
                reward = float(evaluator(policy, eval_seed))
                return SearchRecord(index, tokens, reward, ok=True)
            except Exception:
                if attempt == 1:
                    return SearchRecord(index, tokens, None, ok=False)
        raise AssertionError("unreachable")

    jobs = list(enumerate(candidates))
    if threads <= 1:
        return [one(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, jobs))


def run_search(
    algorithm: str,
    evaluator: Evaluator,
    budget: int,
    seed: int,
    threads: int = 1,
    batch_size: int = 32,
    population_size: int = 20,
    controller_cfg: ControllerConfig | None = None,
) -> SearchLog:
    """Evaluate ``budget`` policies with the chosen search algorithm.

    The log is deterministic for a given seed: candidate generation is
    serialized, and every evaluation is keyed by its global index, so the
    thread count only affects wall time.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if algorithm not in ("ppo", "random", "evolution"):
        raise ValueError(f"unknown search algorithm {algorithm!r}")
    t0 = time.monotonic()
    log = SearchLog()
    gen_rng = stream_rng(seed, 0)
    evaluated = 0

    def submit(candidates: list[list[int]]) -> list[SearchRecord]:
        nonlocal evaluated
        records = _evaluate_batch(candidates, evaluated, evaluator, seed, threads)
        log.entries.extend(records)
        evaluated += len(records)
        return records

    if algorithm == "random":
        while evaluated < budget:
            n = min(batch_size, budget - evaluated)
            submit([random_search_step(gen_rng) for _ in range(n)])

    elif algorithm == "evolution":
        n = min(population_size, budget)
        records = submit([random_search_step(gen_rng) for _ in range(n)])
        population = [(r.tokens, r.reward) for r in records if r.ok]
        while evaluated < budget:
            n = min(batch_size, budget - evaluated)
            if population:
                children = [evolution_step(population, gen_rng) for _ in range(n)]
            else:
                children = [random_search_step(gen_rng) for _ in range(n)]
            records = submit(children)
            population.extend((r.tokens, r.reward) for r in records if r.ok)
            population.sort(key=lambda tr: -tr[1])
            del population[population_size:]

    else:  # ppo
        state = init_controller(controller_cfg, stream_rng(seed, 2))
        while evaluated < budget:
            n = min(batch_size, budget - evaluated)
            trajs = sample_batch(state, gen_rng, n)
            records = submit([t.tokens for t in trajs])
            with_rewards = []
            for traj, rec in zip(trajs, records):
                if rec.ok:
                    traj.reward = rec.reward
                    with_rewards.append(traj)
            if with_rewards:
                ppo_update(state, with_rewards)

    log.elapsed_seconds = time.monotonic() - t0
    return log
