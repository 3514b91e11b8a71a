"""Scripted stdio evaluator stub for protocol tests.

Reads JSONL requests and answers each with a fixed or derived reward:

    python -m augsearch.echo_worker --reward 0.5
    python -m augsearch.echo_worker --mode invert-count

``invert-count`` scores a policy by the fraction of its operations that
are Invert, which gives tests a deterministic policy-dependent signal
without training anything.
"""

from __future__ import annotations

import argparse
import json
import sys


def compute_reward(policy: list, mode: str, fixed: float) -> float:
    if mode == "fixed":
        return fixed
    if mode == "invert-count":
        ops = [op for sp in policy for op in sp]
        return sum(1 for op in ops if op[0] == "Invert") / max(len(ops), 1)
    raise ValueError(f"unknown mode {mode}")


def serve(stdin, stdout, mode: str = "fixed", fixed: float = 0.5) -> None:
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            reward = compute_reward(req["policy"], mode, fixed)
            response = {"id": req["id"], "reward": reward}
        except Exception as exc:
            req_id = None
            try:
                req_id = json.loads(line).get("id")
            except Exception:
                pass
            response = {"id": req_id, "error": str(exc)}
        stdout.write(json.dumps(response, separators=(",", ":")) + "\n")
        stdout.flush()


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--reward", type=float, default=0.5)
    ap.add_argument("--mode", choices=["fixed", "invert-count"], default="fixed")
    args = ap.parse_args()
    serve(sys.stdin, sys.stdout, mode=args.mode, fixed=args.reward)


if __name__ == "__main__":
    main()
