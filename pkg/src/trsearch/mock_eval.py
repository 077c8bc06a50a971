"""Reference external evaluator speaking the ``trs/1`` protocol.

Run as ``python -m trsearch.mock_eval <kind>`` or ``trs mock-eval <kind>``.
``<kind>`` is either a synthetic objective kind (built with the dimension
announced in the hello message), ``norm`` (reward = Euclidean norm), or one
of the misbehaving kinds in ``FAULTS`` used to exercise error handling.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from trsearch.objectives import KINDS, ObjectiveSpec, make_objective

FAULTS = (
    "wrong-version",
    "exit-before-hello",
    "silent",
    "extra-reward",
    "bad-id",
    "nan",
    "crash",
    "hang",
)


def _write(out, message):
    out.write(json.dumps(message, separators=(",", ":")) + "\n")
    out.flush()


def serve(kind: str, seed: int = 0, spec_overrides: dict | None = None, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    if kind == "exit-before-hello":
        return 3
    hello = stdin.readline()
    if not hello:
        return 1
    hello = json.loads(hello)
    if kind == "silent":
        time.sleep(3600)
        return 0
    version = "trs/0" if kind == "wrong-version" else hello.get("version")
    _write(stdout, {"type": "hello", "version": version})

    if kind in KINDS:
        spec = ObjectiveSpec(kind=kind, dim=int(hello["dim"]), seed=seed, **(spec_overrides or {}))
        reward = make_objective(spec)
    elif kind == "norm":
        reward = lambda X: np.linalg.norm(X, axis=1).tolist()
    elif kind in FAULTS:
        reward = lambda X: [0.0] * len(X)
    else:
        print(f"unknown mock kind {kind!r}", file=sys.stderr)
        return 1

    for line in stdin:
        msg = json.loads(line)
        if msg.get("type") != "eval":
            continue
        X = np.asarray(msg["batch"], dtype=np.float64)
        rewards = list(reward(X))
        rid = msg["id"]
        if kind == "crash":
            return 4
        if kind == "hang":
            time.sleep(3600)
        if kind == "extra-reward":
            rewards.append(0.0)
        if kind == "bad-id":
            rid += 1
        if kind == "nan":
            rewards[0] = float("nan")
        _write(stdout, {"type": "result", "id": rid, "rewards": rewards})
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="trs mock-eval", description=__doc__.splitlines()[0])
    parser.add_argument("kind", help=f"one of {', '.join(KINDS + ('norm',) + FAULTS)}")
    parser.add_argument("--seed", type=int, default=0, help="objective seed")
    parser.add_argument("--spec", default="{}", help="JSON object of extra ObjectiveSpec fields")
    args = parser.parse_args(argv)
    return serve(args.kind, args.seed, json.loads(args.spec))


if __name__ == "__main__":
    sys.exit(main())
