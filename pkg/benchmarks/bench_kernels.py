"""Compare the compiled kernels with the pure-Python fallback.

Each workload runs in a fresh interpreter so backend selection happens at
import time, exactly as in normal use. Example::

    python3 benchmarks/bench_kernels.py --execs 20000
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, random, sys, time
from learnfuzz import _kernels
from learnfuzz.fsm import random_mealy
from learnfuzz.fuzzer.campaign import FuzzConfig, fuzz_campaign
from learnfuzz.fuzzer.encoding import ByteEncoding
from learnfuzz.harness.generator import ProblemSpec, generate_problem
from learnfuzz.learner import learn
from learnfuzz.oracle import RandomWpOracle
from learnfuzz.targets import ProgramTarget, wrap_fsm
from learnfuzz.tester import RandomWpParams

execs, states = int(sys.argv[1]), int(sys.argv[2])
out = {"backend": _kernels.BACKEND}

gen = generate_problem(ProblemSpec(n_modes=6, n_inputs=8, invalid_cells=4, seed=1))
enc = ByteEncoding.for_alphabet(gen.program.inputs)
t = time.perf_counter()
fuzz_campaign(ProgramTarget(gen.program), enc, budget_execs=execs, seed=1,
              config=FuzzConfig(havoc_rounds=64, splice_rounds=8))
out["fuzz campaign"] = time.perf_counter() - t

m = random_mealy(states, 10, 5, random.Random(3))
t = time.perf_counter()
target = wrap_fsm(m)
learn(target, RandomWpOracle(target, RandomWpParams(budget=20_000, seed=3)))
out["learn (random Wp)"] = time.perf_counter() - t

words = [tuple(rng.randrange(10) for _ in range(15)) for rng in [random.Random(6)]
         for _ in range(1000)]
t = time.perf_counter()
for _ in range(100):
    for w in words:
        m.run(w)
out["machine run x10^5"] = time.perf_counter() - t

rng = random.Random(4)
bm = bytearray(65536)
virgin = bytearray(65536)
locs = [rng.randrange(65536) for _ in range(200)]
t = time.perf_counter()
for _ in range(2000):
    bm[:] = bytes(65536)
    _kernels.record_edges(bm, 0, locs)
    _kernels.has_new_bits(bm, virgin)
out["bitmap record+compare x2000"] = time.perf_counter() - t
print(json.dumps(out))
"""


def run(pure: bool, execs: int, states: int) -> dict:
    env = dict(os.environ)
    env.pop("LEARNFUZZ_PURE", None)
    if pure:
        env["LEARNFUZZ_PURE"] = "1"
    proc = subprocess.run([sys.executable, "-c", WORKLOAD, str(execs), str(states)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--execs", type=int, default=20_000, help="fuzzer executions")
    ap.add_argument("--states", type=int, default=150, help="states of the learned machine")
    args = ap.parse_args(argv)
    compiled = run(False, args.execs, args.states)
    pure = run(True, args.execs, args.states)
    if compiled["backend"] != "compiled":
        print("compiled extension not built; both columns use the fallback")
    print(f"{'workload':<30} {'compiled s':>11} {'pure s':>9} {'speedup':>8}")
    for key in compiled:
        if key == "backend":
            continue
        c, p = compiled[key], pure[key]
        print(f"{key:<30} {c:>11.3f} {p:>9.3f} {p / c:>7.1f}x")


if __name__ == "__main__":
    main()
