"""Time the compiled and numpy kernels on the same repeated schedules.

    python benchmarks/bench_kernels.py [--reps N]
"""

import argparse
import random
import time

import numpy as np

from wgossip import _kernels_py, kernels
from wgossip.derived import build_derived_graph, periodic_schedule
from wgossip.fixtures import gen_fixture
from wgossip.graph import GossipGraph
from wgossip.stomat import StochasticMatrix

try:
    from wgossip import _kernels as compiled
except ImportError:
    compiled = None


def random_ring(n, m, seed):
    rng = random.Random(seed)
    edges = [(i, (i + 1) % n) for i in range(n)] + [(i, (i + 2) % n) for i in range(0, n, 3)]
    pre = []
    for _ in edges:
        rows = []
        for _ in range(2 * m):
            w = [rng.random() for _ in range(2 * m)]
            s = sum(w)
            rows.append([x / s for x in w])
        pre.append(StochasticMatrix.from_rows(rows, exact=False))
    sched = [rng.choice(edges) for _ in range(4 * len(edges))]
    return GossipGraph(n, m, tuple(edges), tuple(pre)), sched


def cases():
    for kind in ("F2", "F3"):
        fx = gen_fixture(kind)
        D = build_derived_graph(fx.graph, fx.weight)
        yield kind, fx.graph, periodic_schedule(D, 1)
    for n, m in ((20, 3), (60, 4)):
        G, sched = random_ring(n, m, seed=n)
        yield f"ring n={n} m={m}", G, sched


def time_impl(impl, G, sched, reps):
    pre, idx = kernels.pack_graph(G)
    ids = kernels.schedule_ids(G, sched)
    P = np.eye(G.dim)
    t0 = time.perf_counter()
    kernels.apply_schedule(P, pre, idx, ids, reps, impl=impl)
    return time.perf_counter() - t0, P


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=2000)
    args = ap.parse_args()
    if compiled is None:
        print("compiled kernels not built; timing the numpy path only")
    print(f"{'case':<18}{'dim':>5}{'steps':>9}{'numpy s':>10}{'cython s':>10}{'speedup':>9}")
    for name, G, sched in cases():
        steps = len(sched) * args.reps
        t_py, P_py = time_impl(_kernels_py, G, sched, args.reps)
        if compiled is None:
            print(f"{name:<18}{G.dim:>5}{steps:>9}{t_py:>10.3f}{'-':>10}{'-':>9}")
            continue
        t_cy, P_cy = time_impl(compiled, G, sched, args.reps)
        assert np.allclose(P_py, P_cy, atol=1e-12)
        print(f"{name:<18}{G.dim:>5}{steps:>9}{t_py:>10.3f}{t_cy:>10.3f}{t_py / t_cy:>8.1f}x")


if __name__ == "__main__":
    main()
