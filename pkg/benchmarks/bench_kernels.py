"""Compare the numba kernels with their numpy fallbacks.

Kernel timings call the two implementations directly. The end-to-end timing
runs the CLI twice in fresh processes, once with AMBIPERSUADE_DISABLE_NUMBA=1.

    python3 benchmarks/bench_kernels.py --repeat 5
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from ambipersuade import _kernels as kn


def best_of(fn, repeat):
    fn()  # warm up, and compile on first call
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng, n):
    nW, nA = 3, 4
    K = rng.dirichlet(np.ones(nA), size=(n, nW))
    p = rng.dirichlet(np.ones(nW))
    U = rng.normal(size=(nA, nW))
    T = rng.normal(size=(60, 120))
    m = min(n, 1500)
    fs, d, O = rng.normal(size=m), rng.uniform(0.5, 2.0, m), rng.normal(size=(m, 6)) + 0.3
    return [
        ("batch_payoffs", lambda: kn._batch_payoffs_np(K, p, U), lambda: kn._batch_payoffs_nb(K, p, U)),
        ("batch_obedience", lambda: kn._batch_obedience_np(K, p, U), lambda: kn._batch_obedience_nb(K, p, U)),
        ("pivot 60x120", lambda: kn._pivot_np(T.copy(), 3, 7), lambda: kn._pivot_nb(T.copy(), 3, 7)),
        (f"best_binary_split n={m}", lambda: kn._best_split_np(fs, d, O, 1e-9), lambda: kn._best_split_nb(fs, d, O, 1e-9)),
    ]


def end_to_end(game, disable):
    env = dict(os.environ)
    if disable:
        env["AMBIPERSUADE_DISABLE_NUMBA"] = "1"
    else:
        env.pop("AMBIPERSUADE_DISABLE_NUMBA", None)
    cmd = [sys.executable, "-m", "ambipersuade", "solve-ambiguous", game, "--phi-r", "log:1,5,1,0", "--no-timestamp"]
    t0 = time.perf_counter()
    subprocess.run(cmd, env=env, check=True, stdout=subprocess.DEVNULL)
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000, help="kernels per batch")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--no-e2e", action="store_true", help="skip the end-to-end CLI timing")
    args = ap.parse_args()

    if not kn.NUMBA_ENABLED:
        print("numba disabled in this process; numba column times plain python loops")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<28}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, f_np, f_nb in kernel_cases(rng, args.n):
        a, b = best_of(f_np, args.repeat), best_of(f_nb, args.repeat)
        print(f"{name:<28}{1e3 * a:>12.3f}{1e3 * b:>12.3f}{a / b:>10.2f}")

    if not args.no_e2e:
        print()
        print(f"{'solve-ambiguous':<28}{'numpy [s]':>12}{'numba [s]':>12}")
        for game in ("intro", "sa2_first"):
            a, b = end_to_end(game, True), end_to_end(game, False)
            print(f"{game:<28}{a:>12.2f}{b:>12.2f}")


if __name__ == "__main__":
    main()
