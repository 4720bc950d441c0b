"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends get identical inputs; outputs are compared before timing.
"""
import argparse
import timeit

import numpy as np

from jmgt_pennes.kernels import backends


def march_case(modes, steps, tau=1e-6):
    lam = (np.pi * np.arange(1, modes + 1)) ** 2
    dt = 1e-3 / steps
    r = np.full(steps, 2.25e6)
    b = np.full(steps, 2.25)
    f = np.empty((0, modes))

    def call(mod):
        P = np.zeros((steps + 1, modes))
        Q, W = np.zeros_like(P), np.zeros_like(P)
        P[0] = 1.0 / np.arange(1, modes + 1) ** 2
        W[0] = -2.25e6 * lam * P[0]
        mod.midpoint_march_diag(lam, tau, dt, r, b, f, r, b, f, P, Q, W)
        return P

    return call


def exp_case(modes, steps):
    decay = np.exp(-np.linspace(1e-3, 1.0, modes))
    gain = 1.0 - decay
    g = np.random.default_rng(0).standard_normal((steps, modes))

    def call(mod):
        out = np.zeros((steps + 1, modes))
        mod.exp_march(decay, gain, g, out)
        return out

    return call


def gronwall_case(steps):
    t = np.linspace(0.0, 1.0, steps + 1)
    a = 1.0 + np.sin(t)
    b = np.cos(t) ** 2

    def call(mod):
        out = np.zeros_like(t)
        mod.gronwall_recurrence(1.0, t, a, b, out)
        return out

    return call


CASES = [
    ("midpoint march, 1 mode x 65536 steps", march_case(1, 65536)),
    ("midpoint march, 128 modes x 4096 steps", march_case(128, 4096)),
    ("exp march, 128 modes x 4096 steps", exp_case(128, 4096)),
    ("gronwall, 100000 steps", gronwall_case(100000)),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    mods = backends()
    if "cython" not in mods:
        print("compiled extension not built; only the fallback is available")
    print(f"{'case':44s} " + " ".join(f"{n:>12s}" for n in mods) + "   speedup")
    for name, call in CASES:
        outs = {n: call(m) for n, m in mods.items()}
        ref = outs["python"]
        for n, v in outs.items():
            np.testing.assert_allclose(v, ref, rtol=1e-12, atol=1e-14 * np.max(np.abs(ref)))
        best = {n: min(timeit.repeat(lambda m=m: call(m), number=1, repeat=args.repeat))
                for n, m in mods.items()}
        cols = " ".join(f"{1e3 * best[n]:10.2f}ms" for n in mods)
        speed = f"{best['python'] / best['cython']:8.1f}x" if "cython" in best else ""
        print(f"{name:44s} {cols} {speed}")


if __name__ == "__main__":
    main()
