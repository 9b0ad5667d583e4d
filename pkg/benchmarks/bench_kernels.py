"""Timing comparison: compiled kernels versus the pure-Python fallback.

Micro benchmarks call both kernel modules directly in-process; the
end-to-end fit benchmark runs each backend in a subprocess so the
import-time selection is exercised exactly as users get it.

Usage: python3 benchmarks/bench_kernels.py [--repeats N] [--quick]
"""

import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from axcirc import _kernels_py as pyk  # noqa: E402

try:
    from axcirc import _kernels as cyk
except ImportError:
    cyk = None

from axcirc.directional import _VMAX_STARTS  # noqa: E402


def _time(fn, repeats):
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best.append(time.perf_counter() - t0)
    return statistics.median(best)


def _micro_cases(n_transform, n_fit, rng):
    """Each kernel is timed at its realistic operating size.

    Transforms (cdf, inverse cdf) run on bootstrap- and plot-sized
    arrays; the weighted likelihood kernels run at EM dataset size.
    """
    t_circ = rng.uniform(0.0, 2.0 * np.pi, n_transform)
    t_ax = rng.uniform(0.0, np.pi, n_transform)
    u_big = rng.random(n_transform)
    u = rng.random(n_fit)
    v = rng.random(n_fit)
    w = rng.random(n_fit) + 0.5
    y = np.mod(1.2 + rng.vonmises(0.0, 6.0, n_fit) / 2.0, np.pi)
    cy, sy = np.cos(y), np.sin(y)
    x = rng.vonmises(1.0, 2.0, n_fit) % (2.0 * np.pi)
    cx, sx = np.cos(x), np.sin(x)
    return [
        ("vm_cdf (k=2)", n_transform, lambda m: m.vm_cdf(t_circ, 1.0, 2.0)),
        ("vm_cdf (k=120)", n_transform, lambda m: m.vm_cdf(t_circ, 1.0, 120.0)),
        ("vm_invcdf (k=2)", n_transform, lambda m: m.vm_invcdf(u_big, 1.0, 2.0)),
        ("vmax_cdf (k=8)", n_transform, lambda m: m.vmax_cdf(t_ax, 1.5, 8.0)),
        ("vmax_invcdf (k=8)", n_transform, lambda m: m.vmax_invcdf(u_big, 1.5, 8.0)),
        ("wc_mle", n_fit, lambda m: m.wc_mle(cx, sx, w)),
        ("vmax_mle", n_fit, lambda m: m.vmax_mle(cy, sy, w, _VMAX_STARTS)),
        ("rho_mle", n_fit, lambda m: m.rho_mle(u, v, w)),
        ("circula_wll", n_fit, lambda m: m.circula_wll(0.4, u, v, w)),
    ]


_FIT_DRIVER = """
import time
import numpy as np
from axcirc import FitConfig, backend_name, builtin_scenario, fit
from axcirc.simstudy import make_covariates, simulate_dataset

sc = builtin_scenario("vm-vm-j2", n={n})
rng = np.random.default_rng(3)
z = make_covariates(sc.covariates, sc.n, rng)
data, _ = simulate_dataset(sc.truth, z, rng)
fit(data, sc.families, 2, FitConfig(restarts=2, seed=0))  # warm the caches
t0 = time.perf_counter()
res = fit(data, sc.families, 2, FitConfig(restarts={restarts}, seed=1))
dt = time.perf_counter() - t0
print(f"{{backend_name()}} {{dt:.3f}} {{res.loglik:.6f}}")
"""


def _fit_benchmark(n, restarts):
    rows = []
    for env_extra in ({}, {"AXCIRC_PURE_PYTHON": "1"}):
        env = dict(os.environ, **env_extra)
        out = subprocess.run(
            [sys.executable, "-c", _FIT_DRIVER.format(n=n, restarts=restarts)],
            capture_output=True,
            text=True,
            env=env,
            check=True,
        )
        backend, dt, loglik = out.stdout.split()
        rows.append((backend, float(dt), float(loglik)))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--quick", action="store_true", help="smaller arrays, fewer repeats")
    args = parser.parse_args()

    if cyk is None:
        print("compiled backend unavailable; nothing to compare")
        return 1

    n_transform = 2_000 if args.quick else 20_000
    n_fit = 500 if args.quick else 2_000
    repeats = 3 if args.quick else args.repeats
    rng = np.random.default_rng(0)

    print(f"median of {repeats} runs\n")
    print(f"{'kernel':<20} {'size':>7} {'python':>10} {'cython':>10} {'speedup':>8}")
    for name, size, call in _micro_cases(n_transform, n_fit, rng):
        call(pyk)  # warm both paths before timing
        call(cyk)
        t_py = _time(lambda: call(pyk), repeats)
        t_cy = _time(lambda: call(cyk), repeats)
        print(
            f"{name:<20} {size:>7} {t_py * 1e3:>9.2f}ms {t_cy * 1e3:>9.2f}ms"
            f" {t_py / t_cy:>7.1f}x"
        )

    fit_n = 200 if args.quick else 600
    fit_restarts = 2 if args.quick else 5
    print(f"\nfull fit, J=2, n={fit_n}, {fit_restarts} restarts (one run each)")
    rows = _fit_benchmark(fit_n, fit_restarts)
    for backend, dt, loglik in rows:
        print(f"{backend:<20} {dt:>9.2f}s  loglik {loglik:.6f}")
    logliks = {round(r[2], 4) for r in rows}
    if len(logliks) == 1:
        print("backends agree on the fitted log-likelihood")
    else:
        print("warning: backends disagree:", sorted(logliks))
    return 0


if __name__ == "__main__":
    sys.exit(main())
