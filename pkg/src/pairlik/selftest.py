"""Built-in oracle checks, callable from the CLI.

Quick versions of the independent verification routes: each check prints
one PASS/FAIL line; the run exits nonzero if anything fails.
"""

from __future__ import annotations

import numpy as np

from .dataset import Dataset
from .isotonic import maxmin_oracle, pava
from .pairs import build_pairs
from .prl import loglik, profile_loglik
from .simlab import draw_errors, true_f0
from .sphere import UnitBeta, to_angles, to_beta


def _check_pava_maxmin() -> bool:
    rng = np.random.default_rng(20240817)
    for _ in range(200):
        k = int(rng.integers(1, 41))
        ind = rng.integers(0, 2, k).astype(float)
        w = rng.uniform(0.2, 3.0, k)
        fit = pava(ind, w).fitted
        oracle = maxmin_oracle(ind, w)
        if not np.allclose(fit, oracle, atol=1e-12, rtol=0.0):
            return False
    return True


def _check_polar_roundtrip() -> bool:
    rng = np.random.default_rng(7)
    for p in (2, 3, 5):
        for _ in range(100):
            b = rng.standard_normal(p)
            b /= np.linalg.norm(b)
            b2 = to_beta(to_angles(UnitBeta(b))).beta
            if np.max(np.abs(b - b2)) > 1e-10:
                return False
    return True


def _check_loglik_bruteforce() -> bool:
    rng = np.random.default_rng(3)
    data = Dataset(rng.standard_normal((5, 2)), rng.standard_normal(5))
    beta = np.array([0.6, 0.8])
    pl, cdf = profile_loglik(data, beta)
    brute = 0.0
    for i in range(5):
        for j in range(5):
            if i == j:
                continue
            v = float((data.x[i] - data.x[j]) @ beta)
            q = float(cdf(v))
            if data.y[i] > data.y[j]:
                brute += np.log(q) if q > 0 else 0.0
            else:
                brute += np.log1p(-q) if q < 1 else 0.0
    return abs(pl - brute) < 1e-10


def _check_gumbel_difference() -> bool:
    rng = np.random.default_rng(11)
    e = draw_errors(rng, "extreme_value", 2 * 10 ** 5)
    d = e[: 10 ** 5] - e[10 ** 5:]
    grid = np.linspace(-6, 6, 241)
    emp = np.searchsorted(np.sort(d), grid, side="right") / d.size
    gap = np.max(np.abs(emp - true_f0("extreme_value")(grid)))
    return gap < 6e-3


def _check_pair_sorting() -> bool:
    rng = np.random.default_rng(5)
    data = Dataset(rng.standard_normal((4, 2)), rng.standard_normal(4))
    beta = UnitBeta(np.array([1.0, 0.0]))
    ps = build_pairs(data, beta)
    return ps.size == 12 and bool(np.all(np.diff(ps.v_sorted) >= 0))


CHECKS = [
    ("pava equals max-min oracle", _check_pava_maxmin),
    ("polar chart round-trip", _check_polar_roundtrip),
    ("likelihood equals brute-force pair sum", _check_loglik_bruteforce),
    ("error-difference CDF is standard logistic", _check_gumbel_difference),
    ("pair system sorted and complete", _check_pair_sorting),
]


def run_selftest() -> int:
    failures = 0
    for name, fn in CHECKS:
        ok = False
        try:
            ok = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            print(f"FAIL {name} ({exc})")
            failures += 1
            continue
        print(f"{'PASS' if ok else 'FAIL'} {name}")
        failures += 0 if ok else 1
    return 0 if failures == 0 else 1
