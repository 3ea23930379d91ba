"""Oracle cross-checks behind ``octoport validate``.

Each check returns ``(name, passed, detail)``.  The quick set runs in a
couple of seconds; ``quick=False`` adds Monte Carlo comparisons.
"""

from __future__ import annotations

import math

import numpy as np

from .analytic import density_bound_check, vacuum_budget
from .circuit import CircuitParams, derive_coefficients
from .detector import DetectorParams, c0, s0, s_minus, sample_r2
from .entropy import TABLE_N, TABLE_X, table1, table2
from .laser import LaserParams
from .single_homodyne import TABLE3_N, TABLE3_X, table3

__all__ = ["PUBLISHED_TABLE1", "PUBLISHED_TABLE2", "PUBLISHED_TABLE3", "random_params", "run_checks"]

_ = None
# Printed values, rows n = 8, 10, 12, 16, 32; None marks a blank cell.
PUBLISHED_TABLE1 = [
    [_, 12.65, 12.25, 11.95, 11.48, 10.34, 10.16],
    [_, _, 16.25, 15.95, 15.48, 14.34, 14.16],
    [_, _, _, 19.95, 19.48, 18.34, 18.16],
    [_, _, _, _, 27.48, 26.34, 26.16],
    [_, _, _, _, _, 58.34, 58.16],
]
PUBLISHED_TABLE2 = [
    [2.1, 0.82, 4.1e-2, 2.7e-3, 1.1e-5, 1.5e-15, 4.8e-18],
    [33, 13, 0.66, 4.3e-2, 1.8e-4, 2.3e-14, 7.7e-17],
    [5.3e2, 2.1e2, 11, 0.69, 2.9e-3, 3.7e-13, 1.2e-15],
    [14e4, 5.3e4, 2.7e3, 1.8e2, 0.74, 9.5e-11, 3.1e-15],
    [5.8e14, 2.3e14, 1.2e13, 7.6e11, 3.2e9, 0.41, 1.3e-3],
]
PUBLISHED_TABLE3 = [
    [6.74, 6.56, 6.33, 6.12, 5.72, 5.17, 5.08],
    [_, 8.56, 8.33, 8.12, 7.72, 7.17, 7.08],
    [_, _, 10.33, 10.12, 9.72, 9.17, 9.08],
    [_, _, _, 14.12, 13.72, 13.17, 13.08],
    [_, _, _, _, 29.72, 29.17, 29.08],
]
del _

# Cells whose printed value disagrees with the formula by an exact factor
# (the rest of the row follows the formula); reported but not failed.
KNOWN_MISPRINTS = {(16, 9.5)}


def sig2(v: float) -> float:
    """Round to two significant figures."""
    if v == 0:
        return 0.0
    return float(f"{v:.2g}")


def random_params(rng: np.random.Generator, sin_phi_min: float = 0.0) -> CircuitParams:
    """A random valid circuit with all transmissivities in (0.05, 0.95)."""
    while True:
        psi2 = rng.uniform(-math.pi, math.pi)
        if abs(math.sin(psi2)) >= sin_phi_min:
            break
    return CircuitParams(
        eta=tuple(rng.uniform(0.05, 0.95, 4)),
        eps=tuple(rng.uniform(0.05, 1.0, 4)),
        xi=tuple(rng.uniform(0.1, 10.0, 4)),
        psi1=0.0,
        psi2=psi2,
    )


def _cmp_table(computed, printed, tol):
    bad = []
    for i, (crow, prow) in enumerate(zip(computed, printed)):
        for j, (c, p) in enumerate(zip(crow, prow)):
            if (c is None) != (p is None) or (c is not None and abs(c - p) > tol):
                bad.append((i, j, c, p))
    return bad


def run_checks(quick: bool = True, seed: int = 12345) -> list[tuple[str, bool, str]]:
    out = []
    bad = _cmp_table(table1(TABLE_N, TABLE_X), PUBLISHED_TABLE1, 0.005 + 1e-9)
    out.append(("table 1", not bad, f"{len(bad)} mismatching cells"))
    t2 = table2(TABLE_N, TABLE_X)
    bad2 = [(TABLE_N[i], TABLE_X[j], sig2(t2[i][j]), p)
            for i, row in enumerate(PUBLISHED_TABLE2) for j, p in enumerate(row)
            if not math.isclose(sig2(t2[i][j]), p, rel_tol=1e-9)]
    unexplained = [b for b in bad2 if (b[0], b[1]) not in KNOWN_MISPRINTS]
    out.append(("table 2", not unexplained,
                f"mismatches (n, x, computed, printed): {bad2}; known misprints: {sorted(KNOWN_MISPRINTS)}"))
    bad3 = _cmp_table(table3(TABLE3_N, TABLE3_X), PUBLISHED_TABLE3, 0.005 + 1e-9)
    out.append(("table 3", not bad3, f"{len(bad3)} mismatching cells"))

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(1000):
        co = derive_coefficients(random_params(rng), 1e6)
        worst = max(worst, float(co.decomposition_residual().max()))
    out.append(("shot-noise decomposition", worst < 1e-12, f"worst relative error {worst:.2e}"))

    viol = 0
    for _ in range(1000):
        co = derive_coefficients(random_params(rng, 0.1), 1.0)
        viol += not density_bound_check(co, 1.0).ok
    out.append(("density bound", viol == 0, f"{viol} violations in 1000 draws"))

    if not quick:
        las = LaserParams(lambda_abs2=1e6, w2=0.9, gamma1=5e3)
        d = DetectorParams(kappa_resp=1e3)
        r2 = sample_r2(las, d, 20000, seed=seed)
        z = (r2.mean() - s0(d)) / (r2.std(ddof=1) / math.sqrt(r2.size))
        out.append(("E[R^2] = S0", abs(z) < 3, f"z = {z:.2f}"))
        sm, se = s_minus(r2)
        out.append(("S_- <= S0", sm <= s0(d) + 3 * se, f"S_-/S0 = {sm / s0(d):.5f}"))

        from .mc_sim import SimConfig, empirical_moments, simulate

        p = CircuitParams(eta=(0.5, 0.5, 0.45, 0.55))
        las = LaserParams(lambda_abs2=1e6, w2=0.5, gamma1=1e3)
        d = DetectorParams(kappa_resp=1e3)
        mo = empirical_moments(simulate(SimConfig(p, las, d, regime="strong_lo", m=20000, seed=seed)))
        bud = vacuum_budget(derive_coefficients(p, las.lambda_abs2), s0(d), c0(d, las))
        z = np.abs(mo.cov - bud.C) / mo.se_cov
        out.append(("strong-LO covariance", bool(np.all(z < 5)), f"max z = {z.max():.2f}"))
    return out
