"""Single homodyne detector: one difference channel, univariate ledger.

The circuit is the double homodyne one with BS1 and BS2 removed; see
:func:`octoport.circuit.single_homodyne_params` for the coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .analytic import NoiseBudget, vacuum_budget
from .circuit import Coefficients
from .entropy import AdcConfig, EntropyReport, ResolvedAdc, phi_cdf
from .errors import DomainError

__all__ = [
    "SingleBudget",
    "TABLE3_N",
    "TABLE3_X",
    "single_budget",
    "h_min_single",
    "h_single_table",
    "saturation_single",
    "loss_classical_single",
    "loss_classical_single_budget",
    "table3",
    "single_report",
]

TABLE3_N = (8, 10, 12, 16, 32)
TABLE3_X = (3.0, 3.4, 4.0, 4.6, 6.1, 8.9, 9.5)


@dataclass(frozen=True)
class SingleBudget:
    """Vacuum moments of the single difference current (volts, volts**2)."""

    mu1: float
    Sigma1_2: float
    Upsilon1: float
    Theta1: float
    kappa12: float
    lambda_abs2: float
    S0: float

    def __post_init__(self) -> None:
        if not self.Sigma1_2 > 0:
            raise DomainError("Sigma1**2 must be positive")

    @property
    def Sigma1(self) -> float:
        return math.sqrt(self.Sigma1_2)

    @classmethod
    def from_budget(cls, b: NoiseBudget) -> "SingleBudget":
        return cls(
            mu1=float(b.means[0]),
            Sigma1_2=float(b.Sigma2[0]),
            Upsilon1=float(b.Upsilon[0]),
            Theta1=float(b.Theta[0]),
            kappa12=float(b.kappa2[0]),
            lambda_abs2=b.lambda_abs2,
            S0=b.S0,
        )


def single_budget(coeff: Coefficients, S0: float, C0: float, sigma_el: float = 0.0,
                  lambda_abs2: float | None = None) -> SingleBudget:
    if coeff.channels != 1:
        raise DomainError("single-channel coefficients expected")
    return SingleBudget.from_budget(vacuum_budget(coeff, S0, C0, lambda_abs2, [sigma_el]))


def _resolve(budget: SingleBudget, adc: AdcConfig | ResolvedAdc) -> tuple[int, float, float]:
    """(n, R, delta) for channel 1."""
    if isinstance(adc, ResolvedAdc):
        return adc.n_bits, float(adc.R[0]), float(adc.delta[0])
    if adc.ranges is not None:
        R = float(adc.ranges[0])
    else:
        R = float(adc.x[0]) * budget.Sigma1
    return adc.n_bits, R, 2.0 * R / 2.0**adc.n_bits


def h_min_single(budget: SingleBudget, adc: AdcConfig | ResolvedAdc) -> dict:
    """Min-entropy of one sample; the densest bin is the one centred on the mean."""
    n, R, d = _resolve(budget, adc)
    s = budget.Sigma1
    p = float(special.erf(d / (2.0 * math.sqrt(2.0) * s)))
    approx = d / (math.sqrt(2 * math.pi) * s)
    return {"H_min": -math.log2(p), "H_min_approx": -math.log2(approx), "P_guess": p, "P_guess_approx": approx}


def h_single_table(n: int, x: float) -> float:
    """Small-bin min-entropy with R_1 = x Sigma_1."""
    return n - 0.5 + math.log2(math.sqrt(math.pi) / x)


def saturation_single(x: float, n: int | None = None) -> dict:
    """Saturation probability 2(1 - Phi(x)) and, given n, the condition P_sat < P_guess."""
    p = float(special.erfc(x / math.sqrt(2.0)))
    out = {"P_sat": p}
    if n is not None:
        out["P_guess"] = x / (math.sqrt(math.pi) * 2.0 ** (n - 0.5))
        out["condition_ok"] = p < out["P_guess"]
    return out


def loss_classical_single(eps, eta, theta: float = 0.12, upsilon0: float = 0.5e4,
                          e_inv_r_sqrt_s0: float = 1.0):
    """Loss from distrusting classical noise, symmetric single-channel case.

    Uses Upsilon_1 = 2 eps Upsilon and Theta_1 = Theta/(2 eps) with
    Upsilon = (1 - 2 eta)**2 upsilon0, upsilon0 = |lambda|**2 C0/(2 S0).
    """
    eps = np.asarray(eps, dtype=float)
    U = (1.0 - 2.0 * np.asarray(eta, dtype=float)) ** 2 * upsilon0
    val = 0.5 * np.log2(1.0 + 2.0 * eps * U + theta / (2.0 * eps)) + math.log2(e_inv_r_sqrt_s0)
    return float(val) if val.ndim == 0 else val


def loss_classical_single_budget(budget: SingleBudget, e_inv_r_sqrt_s0: float = 1.0) -> float:
    return 0.5 * math.log2(1.0 + budget.Upsilon1 + budget.Theta1) + math.log2(e_inv_r_sqrt_s0)


def table3(ns: Sequence[int] = TABLE3_N, xs: Sequence[float] = TABLE3_X) -> list[list[float | None]]:
    """H_min(X_1) per (n, x); None where the saturation condition fails."""
    return [
        [h_single_table(n, x) if saturation_single(x, n)["condition_ok"] else None for x in xs]
        for n in ns
    ]


def single_report(budget: NoiseBudget | SingleBudget, adc: AdcConfig, S_minus: float | None = None,
                  e_inv_r: float | None = None) -> EntropyReport:
    """Entropy report with ``channels = 1``.

    ``e_inv_r`` is E_f[R_l(f)**-1]; it defaults to 1/sqrt(S0).  The
    quantum-side-information bound is not defined for one channel.
    """
    sb = budget if isinstance(budget, SingleBudget) else SingleBudget.from_budget(budget)
    n, R, d = _resolve(sb, adc)
    hm = h_min_single(sb, adc)
    e_inv = 1.0 / math.sqrt(sb.S0) if e_inv_r is None else float(e_inv_r)
    h_cond = math.log2(math.sqrt(sb.lambda_abs2) * math.sqrt(2 * math.pi * sb.kappa12) / (d * e_inv))
    d0 = d / (math.sqrt(sb.lambda_abs2) * math.sqrt(2 * sb.kappa12 * sb.S0))
    h0 = math.log2(math.sqrt(math.pi) / d0)
    x = R / sb.Sigma1
    p_sat = 2.0 * float(phi_cdf(-x))
    return EntropyReport(
        channels=1,
        n_bits=n,
        delta=[d],
        H_min_total=hm["H_min"],
        H_min_approx=hm["H_min_approx"],
        H_ref=hm["H_min_approx"],
        H0=h0,
        H_cond_classical=h_cond,
        H_lb_quantum=None,
        loss_correlation=0.0,
        loss_classical=loss_classical_single_budget(sb, e_inv * math.sqrt(sb.S0)),
        loss_quantum=None,
        P_guess=hm["P_guess"],
        P_guess_approx=hm["P_guess_approx"],
        P_saturation=p_sat,
        sat_condition_ok=p_sat < hm["P_guess"],
        S_minus=S_minus,
        extra={"E_inv_R": e_inv},
    )
