"""Min-entropy ledger for the two-channel sampled output.

An n-bit ADC covers [mu_j - R_j, mu_j + R_j] with resolution
delta_j = 2 R_j / 2**n.  With R_j = x_j Sigma_j the reference entropy
depends on (n, x_1, x_2) only.  All entropies are in bits per sample.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, optimize, special, stats

from .analytic import NoiseBudget
from .errors import DomainError

__all__ = [
    "AdcConfig",
    "ResolvedAdc",
    "EntropyReport",
    "TABLE_N",
    "TABLE_X",
    "phi_cdf",
    "rectangle_mass",
    "guessing_prob_numeric",
    "h_min_total",
    "h_ref_and_tables",
    "table1",
    "table2",
    "loss_correlation",
    "h_cond_classical",
    "h_lb_quantum",
    "saturation_prob",
    "empirical_min_entropy",
    "entropy_report",
    "figure_curves",
]

TABLE_N = (8, 10, 12, 16, 32)
TABLE_X = (3.8, 4.0, 4.6, 5.1, 6.0, 8.9, 9.5)


def phi_cdf(x):
    """Standard normal CDF through erfc, accurate in both tails."""
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


def _tail2(x):
    """P(|Z| > x) = erfc(x / sqrt 2)."""
    return special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


@dataclass(frozen=True)
class ResolvedAdc:
    n_bits: int
    R: np.ndarray
    delta: np.ndarray
    center: np.ndarray
    x: np.ndarray | None = None

    @property
    def lower(self) -> np.ndarray:
        return self.center - self.R


@dataclass(frozen=True)
class AdcConfig:
    """ADC placement.

    Give either ``x`` (range multipliers, R_j = x_j Sigma_j) or ``ranges``
    (R_j in volts).  ``centering`` defaults to the channel means, which
    places the range symmetrically around each mean.
    """

    n_bits: int
    x: tuple[float, ...] | None = (4.0, 4.0)
    ranges: tuple[float, ...] | None = None
    centering: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.n_bits, (int, np.integer)) or not 2 <= self.n_bits <= 64:
            raise DomainError("n_bits must be an integer in [2, 64]")
        if self.ranges is not None:
            object.__setattr__(self, "ranges", tuple(float(r) for r in np.atleast_1d(self.ranges)))
            object.__setattr__(self, "x", None)
            if any(r <= 0 for r in self.ranges):
                raise DomainError("ranges must be positive")
        elif self.x is not None:
            object.__setattr__(self, "x", tuple(float(v) for v in np.atleast_1d(self.x)))
            if any(v <= 0 for v in self.x):
                raise DomainError("x must be positive")
        else:
            raise DomainError("AdcConfig needs x or ranges")

    def resolve(self, budget: NoiseBudget) -> ResolvedAdc:
        ch = budget.channels
        if self.ranges is not None:
            R = _fit(self.ranges, ch)
            xs = R / budget.Sigma
        else:
            xs = _fit(self.x, ch)
            R = xs * budget.Sigma
        center = budget.means if self.centering is None else _fit(self.centering, ch)
        delta = 2.0 * R / 2.0**self.n_bits
        return ResolvedAdc(n_bits=int(self.n_bits), R=R, delta=delta, center=center, x=xs)


def _fit(vals, ch: int) -> np.ndarray:
    a = np.asarray(vals, dtype=float).ravel()
    if a.size == 1:
        a = np.repeat(a, ch)
    if a.size < ch:
        raise DomainError(f"need {ch} values, got {a.size}")
    return a[:ch]


def rectangle_mass(mean, C, lower, upper) -> float:
    """Probability of the box [lower, upper] under a bivariate normal."""
    mean = np.asarray(mean, dtype=float)
    C = np.asarray(C, dtype=float)
    s1 = math.sqrt(C[0, 0])
    s2 = math.sqrt(C[1, 1])
    rho = C[0, 1] / (s1 * s2)
    if abs(rho) >= 1.0 - 1e-14:
        raise DomainError("covariance matrix is singular")
    a1, b1 = (lower[0] - mean[0]) / s1, (upper[0] - mean[0]) / s1
    a2, b2 = (lower[1] - mean[1]) / s2, (upper[1] - mean[1]) / s2
    if rho == 0.0:
        return float((phi_cdf(b1) - phi_cdf(a1)) * (phi_cdf(b2) - phi_cdf(a2)))
    sc = math.sqrt(1.0 - rho * rho)

    def inner(z):
        return stats.norm.pdf(z) * (phi_cdf((b2 - rho * z) / sc) - phi_cdf((a2 - rho * z) / sc))

    a1c, b1c = max(a1, -40.0), min(b1, 40.0)
    if b1c <= a1c:
        return 0.0
    val, _ = integrate.quad(inner, a1c, b1c, epsabs=1e-15, epsrel=1e-12, limit=200)
    return float(val)


def guessing_prob_numeric(budget: NoiseBudget, adc: AdcConfig | ResolvedAdc) -> dict:
    """Largest probability of a single delta_1 x delta_2 bin.

    The bin position is searched over offsets in [-delta/2, delta/2]^2
    around the mean (coarse grid, then golden-section refinement along
    each axis).  The small-bin approximation is returned alongside.
    """
    r = adc.resolve(budget) if isinstance(adc, AdcConfig) else adc
    if budget.channels != 2:
        raise DomainError("two-channel budget expected")
    C = budget.C
    if np.linalg.det(C) <= 0:
        raise DomainError("covariance matrix is singular")
    d = r.delta
    mu = budget.means

    def mass(off):
        lo = mu + np.asarray(off) - d / 2
        return rectangle_mass(mu, C, lo, lo + d)

    grid = np.linspace(-0.5, 0.5, 5)
    best = max(((a, b) for a in grid for b in grid), key=lambda ab: mass(ab * d))
    off = np.array(best) * d
    for _ in range(2):
        for k in range(2):
            def neg(s, k=k):
                o = off.copy()
                o[k] = s
                return -mass(o)

            res = optimize.minimize_scalar(neg, bounds=(-d[k] / 2, d[k] / 2), method="bounded",
                                           options={"xatol": d[k] * 1e-6})
            if -res.fun >= mass(off):
                off[k] = res.x
    p = mass(off)
    approx = d[0] * d[1] / (2 * math.pi * math.sqrt(budget.det_C))
    return {"P_guess": p, "P_guess_approx": approx, "offset": off.tolist()}


def h_min_total(budget: NoiseBudget, adc: AdcConfig | ResolvedAdc) -> dict:
    """Min-entropy of one discretised sample: numeric and small-bin forms."""
    g = guessing_prob_numeric(budget, adc)
    return {"H_min": -math.log2(g["P_guess"]), "H_min_approx": -math.log2(g["P_guess_approx"]), **g}


@dataclass(frozen=True)
class HrefResult:
    n: int
    x1: float
    x2: float
    H_ref: float
    ratio: float
    condition_ok: bool


def h_ref_and_tables(n: int, x1: float, x2: float | None = None) -> HrefResult:
    """Reference entropy and the saturation/guessing ratio for ranges x_j Sigma_j."""
    x2 = x1 if x2 is None else x2
    if x1 <= 0 or x2 <= 0:
        raise DomainError("x must be positive")
    h = 2 * n - 1 - math.log2(x1 * x2 / math.pi)
    q1, q2 = float(_tail2(x1)), float(_tail2(x2))
    p_sat = q1 + q2 - q1 * q2
    ratio = p_sat * math.pi * 2.0 ** (2 * n - 1) / (x1 * x2)
    return HrefResult(n=n, x1=x1, x2=x2, H_ref=h, ratio=ratio, condition_ok=ratio < 1.0)


def table1(ns: Sequence[int] = TABLE_N, xs: Sequence[float] = TABLE_X) -> list[list[float | None]]:
    """H_ref per (n, x); None where the saturation condition fails."""
    out = []
    for n in ns:
        row = []
        for x in xs:
            r = h_ref_and_tables(n, x)
            row.append(r.H_ref if r.condition_ok else None)
        out.append(row)
    return out


def table2(ns: Sequence[int] = TABLE_N, xs: Sequence[float] = TABLE_X) -> list[list[float]]:
    """Saturation-to-guessing probability ratio per (n, x)."""
    return [[h_ref_and_tables(n, x).ratio for x in xs] for n in ns]


def loss_correlation(budget: NoiseBudget) -> float:
    """H_ref - H_min: entropy lost to RIN-induced correlation of the channels."""
    U, T = budget.Upsilon, budget.Theta
    r = U[0] * U[1] / ((1 + T[0] + U[0]) * (1 + T[1] + U[1]))
    return max(-0.5 * math.log2(1.0 - r), 0.0)


def _h_ref_budget(budget: NoiseBudget, r: ResolvedAdc) -> float:
    return math.log2(2 * math.pi * math.sqrt(budget.Sigma2[0] * budget.Sigma2[1]) / (r.delta[0] * r.delta[1]))


def h_cond_classical(budget: NoiseBudget, adc: AdcConfig | ResolvedAdc, S_minus: float | None = None) -> dict:
    """Min-entropy conditioned on the classical noise (laser path and electronics).

    Returns the conditional entropy, the scaled-resolution entropy H0 and
    the losses with respect to H_min (``loss_vs_total``) and H_ref
    (``loss_vs_ref``).  ``S_minus`` defaults to S0.
    """
    r = adc.resolve(budget) if isinstance(adc, AdcConfig) else adc
    S0 = budget.S0
    Sm = S0 if S_minus is None else float(S_minus)
    if not 0 < Sm:
        raise DomainError("S_minus must be positive")
    lam2 = budget.lambda_abs2
    k12, k22 = budget.kappa2
    d1, d2 = r.delta
    h = math.log2(2 * math.pi * lam2 * math.sqrt(k12 * k22) * Sm / (d1 * d2))
    d10 = d1 / (math.sqrt(lam2) * math.sqrt(2 * k12 * S0))
    d20 = d2 / (math.sqrt(lam2) * math.sqrt(2 * k22 * S0))
    h0 = math.log2(math.pi / (d10 * d20))
    U, T = budget.Upsilon, budget.Theta
    loss_total = 0.5 * math.log2(budget.E12) + math.log2(S0 / Sm)
    loss_ref = math.log2(S0 / Sm) + 0.5 * math.log2((1 + T[0] + U[0]) * (1 + T[1] + U[1]))
    return {"H_cond": h, "H0": h0, "loss_vs_total": loss_total, "loss_vs_ref": loss_ref}


def h_lb_quantum(budget: NoiseBudget, adc: AdcConfig | ResolvedAdc, S_minus: float | None = None,
                 phi: float | None = None) -> dict:
    """Lower bound allowing quantum side information on the signal port.

    A negative value is returned as is, with ``negative`` set.
    """
    r = adc.resolve(budget) if isinstance(adc, AdcConfig) else adc
    phi = budget.phi if phi is None else phi
    s = abs(math.sin(phi))
    if s < 1e-12:
        raise DomainError("sin(phi) = 0: the bound is vacuous")
    Sm = budget.S0 if S_minus is None else float(S_minus)
    k13, k23 = budget.kappa3
    k12, k22 = budget.kappa2
    h = math.log2(4 * math.pi * k13 * k23 * s * budget.lambda_abs2 * Sm / (r.delta[0] * r.delta[1]))
    loss = math.log2(math.sqrt(k12 * k22) / (2 * k13 * k23 * s))
    if h < 0:
        warnings.warn("entropy lower bound is negative", RuntimeWarning, stacklevel=2)
    return {"H_lb": h, "loss": loss, "negative": h < 0}


def saturation_prob(budget: NoiseBudget, adc: AdcConfig | ResolvedAdc) -> float:
    """Probability that a sample falls outside the ADC box.

    Computed through tail probabilities so that values near 1e-18 keep
    their relative accuracy.
    """
    r = adc.resolve(budget) if isinstance(adc, AdcConfig) else adc
    s = budget.Sigma
    # Box in standard units, possibly off-centre.
    a = (r.center - r.R - budget.means) / s
    b = (r.center + r.R - budget.means) / s
    out1 = [float(phi_cdf(a[k]) + phi_cdf(-b[k])) for k in range(2)]
    rho = budget.C[0, 1] / (s[0] * s[1])
    if rho == 0.0:
        return out1[0] + out1[1] - out1[0] * out1[1]
    if abs(rho) >= 1 - 1e-14:
        raise DomainError("covariance matrix is singular")
    sc = math.sqrt(1 - rho * rho)

    def inner(z):
        t2 = phi_cdf((a[1] - rho * z) / sc) + phi_cdf(-(b[1] - rho * z) / sc)
        return stats.norm.pdf(z) * t2

    # P(out) = P(Z1 out) + P(Z1 in, Z2 out)
    val, _ = integrate.quad(inner, a[0], b[0], epsabs=1e-300, epsrel=1e-11, limit=400,
                            points=[0.0] if a[0] < 0 < b[0] else None)
    return out1[0] + float(val)


@dataclass(frozen=True)
class EmpiricalEntropy:
    h_plugin: float
    h_upper_conf: float
    h_mode: float
    p_max: float
    p_upper: float
    m: int
    block: tuple[int, ...]


def empirical_min_entropy(
    x,
    adc: AdcConfig | ResolvedAdc,
    budget: NoiseBudget | None = None,
    confidence: float = 0.99,
) -> EmpiricalEntropy:
    """Min-entropy estimates from binned samples.

    Samples are binned into the 2**n per-axis ADC cells plus one
    saturation cell on each side.  Three numbers are reported:

    * ``h_plugin``: -log2 of the largest bin frequency (biased low, since
      the maximum of many noisy near-mode counts overshoots),
    * ``h_upper_conf``: the same with a one-sided Clopper-Pearson upper
      bound on that frequency (a conservative entropy),
    * ``h_mode``: -log2 of the average frequency over a block of
      (2k+1) bins per axis around the median bin, k = floor(0.1 Sigma/delta).
      Averaging removes most of the max-of-noise bias.

    Without ``budget`` the ADC is placed on the sample mean and spread.
    """
    x = np.asarray(getattr(x, "x", x), dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    m, ch = x.shape
    if isinstance(adc, ResolvedAdc):
        r = adc
        sig = (r.R / r.x) if r.x is not None else x.std(axis=0)
    else:
        if budget is None:
            mean = x.mean(axis=0)
            sd = x.std(axis=0)
            if adc.ranges is not None:
                R = _fit(adc.ranges, ch)
            else:
                R = _fit(adc.x, ch) * np.where(sd > 0, sd, 1.0)
            center = mean if adc.centering is None else _fit(adc.centering, ch)
            r = ResolvedAdc(n_bits=adc.n_bits, R=R, delta=2 * R / 2.0**adc.n_bits, center=center)
            sig = sd
        else:
            r = adc.resolve(budget)
            sig = budget.Sigma[:ch]
    nb = 2**r.n_bits
    codes = np.floor((x - r.lower[:ch]) / r.delta[:ch]).astype(np.int64)
    codes = np.clip(codes, -1, nb) + 1  # 0 and nb+1 are saturation cells
    flat = codes[:, 0]
    for k in range(1, ch):
        flat = flat * (nb + 2) + codes[:, k]
    _, counts = np.unique(flat, return_counts=True)
    kmax = int(counts.max())
    p_max = kmax / m
    p_up = 1.0 if kmax == m else float(stats.beta.ppf(confidence, kmax + 1, m - kmax))
    # Block around the median bin.
    kb = np.floor(0.1 * np.asarray(sig, dtype=float) / r.delta[:ch]).astype(int)
    kb = np.maximum(kb, 0)
    med = codes[np.argsort(codes[:, 0])[m // 2]] if ch == 1 else np.median(codes, axis=0).round().astype(int)
    inside = np.all(np.abs(codes - med) <= kb, axis=1)
    n_cells = int(np.prod(2 * kb + 1))
    p_mode = inside.sum() / m / n_cells
    h_mode = -math.log2(p_mode) if p_mode > 0 else float("inf")
    return EmpiricalEntropy(
        h_plugin=-math.log2(p_max),
        h_upper_conf=-math.log2(p_up),
        h_mode=h_mode,
        p_max=p_max,
        p_upper=p_up,
        m=m,
        block=tuple(int(k) for k in kb),
    )


@dataclass
class EntropyReport:
    channels: int
    n_bits: int
    delta: list
    H_min_total: float
    H_min_approx: float
    H_ref: float
    H0: float
    H_cond_classical: float
    H_lb_quantum: float | None
    loss_correlation: float
    loss_classical: float
    loss_quantum: float | None
    P_guess: float
    P_guess_approx: float
    P_saturation: float
    sat_condition_ok: bool
    lb_negative: bool = False
    S_minus: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def entropy_report(budget: NoiseBudget, adc: AdcConfig, S_minus: float | None = None) -> EntropyReport:
    """Every entropy quantity for a two-channel budget."""
    if budget.channels == 1:
        from .single_homodyne import single_report

        return single_report(budget, adc, S_minus=S_minus)
    r = adc.resolve(budget)
    hm = h_min_total(budget, r)
    cond = h_cond_classical(budget, r, S_minus)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            lb = h_lb_quantum(budget, r, S_minus)
    except DomainError:
        lb = None
    p_sat = saturation_prob(budget, r)
    return EntropyReport(
        channels=2,
        n_bits=r.n_bits,
        delta=r.delta.tolist(),
        H_min_total=hm["H_min"],
        H_min_approx=hm["H_min_approx"],
        H_ref=_h_ref_budget(budget, r),
        H0=cond["H0"],
        H_cond_classical=cond["H_cond"],
        H_lb_quantum=None if lb is None else lb["H_lb"],
        loss_correlation=loss_correlation(budget),
        loss_classical=cond["loss_vs_total"],
        loss_quantum=None if lb is None else lb["loss"],
        P_guess=hm["P_guess"],
        P_guess_approx=hm["P_guess_approx"],
        P_saturation=p_sat,
        sat_condition_ok=p_sat < hm["P_guess"],
        lb_negative=False if lb is None else lb["negative"],
        S_minus=S_minus,
        extra={"loss_classical_vs_ref": cond["loss_vs_ref"]},
    )


FIGURE_ETAS = {
    "small": (0.5, 0.502, 0.503, 0.504),
    "big": (0.48, 0.47, 0.46),
}


def figure_curves(
    kind: str,
    etas: Sequence[float],
    loss_percent=None,
    *,
    upsilon0: float = 0.5e4,
    theta: float = 0.12,
    s_ratio: float = 1.0,
    sin_phi: float = 1.0,
) -> dict:
    """Loss curves of the symmetric case against 100 (1 - eps).

    ``kind`` is one of ``correlation``, ``classical``, ``quantum`` or
    ``single``.  ``upsilon0`` is |lambda|**2 C0/(2 S0), so that
    Upsilon = (1 - 2 eta)**2 upsilon0; ``s_ratio`` is S0/S_-.
    """
    if loss_percent is None:
        loss_percent = np.linspace(0.0, 50.0, 51)
    lp = np.asarray(loss_percent, dtype=float)
    eps = 1.0 - lp / 100.0
    out = {"loss_percent": lp}
    for eta in etas:
        U = (1 - 2 * eta) ** 2 * upsilon0
        if kind == "correlation":
            if U == 0:
                y = np.zeros_like(eps)
            else:
                y = -0.5 * np.log2(1 - (1 + 1 / (eps * U) + theta / (eps**2 * U)) ** -2.0)
        elif kind == "classical":
            y = np.log2(s_ratio) + np.log2(1 + eps * U + theta / eps)
        elif kind == "quantum":
            y = -np.log2(4 * eta * (1 - eta) * eps * sin_phi)
        elif kind == "single":
            y = 0.5 * np.log2(1 + 2 * eps * U + theta / (2 * eps))
        else:
            raise DomainError(f"unknown figure kind {kind!r}")
        out[eta] = np.asarray(y, dtype=float) + 0.0  # no negative zeros in output
    return out
