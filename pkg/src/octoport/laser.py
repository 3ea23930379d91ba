"""Local-oscillator model: phase diffusion times a stationary Gaussian amplitude.

    f(t) = |lambda| exp(i theta - i omega0 t - i sqrt(2 gamma0) W(t)) u(t)

with W a standard Wiener process (W(0) = 0) and u a stationary Gaussian
process of mean w and covariance v0 exp(-gamma1 |t - s|), w**2 + v0 = 1.
u is simulated with the exact AR(1) recursion on a uniform grid.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .errors import DomainError

__all__ = [
    "LaserParams",
    "LaserTrajectory",
    "sample_trajectory",
    "sample_windows",
    "first_moments",
    "rin_covariance",
    "intensity_spectrum",
    "rin_spectrum",
    "rin_eff",
    "rin_spectrum_and_eff",
]


@dataclass(frozen=True)
class LaserParams:
    """Laser parameters.

    ``w2`` is the squared mean of u(t); the variance of u is ``1 - w2``.
    ``theta=None`` draws the global phase uniformly once per trajectory.
    """

    lambda_abs2: float
    omega0: float = 0.0
    gamma0: float = 0.0
    w2: float = 1.0
    gamma1: float = 1.0
    theta: float | None = None

    def __post_init__(self) -> None:
        if not self.lambda_abs2 > 0:
            raise DomainError("lambda_abs2 must be positive")
        if self.gamma0 < 0:
            raise DomainError("gamma0 must be non-negative")
        if not self.gamma1 > 0:
            raise DomainError("gamma1 must be positive")
        if not 0.0 <= self.w2 <= 1.0:
            raise DomainError("w2 must lie in [0, 1] so that w**2 + v0 = 1 with v0 >= 0")

    @classmethod
    def from_w(cls, lambda_abs2: float, w: float, v0: float, **kw) -> "LaserParams":
        if abs(w * w + v0 - 1.0) > 1e-12:
            raise DomainError(f"w**2 + v0 = {w * w + v0} != 1")
        return cls(lambda_abs2=lambda_abs2, w2=w * w, **kw)

    @property
    def w(self) -> float:
        return math.sqrt(self.w2)

    @property
    def v0(self) -> float:
        return 1.0 - self.w2

    @property
    def lam(self) -> float:
        return math.sqrt(self.lambda_abs2)

    def v(self, lag) -> np.ndarray | float:
        """Covariance of u at the given lag."""
        return self.v0 * np.exp(-self.gamma1 * np.abs(lag))


@dataclass
class LaserTrajectory:
    t: np.ndarray
    f: np.ndarray
    theta: float

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def abs2(self) -> np.ndarray:
        return np.abs(self.f) ** 2

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "re_f", "im_f", "abs2"])
            for t, z, a in zip(self.t, self.f, self.abs2):
                w.writerow([repr(float(t)), repr(float(z.real)), repr(float(z.imag)), repr(float(a))])


def _ar1(p: LaserParams, n_paths: int, n_points: int, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Stationary u paths, shape (n_paths, n_points)."""
    w = p.w
    if p.v0 == 0.0:
        return np.full((n_paths, n_points), w)
    rho = math.exp(-p.gamma1 * dt)
    sd0 = math.sqrt(p.v0)
    z = rng.standard_normal((n_paths, n_points))
    z[:, 0] *= sd0
    z[:, 1:] *= sd0 * math.sqrt(1.0 - rho * rho)
    return w + lfilter([1.0], [1.0, -rho], z, axis=1)


def _phase(p: LaserParams, t_start: np.ndarray, n_points: int, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Accumulated phase -omega0 t - sqrt(2 gamma0) W(t) + theta on each window."""
    n_paths = t_start.shape[0]
    offsets = dt * np.arange(n_points)
    phase = -p.omega0 * (t_start[:, None] + offsets[None, :])
    if p.gamma0 > 0:
        dw = rng.standard_normal((n_paths, n_points))
        dw[:, 0] *= np.sqrt(np.maximum(t_start, 0.0))
        dw[:, 1:] *= math.sqrt(dt)
        phase -= math.sqrt(2.0 * p.gamma0) * np.cumsum(dw, axis=1)
    if p.theta is None:
        theta = rng.uniform(0.0, 2.0 * math.pi, size=n_paths)
    else:
        theta = np.full(n_paths, float(p.theta))
    return phase + theta[:, None], theta


def sample_trajectory(p: LaserParams, grid: np.ndarray, rng_seed=None) -> LaserTrajectory:
    """One trajectory of f on a uniform, non-negative time grid."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise DomainError("grid needs at least two points")
    dt = float(grid[1] - grid[0])
    if not dt > 0:
        raise DomainError("grid step must be positive")
    if not np.allclose(np.diff(grid), dt, rtol=1e-9, atol=0.0):
        raise DomainError("grid must be uniform")
    if grid[0] < 0:
        raise DomainError("grid must start at t >= 0")
    rng = np.random.default_rng(rng_seed)
    u = _ar1(p, 1, grid.size, dt, rng)[0]
    phase, theta = _phase(p, grid[:1], grid.size, dt, rng)
    f = p.lam * np.exp(1j * phase[0]) * u
    return LaserTrajectory(t=grid.copy(), f=f, theta=float(theta[0]))


def sample_windows(
    p: LaserParams,
    t_end: np.ndarray,
    window: float,
    n_steps: int,
    rng: np.random.Generator,
    with_phase: bool = True,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Independent normalised LO windows ending at each ``t_end``.

    Returns ``(u, phase)`` on the grid ``t_end - window + k*window/n_steps``,
    k = 0..n_steps; the normalised field is ``u * exp(i*phase)``.  ``phase``
    is None when ``with_phase`` is false (vacuum signal needs |f| only).
    """
    t_end = np.asarray(t_end, dtype=float)
    dt = window / n_steps
    u = _ar1(p, t_end.size, n_steps + 1, dt, rng)
    if not with_phase:
        return u, None
    phase, _ = _phase(p, t_end - window, n_steps + 1, dt, rng)
    return u, phase


def first_moments(p: LaserParams, t: float, s: float) -> dict[str, complex | float]:
    """Closed-form moments of f at times t, s >= 0.

    Moments that carry the global phase (``E_f`` and ``E_ff``) are given
    conditionally on ``p.theta``; they vanish when theta is uniform.
    """
    lam = p.lam
    v = float(p.v(t - s))
    if p.theta is None:
        lam_c = 0.0
    else:
        lam_c = lam * np.exp(1j * p.theta)
    e_f = lam_c * p.w * np.exp(-1j * p.omega0 * t - p.gamma0 * t)
    e_fbar_f = p.lambda_abs2 * np.exp(1j * p.omega0 * (s - t) - p.gamma0 * abs(t - s)) * (p.w2 + v)
    e_ff = lam_c**2 * np.exp(-(1j * p.omega0 + p.gamma0) * (t + s) - 2 * p.gamma0 * min(t, s)) * (p.w2 + v)
    cov = 2.0 * p.lambda_abs2**2 * v * (2.0 * p.w2 + v)
    return {"E_f": complex(e_f), "E_fbar_f": complex(e_fbar_f), "E_ff": complex(e_ff), "cov_abs2": float(cov)}


def rin_covariance(p: LaserParams, lag) -> np.ndarray | float:
    """E[n_RIN(t) n_RIN(t - lag)] for n_RIN = u**2 - 1."""
    v = p.v(lag)
    return 2.0 * v * v + 4.0 * p.w2 * v


def intensity_spectrum(p: LaserParams, mu) -> np.ndarray | float:
    """Spectrum of f: a Lorentzian of width gamma0 plus one of width gamma0 + gamma1."""
    mu = np.asarray(mu, dtype=float)
    d2 = (mu - p.omega0) ** 2
    g0, g01 = p.gamma0, p.gamma0 + p.gamma1
    out = 2.0 * p.lambda_abs2 * (1.0 - p.w2) * g01 / (g01**2 + d2)
    if p.w2 > 0:
        if g0 == 0:
            raise DomainError("gamma0 = 0 makes the coherent line a delta function")
        out = out + 2.0 * p.lambda_abs2 * p.w2 * g0 / (g0**2 + d2)
    return out


def rin_spectrum(p: LaserParams, mu) -> np.ndarray | float:
    mu = np.asarray(mu, dtype=float)
    g1 = p.gamma1
    return 8.0 * (1.0 - p.w2) * g1 * (p.w2 / (g1**2 + mu**2) + (1.0 - p.w2) / (4.0 * g1**2 + mu**2))


def rin_eff(p: LaserParams) -> float:
    """Integral over all lags of the RIN correlation."""
    return 2.0 / p.gamma1 * (1.0 - p.w2) * (1.0 + 3.0 * p.w2)


def rin_spectrum_and_eff(p: LaserParams, mu) -> tuple[np.ndarray | float, float]:
    return rin_spectrum(p, mu), rin_eff(p)
