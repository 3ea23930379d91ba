"""Photodiode response h(t) = kappa exp(-kappa t) and derived smoothing constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import ConsistencyError, DomainError
from .laser import LaserParams, LaserTrajectory, sample_windows

__all__ = [
    "DetectorParams",
    "DECAY_LEVEL",
    "MIN_WINDOW_POINTS",
    "s0",
    "c0",
    "response_weights",
    "r_l_squared",
    "sample_r2",
    "s_minus",
    "check_decay",
]

# h(tau)/h(0) and v(tau)/v(0) must fall below this level.
DECAY_LEVEL = 1e-6
MIN_WINDOW_POINTS = 200


@dataclass(frozen=True)
class DetectorParams:
    """Detector chain.

    ``tau`` defaults to 14/kappa_resp.  Sample times are either given
    explicitly or generated as ``t_l = tau + l * dt_sample``, l = 0..m-1.
    """

    kappa_resp: float
    sigma_el: tuple[float, ...] = (0.0, 0.0)
    tau: float | None = None
    m: int = 1
    dt_sample: float | None = None
    sample_times: tuple[float, ...] | None = field(default=None)

    def __post_init__(self) -> None:
        if not self.kappa_resp > 0:
            raise DomainError("kappa_resp must be positive")
        object.__setattr__(self, "sigma_el", tuple(float(s) for s in self.sigma_el))
        if any(s < 0 for s in self.sigma_el):
            raise DomainError("electronic noise std must be non-negative")
        if self.tau is None:
            object.__setattr__(self, "tau", 14.0 / self.kappa_resp)
        if not self.tau > 0:
            raise DomainError("tau must be positive")
        if math.exp(-self.kappa_resp * self.tau) > DECAY_LEVEL:
            raise DomainError(
                f"h(tau)/h(0) = {math.exp(-self.kappa_resp * self.tau):.3g} exceeds {DECAY_LEVEL}"
            )
        if self.sample_times is not None:
            st = tuple(float(t) for t in self.sample_times)
            object.__setattr__(self, "sample_times", st)
            object.__setattr__(self, "m", len(st))
            gaps = np.diff(st)
            if np.any(gaps < self.tau * (1 - 1e-12)):
                raise DomainError("sample times must be spaced by at least tau")
            if st and st[0] < self.tau:
                raise DomainError("first sample time must leave room for a full window")
        elif self.dt_sample is not None and self.dt_sample < self.tau * (1 - 1e-12):
            raise DomainError("dt_sample must be at least tau")
        if self.m < 1:
            raise DomainError("m must be at least 1")

    def h(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, self.kappa_resp * np.exp(-self.kappa_resp * t), 0.0)

    def times(self, m: int | None = None) -> np.ndarray:
        """Sample times t_l (seconds)."""
        if self.sample_times is not None:
            return np.asarray(self.sample_times)
        m = self.m if m is None else m
        step = self.dt_sample if self.dt_sample is not None else self.tau
        return self.tau + step * np.arange(m)

    def sigma_el_for(self, channels: int) -> np.ndarray:
        s = np.asarray(self.sigma_el, dtype=float)
        if s.size == 1:
            s = np.repeat(s, channels)
        return s[:channels]


def check_decay(d: DetectorParams, laser: LaserParams) -> None:
    """Intensity correlations must have decayed within one window."""
    if laser.v0 > 0 and math.exp(-laser.gamma1 * d.tau) > DECAY_LEVEL:
        raise DomainError(
            f"v(tau)/v(0) = {math.exp(-laser.gamma1 * d.tau):.3g} exceeds {DECAY_LEVEL}; "
            "increase tau or gamma1"
        )


def s0(d: DetectorParams, response: Callable[[np.ndarray], np.ndarray] | None = None) -> float:
    """Integral of h**2 over [0, inf); quadrature when ``response`` is given."""
    if response is None:
        return d.kappa_resp / 2.0
    val, _ = integrate.quad(lambda r: float(response(np.asarray(r))) ** 2, 0.0, np.inf, epsabs=0, epsrel=1e-12, limit=200)
    return val


def c0(d: DetectorParams, laser: LaserParams) -> float:
    """RIN contribution to the sample covariance, exponential h and v."""
    k, g1, w2 = d.kappa_resp, laser.gamma1, laser.w2
    return 2.0 * k * (1.0 - w2) / (k + 2.0 * g1) * (1.0 + w2 + 2.0 * g1 * w2 / (k + g1))


def response_weights(kappa: float, window: float, n_steps: int, power: int) -> np.ndarray:
    """Weights q_k with sum_k q_k g(t_k) = integral of h(t_l - t)**power g(t) dt.

    Exact when g is the piecewise-linear interpolant of its grid values on
    ``t_k = t_l - window + k*window/n_steps``.  Ordered by increasing t.
    """
    dr = window / n_steps
    a = power * kappa
    c = a * dr
    em = math.expm1(-c)
    i0 = (c + em) / c**2
    i1 = (-em - c * math.exp(-c)) / c**2
    r = dr * np.arange(n_steps)
    base = kappa**power * np.exp(-a * r) * dr
    w = np.zeros(n_steps + 1)
    w[:-1] += base * i0
    w[1:] += base * i1
    # index 0 above is r = 0, i.e. t = t_l
    return w[::-1].copy()


def r_l_squared(traj: LaserTrajectory, d: DetectorParams, t_l: float, lambda_abs2: float | None = None) -> float:
    """Random normalisation R_l(f)**2 for the window ending at ``t_l``.

    ``lambda_abs2`` normalises |f|**2; it defaults to the long-run mean of
    the trajectory being unknown, so pass it explicitly when available.
    """
    t = traj.t
    dt = traj.dt
    start = t_l - d.tau
    if start < t[0] - 1e-12 * max(1.0, abs(t[0])) or t_l > t[-1] + 1e-12 * max(1.0, abs(t[-1])):
        raise DomainError("trajectory does not cover [t_l - tau, t_l]")
    n_steps = int(round(d.tau / dt))
    if n_steps + 1 < MIN_WINDOW_POINTS:
        raise DomainError(f"window holds {n_steps + 1} grid points, need {MIN_WINDOW_POINTS}")
    k0 = int(round((start - t[0]) / dt))
    if abs(t[0] + k0 * dt - start) > 1e-6 * dt or abs(n_steps * dt - d.tau) > 1e-6 * dt:
        raise DomainError("t_l - tau and tau must fall on the trajectory grid")
    lam2 = float(np.mean(traj.abs2)) if lambda_abs2 is None else lambda_abs2
    g = traj.abs2[k0 : k0 + n_steps + 1] / lam2
    return float(response_weights(d.kappa_resp, d.tau, n_steps, 2) @ g)


def window_steps(d: DetectorParams, laser: LaserParams, dt: float | None = None) -> int:
    """Grid steps per window: default step min(1/gamma0, 1/gamma1, 1/kappa)/50."""
    if dt is None:
        rates = [d.kappa_resp]
        if laser.gamma0 > 0:
            rates.append(laser.gamma0)
        if laser.v0 > 0:
            rates.append(laser.gamma1)
        dt = 1.0 / max(rates) / 50.0
    return max(MIN_WINDOW_POINTS - 1, int(math.ceil(d.tau / dt - 1e-9)))


def sample_r2(
    laser: LaserParams,
    d: DetectorParams,
    n_windows: int,
    seed=None,
    dt: float | None = None,
    chunk: int = 4096,
) -> np.ndarray:
    """Independent draws of R_l(f)**2 (1/s)."""
    check_decay(d, laser)
    n_steps = window_steps(d, laser, dt)
    wts = response_weights(d.kappa_resp, d.tau, n_steps, 2)
    out = np.empty(n_windows)
    for i, lo in enumerate(range(0, n_windows, chunk)):
        hi = min(lo + chunk, n_windows)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        u, _ = sample_windows(laser, np.full(hi - lo, d.tau), d.tau, n_steps, rng, with_phase=False)
        out[lo:hi] = (u * u) @ wts
    return out


def s_minus(r2: Sequence[float], S0: float | None = None) -> tuple[float, float]:
    """S_- = 1 / mean(R_l**-2) with a delta-method standard error.

    When ``S0`` is given, raises if the estimate exceeds S0 by more than
    three standard errors.
    """
    r2 = np.asarray(r2, dtype=float)
    if r2.size < 2:
        raise DomainError("need at least two R_l**2 values")
    if np.any(r2 <= 0):
        raise DomainError("R_l**2 must be positive")
    inv = 1.0 / r2
    m = inv.mean()
    est = 1.0 / m
    se = inv.std(ddof=1) / math.sqrt(inv.size) * est * est
    if S0 is not None and est > S0 + 3.0 * se:
        raise ConsistencyError(f"S_- = {est} exceeds S0 = {S0} by more than 3 s.e. ({se})")
    return est, se
