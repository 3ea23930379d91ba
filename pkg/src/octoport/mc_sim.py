"""Monte Carlo samplers for the difference photocurrents X_j(t_l).

Two regimes are available:

* ``finite_lo``: the four photodiodes count photons as inhomogeneous
  Poisson processes with intensities J_j(t) driven by the LO path; the
  currents are exact sums of h over the event times.
* ``strong_lo``: given the LO path in a window, Y_j = X_j/|lambda| is
  Gaussian with mean mu_L (plus an interference term for a coherent
  signal) and variance kappa_j2 R_l(f)**2.

Each sample uses an independent LO window ending at t_l.  Samples are
produced in fixed-size chunks with a seed derived from (master seed,
chunk index), so a batch does not depend on the number of worker threads.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, is_dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .circuit import CircuitParams, derive_coefficients, detector_gains, single_homodyne_params
from .detector import DetectorParams, check_decay, response_weights, window_steps
from .errors import ConfigError, DomainError, SimulationOverflow
from .laser import LaserParams, sample_windows

__all__ = [
    "CoherentSignal",
    "SimConfig",
    "SampleBatch",
    "Moments",
    "poisson_intensities",
    "simulate_counts",
    "sample_x_finite_lo",
    "sample_y_strong_lo",
    "simulate",
    "empirical_moments",
    "MAX_EXPECTED_EVENTS",
]

MAX_EXPECTED_EVENTS = 1e8
CHUNK = {"finite_lo": 64, "strong_lo": 2048}
SIGNS = np.array([1.0, 1.0, -1.0, -1.0])


@dataclass(frozen=True)
class CoherentSignal:
    """Coherent signal with amplitude path fs(t) = amplitude * exp(-i omega t), 1/sqrt(s)."""

    amplitude: complex
    omega: float = 0.0

    def __call__(self, t):
        return self.amplitude * np.exp(-1j * self.omega * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class SimConfig:
    circuit: CircuitParams
    laser: LaserParams
    detector: DetectorParams
    regime: str = "strong_lo"
    mode: str = "double"
    signal: CoherentSignal | None = None
    m: int = 1000
    seed: int | None = 0
    dt: float | None = None
    with_electronic_noise: bool = True

    def __post_init__(self) -> None:
        if self.regime not in ("finite_lo", "strong_lo"):
            raise ConfigError(f"unknown regime {self.regime!r}")
        if self.mode not in ("double", "single"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.m < 1:
            raise DomainError("m must be at least 1")
        check_decay(self.detector, self.laser)

    @property
    def channels(self) -> int:
        return 1 if self.mode == "single" else 2

    def coefficients(self):
        if self.mode == "single":
            return single_homodyne_params(self.circuit, self.laser.lambda_abs2)
        return derive_coefficients(self.circuit, self.laser.lambda_abs2)

    def snapshot(self) -> dict:
        def conv(o):
            if is_dataclass(o):
                return {k: conv(v) for k, v in asdict(o).items()}
            if isinstance(o, dict):
                return {k: conv(v) for k, v in o.items()}
            if isinstance(o, (list, tuple)):
                return [conv(v) for v in o]
            if isinstance(o, complex):
                return [o.real, o.imag]
            return o

        return conv(self)


@dataclass
class SampleBatch:
    """m samples of (X_1, X_2) in volts (one column in single mode)."""

    x: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        if self.x.shape[0] == 1 and self.x.shape[1] > 2:
            self.x = self.x.T
        if not np.all(np.isfinite(self.x)):
            raise DomainError("sample batch contains non-finite values")

    @property
    def m(self) -> int:
        return int(self.x.shape[0])

    @property
    def channels(self) -> int:
        return int(self.x.shape[1])

    def to_csv(self, path: str | Path) -> Path:
        """Write ``l, x1[, x2]`` rows plus ``<path>.json`` with the metadata."""
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["l"] + [f"x{j + 1}" for j in range(self.channels)])
            for l, row in enumerate(self.x):
                w.writerow([l] + [repr(float(v)) for v in row])
        side = path.with_name(path.name + ".json")
        side.write_text(json.dumps(self.meta, indent=2, sort_keys=True, default=str) + "\n")
        return side

    @classmethod
    def from_csv(cls, path: str | Path) -> "SampleBatch":
        path = Path(path)
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        side = path.with_name(path.name + ".json")
        meta = json.loads(side.read_text()) if side.exists() else {}
        return cls(x=data[:, 1:], meta=meta)


def poisson_intensities(
    coeff_or_params, f_val, fs_val=0.0, single: bool = False
) -> np.ndarray:
    """Photon-arrival intensities J_1..J_4 (1/s) at the four photodiodes.

    ``coeff_or_params`` is a CircuitParams (or Coefficients carrying one).
    ``f_val`` and ``fs_val`` may be arrays; the result has a trailing axis
    of length 4.  The expanded form is used so that a vacuum signal gives
    results bitwise independent of the phases psi_j.
    """
    p = getattr(coeff_or_params, "params", coeff_or_params)
    if not isinstance(p, CircuitParams):
        raise DomainError("need CircuitParams or Coefficients built from them")
    g_sig, g_lo = detector_gains(p, single=single)
    psi = np.array([p.psi1, p.psi2, p.psi1, p.psi2])
    f = np.asarray(f_val, dtype=complex)[..., None]
    fs = np.asarray(fs_val, dtype=complex)[..., None]
    lo = g_lo * (f.real**2 + f.imag**2)
    sig = g_sig * (fs.real**2 + fs.imag**2)
    cross = 2.0 * SIGNS * np.sqrt(g_sig * g_lo) * (np.conj(fs) * 1j * np.exp(1j * psi) * f).real
    return lo + sig + cross


def simulate_counts(t_grid, values, rng: np.random.Generator) -> np.ndarray:
    """Event times of an inhomogeneous Poisson process by thinning.

    The intensity is the piecewise-linear interpolant of ``values`` on the
    uniform ``t_grid``; its maximum over the window is the largest node
    value, which serves as the majorant.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.any(values < 0):
        raise DomainError("intensity must be non-negative")
    T = t_grid[-1] - t_grid[0]
    jmax = float(values.max()) if values.size else 0.0
    if jmax * T > MAX_EXPECTED_EVENTS:
        raise SimulationOverflow(f"expected {jmax * T:.3g} candidate events exceeds {MAX_EXPECTED_EVENTS:g}")
    n = rng.poisson(jmax * T) if jmax > 0 else 0
    if n == 0:
        return np.empty(0)
    t = np.sort(t_grid[0] + T * rng.random(n))
    keep = rng.random(n) * jmax < np.interp(t, t_grid, values)
    return t[keep]


def _threads() -> int:
    env = os.environ.get("OCTOPORT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError("OCTOPORT_THREADS must be an integer") from exc
    return max(1, min(4, os.cpu_count() or 1))


def _run_chunks(cfg: SimConfig, worker: Callable[[int, int, int], np.ndarray]) -> np.ndarray:
    size = CHUNK[cfg.regime]
    bounds = [(i, lo, min(lo + size, cfg.m)) for i, lo in enumerate(range(0, cfg.m, size))]
    n_thr = min(_threads(), len(bounds))
    if n_thr <= 1:
        parts = [worker(*b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=n_thr) as ex:
            parts = list(ex.map(lambda b: worker(*b), bounds))
    return np.concatenate(parts, axis=0)


def _chunk_rng(seed, idx: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(idx,)))


def _window_fields(cfg: SimConfig, t_end: np.ndarray, n_steps: int, rng, need_phase: bool):
    u, phase = sample_windows(cfg.laser, t_end, cfg.detector.tau, n_steps, rng, with_phase=need_phase)
    return u, phase


def _electronic(cfg: SimConfig, x: np.ndarray, rng) -> np.ndarray:
    if cfg.with_electronic_noise:
        s = cfg.detector.sigma_el_for(cfg.channels)
        if np.any(s > 0):
            x = x + rng.standard_normal(x.shape) * s
    return x


def _meta(cfg: SimConfig, n_steps: int) -> dict:
    return {
        "regime": cfg.regime,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "m": cfg.m,
        "window_steps": n_steps,
        "with_electronic_noise": cfg.with_electronic_noise,
        "params": cfg.snapshot(),
    }


def sample_x_finite_lo(cfg: SimConfig) -> SampleBatch:
    """Photon-counting sampler through the full circuit."""
    if cfg.regime != "finite_lo":
        raise ConfigError("sample_x_finite_lo needs regime 'finite_lo'")
    d = cfg.detector
    single = cfg.mode == "single"
    n_steps = window_steps(d, cfg.laser, cfg.dt)
    dt = d.tau / n_steps
    grid = np.arange(n_steps + 1) * dt  # offsets from t_l - tau
    times = d.times(cfg.m)
    xi = np.asarray(cfg.circuit.xi)
    lam = cfg.laser.lam
    kap = d.kappa_resp
    active = [0, 2] if single else [0, 1, 2, 3]

    def worker(idx: int, lo: int, hi: int) -> np.ndarray:
        rng = _chunk_rng(cfg.seed, idx)
        n = hi - lo
        t_end = times[lo:hi]
        need_phase = cfg.signal is not None
        u, phase = _window_fields(cfg, t_end, n_steps, rng, need_phase)
        if need_phase:
            f = lam * u * np.exp(1j * phase)
            fs = cfg.signal((t_end - d.tau)[:, None] + grid[None, :])
        else:
            f = lam * u
            fs = 0.0
        J = poisson_intensities(cfg.circuit, f, fs, single=single)  # (n, steps+1, 4)
        M = np.zeros((n, 4))
        for j in active:
            Jj = np.maximum(J[..., j], 0.0)
            jmax = Jj.max(axis=1)
            if np.any(jmax * d.tau > MAX_EXPECTED_EVENTS):
                raise SimulationOverflow("expected events per window exceed the guard")
            counts = rng.poisson(jmax * d.tau)
            total = int(counts.sum())
            if total == 0:
                continue
            win = np.repeat(np.arange(n), counts)
            s = rng.random(total) * d.tau
            pos = s / dt
            k = np.minimum(pos.astype(np.int64), n_steps - 1)
            frac = pos - k
            lam_s = Jj[win, k] * (1.0 - frac) + Jj[win, k + 1] * frac
            keep = rng.random(total) * jmax[win] < lam_s
            contrib = kap * np.exp(-kap * (d.tau - s[keep]))
            M[:, j] = xi[j] * np.bincount(win[keep], weights=contrib, minlength=n)
        if single:
            x = (M[:, 0] - M[:, 2])[:, None]
        else:
            x = np.column_stack([M[:, 0] - M[:, 2], M[:, 1] - M[:, 3]])
        return _electronic(cfg, x, rng)

    x = _run_chunks(cfg, worker)
    return SampleBatch(x=x, meta=_meta(cfg, n_steps))


def sample_y_strong_lo(cfg: SimConfig, return_r2: bool = False):
    """Strong-LO sampler; returns X = |lambda| Y in volts.

    With ``return_r2`` the per-sample R_l(f)**2 values are returned too.
    """
    if cfg.regime != "strong_lo":
        raise ConfigError("sample_y_strong_lo needs regime 'strong_lo'")
    d = cfg.detector
    coeff = cfg.coefficients()
    n_steps = window_steps(d, cfg.laser, cfg.dt)
    dt = d.tau / n_steps
    grid = np.arange(n_steps + 1) * dt
    w1 = response_weights(d.kappa_resp, d.tau, n_steps, 1)
    w2 = response_weights(d.kappa_resp, d.tau, n_steps, 2)
    times = d.times(cfg.m)
    lam = cfg.laser.lam
    ch = cfg.channels
    psi = np.asarray(coeff.psi[:ch])

    def worker(idx: int, lo: int, hi: int) -> np.ndarray:
        rng = _chunk_rng(cfg.seed, idx)
        t_end = times[lo:hi]
        need_phase = cfg.signal is not None
        u, phase = _window_fields(cfg, t_end, n_steps, rng, need_phase)
        u2 = u * u
        r2 = u2 @ w2
        mean = np.outer(u2 @ w1, coeff.delta2 * lam)
        if need_phase:
            fs = cfg.signal((t_end - d.tau)[:, None] + grid[None, :])
            z = (u * np.exp(1j * phase) * np.conj(fs)) @ w1
            mean = mean + 2.0 * coeff.kappa3 * (1j * np.exp(1j * psi)[None, :] * z[:, None]).real
        y = mean + rng.standard_normal((hi - lo, ch)) * np.sqrt(np.outer(r2, coeff.kappa2))
        x = _electronic(cfg, lam * y, rng)
        return np.column_stack([x, r2])

    out = _run_chunks(cfg, worker)
    batch = SampleBatch(x=out[:, :ch], meta=_meta(cfg, n_steps))
    if return_r2:
        return batch, out[:, ch]
    return batch


def simulate(cfg: SimConfig) -> SampleBatch:
    if cfg.regime == "finite_lo":
        return sample_x_finite_lo(cfg)
    return sample_y_strong_lo(cfg)


@dataclass(frozen=True)
class Moments:
    """Sample moments with jackknife standard errors."""

    m: int
    mean: np.ndarray
    cov: np.ndarray
    se_mean: np.ndarray
    se_cov: np.ndarray
    skewness: np.ndarray
    excess_kurtosis: np.ndarray

    def to_dict(self) -> dict:
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(self).items()}


def empirical_moments(b: SampleBatch | np.ndarray) -> Moments:
    """Mean, unbiased covariance and their jackknife standard errors."""
    x = b.x if isinstance(b, SampleBatch) else np.atleast_2d(np.asarray(b, dtype=float))
    m, c = x.shape
    if m < 3:
        raise DomainError("need at least three samples")
    mean = x.mean(axis=0)
    dx = x - mean
    cov = dx.T @ dx / (m - 1)
    se_mean = dx.std(axis=0, ddof=1) / math.sqrt(m)
    # Leave-one-out covariances differ from their average by
    # -m/((m-1)(m-2)) * (p_i - mean(p)), with p_i = dx_i dy_i.
    se_cov = np.empty((c, c))
    for i in range(c):
        for j in range(i, c):
            p = dx[:, i] * dx[:, j]
            spread = np.sum((p - p.mean()) ** 2)
            var = (m - 1) / m * (m / ((m - 1) * (m - 2))) ** 2 * spread
            se_cov[i, j] = se_cov[j, i] = math.sqrt(var)
    sd = np.sqrt(np.diag(cov))
    with np.errstate(invalid="ignore", divide="ignore"):
        z = dx / np.where(sd > 0, sd, np.nan)
        skew = np.nan_to_num(np.mean(z**3, axis=0))
        kurt = np.nan_to_num(np.mean(z**4, axis=0) - 3.0)
    return Moments(m=m, mean=mean, cov=cov, se_mean=se_mean, se_cov=se_cov, skewness=skew, excess_kurtosis=kurt)
