"""Closed-form moments, noise ratios and density bounds.

Everything here is a pure function of a :class:`~octoport.circuit.Coefficients`
plus the detector constants S0 and C0.  Voltages are in volts, rates in 1/s.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .circuit import Coefficients
from .detector import DetectorParams
from .errors import DomainError
from .laser import LaserParams, first_moments

__all__ = [
    "NoiseBudget",
    "vacuum_budget",
    "simplified_budget",
    "coherent_means",
    "conditional_law",
    "DensityBound",
    "density_bound_check",
]


@dataclass(frozen=True)
class NoiseBudget:
    """Vacuum-signal moments of the sampled difference photocurrents.

    ``C`` holds the full covariance (shot + RIN + electronic noise).  For
    a single channel ``E12`` reduces to ``1 + Upsilon1 + Theta1``.
    """

    means: np.ndarray
    Sigma2: np.ndarray
    C: np.ndarray
    Upsilon: np.ndarray
    Theta: np.ndarray
    E12: float
    det_C: float
    kappa2: np.ndarray
    kappa3: np.ndarray
    delta2: np.ndarray
    phi: float
    lambda_abs2: float
    S0: float
    C0: float
    sigma_el: np.ndarray
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def channels(self) -> int:
        return int(self.means.size)

    @property
    def Sigma(self) -> np.ndarray:
        return np.sqrt(self.Sigma2)

    @property
    def shot(self) -> np.ndarray:
        """Pure shot-noise variances kappa_j2 |lambda|^2 S0."""
        return self.kappa2 * self.lambda_abs2 * self.S0

    def to_dict(self) -> dict:
        out = {
            "channels": self.channels,
            "means": self.means.tolist(),
            "Sigma2": self.Sigma2.tolist(),
            "C": self.C.tolist(),
            "Upsilon": self.Upsilon.tolist(),
            "Theta": self.Theta.tolist(),
            "E12": self.E12,
            "det_C": self.det_C,
            "kappa2": self.kappa2.tolist(),
            "kappa3": self.kappa3.tolist(),
            "delta2": self.delta2.tolist(),
            "phi": self.phi,
            "lambda_abs2": self.lambda_abs2,
            "S0": self.S0,
            "C0": self.C0,
            "sigma_el": self.sigma_el.tolist(),
        }
        out.update(self.extra)
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _budget(kappa2, kappa3, delta2, phi, lambda_abs2, S0, C0, sigma_el, extra=None) -> NoiseBudget:
    kappa2 = np.asarray(kappa2, dtype=float)
    delta2 = np.asarray(delta2, dtype=float)
    sigma_el = np.asarray(sigma_el, dtype=float)
    if S0 <= 0 or C0 < 0 or lambda_abs2 <= 0:
        raise DomainError("need S0 > 0, C0 >= 0, lambda_abs2 > 0")
    if np.any(kappa2 <= 0):
        raise DomainError("kappa_j2 must be positive")
    shot = kappa2 * lambda_abs2 * S0
    rin = np.outer(delta2, delta2) * lambda_abs2**2 * C0
    C = np.diag(shot + sigma_el**2) + rin
    Ups = delta2**2 * lambda_abs2 * C0 / (kappa2 * S0)
    Th = sigma_el**2 / shot
    if kappa2.size == 2:
        E12 = (1 + Th[0]) * (1 + Th[1]) + (1 + Th[0]) * Ups[1] + (1 + Th[1]) * Ups[0]
    else:
        E12 = 1.0 + Ups[0] + Th[0]
    det_C = float(np.prod(shot)) * E12
    return NoiseBudget(
        means=delta2 * lambda_abs2,
        Sigma2=np.diag(C).copy(),
        C=C,
        Upsilon=Ups,
        Theta=Th,
        E12=float(E12),
        det_C=det_C,
        kappa2=kappa2,
        kappa3=np.asarray(kappa3, dtype=float),
        delta2=delta2,
        phi=float(phi),
        lambda_abs2=float(lambda_abs2),
        S0=float(S0),
        C0=float(C0),
        sigma_el=sigma_el,
        extra=extra or {},
    )


def vacuum_budget(
    coeff: Coefficients,
    S0: float,
    C0: float,
    lambda_abs2: float | None = None,
    sigma_el: Sequence[float] = (0.0, 0.0),
) -> NoiseBudget:
    """Means, covariance and noise ratios for a vacuum signal.

    ``lambda_abs2`` defaults to the value stored in ``coeff``.
    """
    lam2 = coeff.lambda_abs2 if lambda_abs2 is None else float(lambda_abs2)
    s = np.asarray(sigma_el, dtype=float)
    if s.size == 1:
        s = np.repeat(s, coeff.channels)
    s = s[: coeff.channels]
    if np.any(s < 0):
        raise DomainError("sigma_el must be non-negative")
    return _budget(coeff.kappa2, coeff.kappa3, coeff.delta2, coeff.phi, lam2, S0, C0, s,
                   extra={"kappa": coeff.kappa.tolist(), "delta": coeff.delta.tolist()})


def simplified_budget(
    eta: float,
    eps: float,
    *,
    lambda_abs2: float = 1e16,
    S0: float = 1e10,
    C0: float = 0.01,
    theta: float = 0.12,
    xi: float = 1.0,
    phi: float = math.pi / 2,
) -> NoiseBudget:
    """Symmetric two-channel case: equal detectors and eta3 = eta4 = eta.

    ``theta`` is 2 sigma_el**2 / (|xi lambda|**2 S0); the defaults are the
    worked numbers (|lambda|**2 C0 / (2 S0) = 5000, Theta = 0.12).
    The same coefficients arise from eta1 = eta2 = 1/2, eta3 = eta4 = eta.
    """
    if not 0 < eps <= 1 or not 0 < eta < 1:
        raise DomainError("need 0 < eps <= 1 and 0 < eta < 1")
    k2 = eps * xi**2 / 2
    d2 = eps * xi * (1 - 2 * eta) / 2
    k3 = eps * xi * math.sqrt(eta * (1 - eta))
    sig = math.sqrt(theta * xi**2 * lambda_abs2 * S0 / 2)
    return _budget([k2, k2], [k3, k3], [d2, d2], phi, lambda_abs2, S0, C0, [sig, sig],
                   extra={"eta": eta, "eps": eps, "theta": theta})


def _as_signal(fs) -> Callable[[float], complex]:
    if fs is None:
        return lambda r: 0.0
    if callable(fs):
        return fs
    c = complex(fs)
    return lambda r: c


def coherent_means(
    coeff: Coefficients,
    fs,
    laser: LaserParams,
    detector: DetectorParams,
    t: float,
    strong_lo: bool = False,
) -> np.ndarray:
    """Mean of X_j(t) for a coherent signal of amplitude path ``fs`` (1/sqrt(s)).

    The interference term needs the laser mean E[f(r)], which is non-zero
    only for a fixed global phase (``laser.theta`` not None).  With
    ``strong_lo`` the term quadratic in the signal is dropped.
    """
    sig = _as_signal(fs)
    k = detector.kappa_resp
    lam2 = laser.lambda_abs2
    out = np.zeros(coeff.channels)
    for j in range(coeff.channels):
        psi = coeff.psi[j]
        k3, d1, d2 = coeff.kappa[j, 2], coeff.delta[j, 0], coeff.delta[j, 1]

        def integrand(r, j=j, psi=psi, k3=k3, d1=d1, d2=d2):
            h = k * math.exp(-k * (t - r))
            a = complex(sig(r))
            ef = first_moments(laser, r, r)["E_f"]
            val = d2 * lam2 + 2.0 * k3 * (1j * np.exp(1j * psi) * ef * a.conjugate()).real
            if not strong_lo:
                val += d1 * abs(a) ** 2
            return h * val

        # Only the last ~40/kappa seconds carry weight above 1e-17.
        lo = max(0.0, t - 40.0 / k)
        scale = abs(coeff.delta[j, 1]) * lam2 + 2 * abs(k3) * laser.lam + 1.0
        val, _ = integrate.quad(integrand, lo, t, epsabs=1e-10 * scale, epsrel=1e-10, limit=500)
        out[j] = val
    return out


def conditional_law(
    coeff: Coefficients,
    R2: float,
    int_h_abs2: float,
    interference: Sequence[complex] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Strong-LO law of Y = X/|lambda| given the laser path in one window.

    Parameters
    ----------
    R2 : integral of h**2 |f|**2/|lambda|**2 over the window.
    int_h_abs2 : integral of h |f|**2/|lambda|**2 over the window.
    interference : per channel, integral of h f conj(fs)/|lambda|; None for vacuum.

    Returns
    -------
    mean, covariance of the Gaussian conditional law.
    """
    lam = math.sqrt(coeff.lambda_abs2)
    mean = coeff.delta2 * lam * int_h_abs2
    if interference is not None:
        psi = np.asarray(coeff.psi[: coeff.channels])
        z = np.asarray(interference, dtype=complex)
        mean = mean + 2.0 * coeff.kappa3 * (1j * np.exp(1j * psi) * z).real
    return mean, np.diag(coeff.kappa2 * R2)


@dataclass(frozen=True)
class DensityBound:
    bound: float
    peak: float
    ok: bool


def density_bound_check(coeff: Coefficients, R2: float, phi: float | None = None) -> DensityBound:
    """Compare the vacuum density peak with the bound valid for any signal state.

    The bound is 1/(4 pi R2 kappa13 kappa23 |sin phi|) in Y units; the
    vacuum peak is 1/(2 pi R2 sqrt(kappa12 kappa22)).
    """
    if coeff.channels != 2:
        raise DomainError("density bound needs two channels")
    if not R2 > 0:
        raise DomainError("R2 must be positive")
    phi = coeff.phi if phi is None else phi
    s = abs(math.sin(phi))
    if s < 1e-12:
        raise DomainError("sin(phi) = 0 makes the bound vacuous")
    bound = 1.0 / (4 * math.pi * R2 * coeff.kappa3[0] * coeff.kappa3[1] * s)
    peak = 1.0 / (2 * math.pi * R2 * math.sqrt(coeff.kappa2[0] * coeff.kappa2[1]))
    return DensityBound(bound=bound, peak=peak, ok=bool(peak <= bound * (1 + 1e-12)))
