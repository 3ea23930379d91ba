"""Optical parameters of the eight-port circuit and the derived coefficients.

Beam splitters BS1 (signal/vacuum) and BS2 (LO/vacuum) feed BS3 and BS4,
whose outputs reach four photodiodes of efficiency ``eps[j]`` and conversion
factor ``xi[j]`` (volt*second).  Detectors 1 and 3 form difference channel 1,
detectors 2 and 4 form channel 2.

Indices in arrays are zero based: ``eta[0]`` is the transmissivity of BS1,
``kappa[0, 1]`` is the coefficient written kappa_12 in the usual notation.
"""

from __future__ import annotations

import math
import dataclasses
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "CircuitParams",
    "Coefficients",
    "derive_coefficients",
    "single_homodyne_params",
    "detector_gains",
    "balanced_params",
]


def _as4(name: str, values: Sequence[float]) -> tuple[float, float, float, float]:
    vals = tuple(float(v) for v in values)
    if len(vals) != 4:
        raise DomainError(f"{name} needs 4 entries, got {len(vals)}")
    return vals  # type: ignore[return-value]


def _wrap_phase(phi: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    r = math.remainder(phi, 2.0 * math.pi)
    return math.pi if r == -math.pi else r


@dataclass(frozen=True)
class CircuitParams:
    """Raw optical parameters.

    Parameters
    ----------
    eta : 4 transmissivities of BS1..BS4.
    eps : 4 detector efficiencies in (0, 1].
    xi : 4 conversion factors (volt*second), positive.
    psi1, psi2 : tunable phases (rad) on the two LO arms.
    """

    eta: tuple[float, float, float, float]
    eps: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    xi: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    psi1: float = 0.0
    psi2: float = math.pi / 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "eta", _as4("eta", self.eta))
        object.__setattr__(self, "eps", _as4("eps", self.eps))
        object.__setattr__(self, "xi", _as4("xi", self.xi))
        object.__setattr__(self, "psi1", float(self.psi1))
        object.__setattr__(self, "psi2", float(self.psi2))
        for j, e in enumerate(self.eta):
            if not 0.0 <= e <= 1.0:
                raise DomainError(f"eta{j + 1}={e} outside [0, 1]")
        for j in (0, 1):
            if self.eta[j] in (0.0, 1.0):
                raise DomainError(f"eta{j + 1} must differ from 0 and 1")
        for j, e in enumerate(self.eps):
            if not 0.0 < e <= 1.0:
                raise DomainError(f"eps{j + 1}={e} outside (0, 1]")
        for j, x in enumerate(self.xi):
            if not x > 0.0:
                raise DomainError(f"xi{j + 1}={x} must be positive")

    @property
    def phi(self) -> float:
        """Phase difference psi2 - psi1 reduced to (-pi, pi]."""
        return _wrap_phase(self.psi2 - self.psi1)

    def replace(self, **changes) -> "CircuitParams":
        return dataclasses.replace(self, **changes)


def balanced_params(eps: float = 1.0, xi: float = 1.0, phi: float = math.pi / 2) -> CircuitParams:
    """Perfectly balanced circuit: every eta 1/2, equal detectors."""
    return CircuitParams(
        eta=(0.5, 0.5, 0.5, 0.5), eps=(eps,) * 4, xi=(xi,) * 4, psi1=0.0, psi2=phi
    )


@dataclass(frozen=True)
class Coefficients:
    """Every coefficient derived from a :class:`CircuitParams`.

    Arrays have one row per difference channel (two for the double
    homodyne, one for the single homodyne).  ``G3``, ``V2``, ``V2_tilde``,
    ``sig2`` and ``sig2_tilde`` are the terms of the shot-noise
    decomposition ``kappa_j2 = kappa_j3**2 (G_j3 + V_j**2 + sigma_j**2 + 1)``.
    """

    kappa: np.ndarray
    delta: np.ndarray
    phi: float
    psi: tuple[float, float]
    lambda_abs2: float
    G2: np.ndarray
    G3: np.ndarray
    V2: np.ndarray
    V2_tilde: np.ndarray
    sig2: np.ndarray
    sig2_tilde: np.ndarray
    params: CircuitParams | None = field(default=None, compare=False, repr=False)

    @property
    def channels(self) -> int:
        return int(self.kappa.shape[0])

    @property
    def kappa2(self) -> np.ndarray:
        return self.kappa[:, 1]

    @property
    def kappa3(self) -> np.ndarray:
        return self.kappa[:, 2]

    @property
    def delta2(self) -> np.ndarray:
        return self.delta[:, 1]

    def decomposition_residual(self) -> np.ndarray:
        """Relative error of the shot-noise decomposition, per channel."""
        rhs = self.kappa3**2 * (self.G3 + self.V2 + self.sig2 + 1.0)
        return np.abs(rhs / self.kappa2 - 1.0)

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa.tolist(),
            "delta": self.delta.tolist(),
            "phi": self.phi,
            "psi": list(self.psi),
            "lambda_abs2": self.lambda_abs2,
            "G2": self.G2.tolist(),
            "G3": self.G3.tolist(),
            "V2": self.V2.tolist(),
            "V2_tilde": self.V2_tilde.tolist(),
            "sig2": self.sig2.tolist(),
            "sig2_tilde": self.sig2_tilde.tolist(),
        }


def detector_gains(p: CircuitParams, single: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Fraction of signal and of LO photon flux reaching each photodiode.

    Returns ``(g_signal, g_lo)``, each of length 4 (detectors 1..4).  In
    single-homodyne mode BS1 and BS2 are removed (eta1 = eta2 = 1) and
    detectors 2 and 4 receive nothing.
    """
    e1, e2, e3, e4 = p.eta
    eps = p.eps
    if single:
        e1 = e2 = 1.0
    g_sig = np.array(
        [
            e1 * e3 * eps[0],
            (1 - e1) * e4 * eps[1],
            e1 * (1 - e3) * eps[2],
            (1 - e1) * (1 - e4) * eps[3],
        ]
    )
    g_lo = np.array(
        [
            e2 * (1 - e3) * eps[0],
            (1 - e2) * (1 - e4) * eps[1],
            e2 * e3 * eps[2],
            (1 - e2) * e4 * eps[3],
        ]
    )
    return g_sig, g_lo


def _decomposition(eta_a: float, eta_b: float, e: tuple[float, float], x: tuple[float, float]):
    """V-tilde^2 and sigma-tilde^2 for one channel.

    ``eta_b`` is the transmissivity of the channel's output splitter
    (BS3 or BS4), ``e``/``x`` the efficiencies/factors of the two detectors.
    """
    ea, eb = e
    xa, xb = x
    s = ea * xa + eb * xb
    v_t = ((1 - eta_b) * ea * xa - eta_b * eb * xb) ** 2 / (eta_b * (1 - eta_b) * s**2)
    sig_t = (ea * (1 - ea) / eta_b * xa**2 + eb * (1 - eb) / (1 - eta_b) * xb**2) / s**2
    return v_t, sig_t


def derive_coefficients(p: CircuitParams, lambda_abs2: float) -> Coefficients:
    """Closed-form coefficients of the double homodyne detector.

    ``lambda_abs2`` is the mean LO photon rate (1/s); it only enters
    ``G2 = delta_j2 * |lambda| / kappa_j3``.
    """
    if not lambda_abs2 > 0:
        raise DomainError("lambda_abs2 must be positive")
    h1, h2, h3, h4 = p.eta
    e1, e2, e3, e4 = p.eps
    x1, x2, x3, x4 = p.xi
    for j in (2, 3):
        if p.eta[j] in (0.0, 1.0):
            raise DomainError(f"eta{j + 1} in {{0, 1}} makes kappa_{j - 1}3 vanish")

    r13 = math.sqrt(h1 * h2 * h3 * (1 - h3))
    r23 = math.sqrt((1 - h1) * (1 - h2) * h4 * (1 - h4))
    kappa = np.array(
        [
            [
                h1 * (h3 * e1 * x1**2 + (1 - h3) * e3 * x3**2),
                h2 * ((1 - h3) * e1 * x1**2 + h3 * e3 * x3**2),
                r13 * (e1 * x1 + e3 * x3),
            ],
            [
                (1 - h1) * (h4 * e2 * x2**2 + (1 - h4) * e4 * x4**2),
                (1 - h2) * ((1 - h4) * e2 * x2**2 + h4 * e4 * x4**2),
                r23 * (e2 * x2 + e4 * x4),
            ],
        ]
    )
    delta = np.array(
        [
            [
                h1 * (h3 * e1 * x1 - (1 - h3) * e3 * x3),
                h2 * ((1 - h3) * e1 * x1 - h3 * e3 * x3),
                r13 * (e1 * x1**2 - e3 * x3**2),
            ],
            [
                (1 - h1) * (h4 * e2 * x2 - (1 - h4) * e4 * x4),
                (1 - h2) * ((1 - h4) * e2 * x2 - h4 * e4 * x4),
                r23 * (e2 * x2**2 - e4 * x4**2),
            ],
        ]
    )
    if np.any(kappa[:, 2] == 0.0):
        raise DomainError("kappa_j3 vanishes")

    lam = math.sqrt(lambda_abs2)
    G2 = delta[:, 1] * lam / kappa[:, 2]
    G3 = np.array([(1 - h1) / h1, h1 / (1 - h1)])
    vt1, st1 = _decomposition(h1, h3, (e1, e3), (x1, x3))
    vt2, st2 = _decomposition(1 - h1, h4, (e2, e4), (x2, x4))
    V2_tilde = np.array([vt1, vt2])
    sig2_tilde = np.array([st1, st2])
    scale = np.array([h1, 1 - h1])
    return Coefficients(
        kappa=kappa,
        delta=delta,
        phi=p.phi,
        psi=(p.psi1, p.psi2),
        lambda_abs2=float(lambda_abs2),
        G2=G2,
        G3=G3,
        V2=V2_tilde / scale,
        V2_tilde=V2_tilde,
        sig2=sig2_tilde / scale,
        sig2_tilde=sig2_tilde,
        params=p,
    )


def single_homodyne_params(p: CircuitParams, lambda_abs2: float = 1.0) -> Coefficients:
    """Coefficients of the single homodyne obtained by removing BS1 and BS2.

    Only ``eta[2]``, ``eps[0]``, ``eps[2]``, ``xi[0]``, ``xi[2]`` and
    ``psi1`` are used.  The result has a single channel row.
    """
    h3 = p.eta[2]
    if h3 in (0.0, 1.0):
        raise DomainError("eta3 must differ from 0 and 1 in single-homodyne mode")
    e1, e3 = p.eps[0], p.eps[2]
    x1, x3 = p.xi[0], p.xi[2]
    r = math.sqrt(h3 * (1 - h3))
    kappa = np.array(
        [
            [
                h3 * e1 * x1**2 + (1 - h3) * e3 * x3**2,
                (1 - h3) * e1 * x1**2 + h3 * e3 * x3**2,
                r * (e1 * x1 + e3 * x3),
            ]
        ]
    )
    delta = np.array(
        [
            [
                h3 * e1 * x1 - (1 - h3) * e3 * x3,
                (1 - h3) * e1 * x1 - h3 * e3 * x3,
                r * (e1 * x1**2 - e3 * x3**2),
            ]
        ]
    )
    v2, s2 = _decomposition(1.0, h3, (e1, e3), (x1, x3))
    lam = math.sqrt(lambda_abs2)
    return Coefficients(
        kappa=kappa,
        delta=delta,
        phi=p.phi,
        psi=(p.psi1, p.psi1),
        lambda_abs2=float(lambda_abs2),
        G2=delta[:, 1] * lam / kappa[:, 2],
        G3=np.zeros(1),
        V2=np.array([v2]),
        V2_tilde=np.array([v2]),
        sig2=np.array([s2]),
        sig2_tilde=np.array([s2]),
        params=p,
    )
