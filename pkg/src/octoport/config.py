"""TOML configuration with flat canonical keys.

Keys may sit at the top level or inside any table; tables are flattened
(``[circuit] eta1 = 0.5`` and ``eta1 = 0.5`` are equivalent).  A key
given twice is an error.
"""

from __future__ import annotations

import math
import sys
from pathlib import Path
from typing import Any

from .circuit import CircuitParams
from .detector import DetectorParams
from .errors import ConfigError
from .laser import LaserParams

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "KNOWN_KEYS",
    "load_config",
    "parse_config",
    "circuit_from",
    "laser_from",
    "detector_from",
    "sim_config_from",
    "adc_from",
]

KNOWN_KEYS = {
    # circuit
    "eta1", "eta2", "eta3", "eta4", "eps1", "eps2", "eps3", "eps4",
    "xi1", "xi2", "xi3", "xi4", "psi1", "psi2", "lambda_abs2",
    # laser
    "omega0", "gamma0", "w2", "gamma1", "theta",
    # detector
    "kappa_resp", "sigma_el1", "sigma_el2", "tau", "sample_times", "m", "dt_sample",
    # simulation
    "regime", "mode", "seed", "dt", "with_electronic_noise",
    "signal", "signal_re", "signal_im", "signal_omega",
    # entropy
    "n_bits", "x1", "x2", "range1", "range2", "s_minus", "s_minus_samples",
    "e_inv_r", "security_eps", "block_bits",
}


def _flatten(d: dict, out: dict, prefix: str = "") -> None:
    for k, v in d.items():
        if isinstance(v, dict):
            _flatten(v, out, prefix + k + ".")
            continue
        if k in out:
            raise ConfigError(f"key {k!r} given more than once")
        if k not in KNOWN_KEYS:
            raise ConfigError(f"unknown config key {prefix + k!r}")
        out[k] = v


def parse_config(text: str) -> dict[str, Any]:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    out: dict[str, Any] = {}
    _flatten(raw, out)
    return out


def load_config(path: str | Path | None) -> dict[str, Any]:
    """Flat dict of config values; an absent path gives an empty config."""
    if path is None:
        return {}
    return parse_config(Path(path).read_text())


def _num(cfg: dict, key: str, default=None, required: bool = False) -> float | None:
    if key not in cfg:
        if required:
            raise ConfigError(f"missing config key {key!r}")
        return default
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key!r} must be a number")
    return float(v)


def circuit_from(cfg: dict) -> CircuitParams:
    eta = tuple(_num(cfg, f"eta{j}", 0.5) for j in range(1, 5))
    eps = tuple(_num(cfg, f"eps{j}", 1.0) for j in range(1, 5))
    xi = tuple(_num(cfg, f"xi{j}", 1.0) for j in range(1, 5))
    return CircuitParams(eta=eta, eps=eps, xi=xi, psi1=_num(cfg, "psi1", 0.0),
                         psi2=_num(cfg, "psi2", math.pi / 2))


def laser_from(cfg: dict) -> LaserParams:
    theta = cfg.get("theta", "uniform")
    if theta == "uniform":
        theta = None
    elif isinstance(theta, bool) or not isinstance(theta, (int, float)):
        raise ConfigError("theta must be 'uniform' or a number")
    return LaserParams(
        lambda_abs2=_num(cfg, "lambda_abs2", required=True),
        omega0=_num(cfg, "omega0", 0.0),
        gamma0=_num(cfg, "gamma0", 0.0),
        w2=_num(cfg, "w2", 1.0),
        gamma1=_num(cfg, "gamma1", 1.0),
        theta=None if theta is None else float(theta),
    )


def detector_from(cfg: dict) -> DetectorParams:
    st = cfg.get("sample_times")
    m = cfg.get("m", 1000)
    if not isinstance(m, int) or isinstance(m, bool):
        raise ConfigError("m must be an integer")
    return DetectorParams(
        kappa_resp=_num(cfg, "kappa_resp", required=True),
        sigma_el=(_num(cfg, "sigma_el1", 0.0), _num(cfg, "sigma_el2", 0.0)),
        tau=_num(cfg, "tau"),
        m=len(st) if st is not None else m,
        dt_sample=_num(cfg, "dt_sample"),
        sample_times=tuple(st) if st is not None else None,
    )


def sim_config_from(cfg: dict, **override):
    from .mc_sim import CoherentSignal, SimConfig

    sig = cfg.get("signal", "vacuum")
    if sig == "vacuum":
        signal = None
    elif sig == "coherent":
        signal = CoherentSignal(complex(_num(cfg, "signal_re", 0.0), _num(cfg, "signal_im", 0.0)),
                                _num(cfg, "signal_omega", 0.0))
    else:
        raise ConfigError("signal must be 'vacuum' or 'coherent'")
    det = detector_from(cfg)
    kw = dict(
        regime=cfg.get("regime", "strong_lo"),
        mode=cfg.get("mode", "double"),
        m=det.m,
        seed=int(cfg.get("seed", 0)),
        dt=_num(cfg, "dt"),
        with_electronic_noise=bool(cfg.get("with_electronic_noise", True)),
    )
    kw.update({k: v for k, v in override.items() if v is not None})
    return SimConfig(circuit=circuit_from(cfg), laser=laser_from(cfg), detector=det, signal=signal, **kw)


def adc_from(cfg: dict):
    from .entropy import AdcConfig

    n = cfg.get("n_bits", 8)
    if not isinstance(n, int) or isinstance(n, bool):
        raise ConfigError("n_bits must be an integer")
    if "range1" in cfg:
        r1 = _num(cfg, "range1")
        return AdcConfig(n_bits=n, x=None, ranges=(r1, _num(cfg, "range2", r1)))
    x1 = _num(cfg, "x1", 4.0)
    return AdcConfig(n_bits=n, x=(x1, _num(cfg, "x2", x1)))
