"""Command line entry point: ``octoport <subcommand> [options]``.

Exit codes: 0 success, 1 failed validation, 2 configuration error,
3 domain error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .analytic import vacuum_budget
from .detector import c0, s0, s_minus, sample_r2
from .entropy import (
    FIGURE_ETAS,
    TABLE_N,
    TABLE_X,
    entropy_report,
    figure_curves,
    table1,
    table2,
)
from .errors import ConfigError, ConsistencyError, DomainError, SimulationOverflow
from .laser import intensity_spectrum, rin_spectrum

__all__ = ["main", "run", "build_budget", "estimate_s_minus"]

FIGURES = {
    "2": ("correlation", "small"),
    "3": ("correlation", "big"),
    "4": ("classical", "small"),
    "5": ("classical", "big"),
    "6": ("single", "small"),
    "7": ("single", "big"),
    "quantum": ("quantum", "all"),
}


def estimate_s_minus(cfg: dict, sim) -> float:
    """S_- from the config, exactly for a noiseless laser, else by Monte Carlo."""
    if "s_minus" in cfg:
        return float(cfg["s_minus"])
    d, las = sim.detector, sim.laser
    if las.v0 == 0.0:
        return s0(d) * -math.expm1(-2 * d.kappa_resp * d.tau)
    n = int(cfg.get("s_minus_samples", 20000))
    est, _ = s_minus(sample_r2(las, d, n, seed=sim.seed), S0=s0(d))
    return est


def build_budget(cfg: dict, mode: str | None = None):
    """(SimConfig, Coefficients, NoiseBudget) from a flat config."""
    sim = cfgmod.sim_config_from(cfg, mode=mode)
    coeff = sim.coefficients()
    budget = vacuum_budget(coeff, s0(sim.detector), c0(sim.detector, sim.laser),
                           sigma_el=sim.detector.sigma_el_for(coeff.channels))
    return sim, coeff, budget


def _dump(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _num_or_str(v):
    try:
        return float(v) if not isinstance(v, int) else v
    except (TypeError, ValueError):
        return v


def _write_rows(header, rows, out: str | None, fmt: str = "csv") -> None:
    buf = io.StringIO()
    if fmt == "json":
        recs = [{h: (None if v == "" else _num_or_str(v)) for h, v in zip(header, r)} for r in rows]
        buf.write(json.dumps(recs, indent=2) + "\n")
    elif fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    else:
        cols = [header] + [list(r) for r in rows]
        widths = [max(len(str(c[i])) for c in cols) for i in range(len(header))]
        for c in cols:
            buf.write("  ".join(str(v).rjust(wd) for v, wd in zip(c, widths)) + "\n")
    if out:
        Path(out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def cmd_simulate(args, cfg) -> int:
    from .mc_sim import simulate

    if args.samples is not None:
        cfg["m"] = args.samples
    sim = cfgmod.sim_config_from(cfg, regime=args.regime, mode=args.mode, seed=args.seed)
    batch = simulate(sim)
    if args.out:
        batch.to_csv(args.out)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["l"] + [f"x{j + 1}" for j in range(batch.channels)])
        for l, row in enumerate(batch.x):
            w.writerow([l] + [repr(float(v)) for v in row])
    return 0


def cmd_moments(args, cfg) -> int:
    _, coeff, budget = build_budget(cfg, args.mode)
    out = budget.to_dict()
    out["coefficients"] = coeff.to_dict()
    _dump(out, args.out)
    return 0


def cmd_entropy(args, cfg) -> int:
    if args.seed is not None:
        cfg["seed"] = args.seed
    sim, coeff, budget = build_budget(cfg, args.mode)
    sm = estimate_s_minus(cfg, sim)
    adc = cfgmod.adc_from(cfg)
    if coeff.channels == 1:
        from .single_homodyne import single_report

        e_inv = cfg.get("e_inv_r")
        rep = single_report(budget, adc, S_minus=sm, e_inv_r=e_inv)
    else:
        rep = entropy_report(budget, adc, S_minus=sm)
    _dump(rep.to_dict(), args.out)
    return 0


def _fmt_table(vals, digits: int) -> list[str]:
    return ["" if v is None else f"{v:.{digits}f}" for v in vals]


def cmd_tables(args, cfg) -> int:
    if args.which == "1":
        header = ["n"] + [f"{x:.1f}" for x in TABLE_X]
        rows = [[n] + _fmt_table(r, 2) for n, r in zip(TABLE_N, table1())]
    elif args.which == "2":
        header = ["n"] + [f"{x:.1f}" for x in TABLE_X]
        rows = [[n] + [f"{v:.2g}" for v in r] for n, r in zip(TABLE_N, table2())]
    else:
        from .single_homodyne import TABLE3_N, TABLE3_X, table3

        header = ["n"] + [f"{x:.1f}" for x in TABLE3_X]
        rows = [[n] + _fmt_table(r, 2) for n, r in zip(TABLE3_N, table3())]
    _write_rows(header, rows, args.out, args.format or "csv")
    return 0


def cmd_figures(args, cfg) -> int:
    which = list(FIGURES) if args.which in (None, "all") else [args.which]
    if len(which) > 1 and not args.out:
        raise ConfigError("figures --which all needs --out DIR")
    for key in which:
        if key not in FIGURES:
            raise ConfigError(f"unknown figure {key!r}; choose from {', '.join(FIGURES)}")
        kind, size = FIGURES[key]
        etas = FIGURE_ETAS["small"] + FIGURE_ETAS["big"] if size == "all" else FIGURE_ETAS[size]
        curves = figure_curves(kind, etas)
        header = ["loss_percent"] + [f"eta={e}" for e in etas]
        rows = [[f"{lp:g}"] + [repr(float(curves[e][i])) for e in etas]
                for i, lp in enumerate(curves["loss_percent"])]
        if len(which) > 1:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            out = str(Path(args.out) / f"figure_{key}.csv")
        else:
            out = args.out
        _write_rows(header, rows, out, args.format or "csv")
    return 0


def cmd_spectra(args, cfg) -> int:
    las = cfgmod.laser_from(cfg)
    width = las.gamma0 + las.gamma1
    mu = np.linspace(las.omega0 - 10 * width, las.omega0 + 10 * width, args.points)
    try:
        spec = intensity_spectrum(las, mu)
    except DomainError:
        spec = np.full_like(mu, np.nan)
    rin = rin_spectrum(las, mu - las.omega0)
    rows = [[repr(float(a)), repr(float(b)), repr(float(c))] for a, b, c in zip(mu, spec, rin)]
    _write_rows(["mu", "intensity_spectrum", "rin_spectrum"], rows, args.out)
    return 0


def cmd_extract(args, cfg) -> int:
    from .entropy import h_cond_classical
    from .extractor import (
        adc_codes,
        codes_to_bits,
        extract_blocks,
        monobit_test,
        required_output_length,
        runs_test,
        write_bits,
    )
    from .mc_sim import SampleBatch, simulate

    if args.samples is not None:
        cfg["m"] = args.samples
    if args.seed is not None:
        cfg["seed"] = args.seed
    sim, coeff, budget = build_budget(cfg, "double")
    batch = SampleBatch.from_csv(args.input) if args.input else simulate(sim)
    adc = cfgmod.adc_from(cfg).resolve(budget)
    sm = estimate_s_minus(cfg, sim)
    h = h_cond_classical(budget, adc, sm)["H_cond"]
    eps = float(cfg.get("security_eps", 2.0**-64))
    spb = int(cfg.get("block_bits", 4096)) // (adc.n_bits * 2)
    if spb < 1:
        raise ConfigError("block_bits must hold at least one sample")
    block_in = spb * adc.n_bits * 2
    block_out = required_output_length(spb, h, eps, adc.n_bits * 2)
    bits = codes_to_bits(adc_codes(batch, adc), adc.n_bits)
    rng = np.random.default_rng(np.random.SeedSequence(sim.seed, spawn_key=(2**31,)))
    seed_bits = rng.integers(0, 2, size=block_in + max(block_out, 1) - 1, dtype=np.uint8)
    out_bits = extract_blocks(bits, seed_bits, block_in, block_out)
    if not args.out:
        raise ConfigError("extract needs --out")
    write_bits(args.out, out_bits, hex_output=args.hex)
    summary = {
        "samples": batch.m,
        "H_cond_classical": h,
        "block_in": block_in,
        "block_out": block_out,
        "output_bits": int(out_bits.size),
    }
    if out_bits.size >= 100:
        summary["monobit_p"] = monobit_test(out_bits)
        summary["runs_p"] = runs_test(out_bits)
    sys.stderr.write(json.dumps(summary, sort_keys=True) + "\n")
    return 0


def cmd_validate(args, cfg) -> int:
    from .validate import run_checks

    results = run_checks(quick=not args.full)
    ok = True
    for name, passed, detail in results:
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="octoport", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, samples=False):
        sp.add_argument("--config", help="TOML config file")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--mode", choices=["double", "single"])
        if samples:
            sp.add_argument("--samples", type=int)
            sp.add_argument("--regime", choices=["finite_lo", "strong_lo"])

    common(sub.add_parser("simulate", help="sample photocurrent batches"), samples=True)
    common(sub.add_parser("moments", help="analytic noise budget as JSON"))
    common(sub.add_parser("entropy", help="entropy report as JSON"))
    sp = sub.add_parser("tables", help="regenerate the entropy tables")
    sp.add_argument("--which", choices=["1", "2", "3"], required=True)
    sp.add_argument("--format", choices=["csv", "json", "text"])
    sp.add_argument("--out")
    sp.add_argument("--config")
    sp = sub.add_parser("figures", help="loss curves as CSV")
    sp.add_argument("--which", default="all")
    sp.add_argument("--format", choices=["csv", "json"])
    sp.add_argument("--out")
    sp.add_argument("--config")
    sp = sub.add_parser("spectra", help="laser spectra as CSV")
    sp.add_argument("--config")
    sp.add_argument("--out")
    sp.add_argument("--points", type=int, default=201)
    sp = sub.add_parser("extract", help="ADC samples to extracted bits")
    common(sp, samples=True)
    sp.add_argument("--input", help="SampleBatch CSV; simulated when absent")
    sp.add_argument("--hex", action="store_true", help="write hex text instead of binary")
    sp = sub.add_parser("validate", help="run the oracle cross-checks")
    sp.add_argument("--full", action="store_true", help="include the slower Monte Carlo checks")
    sp.add_argument("--config")
    return p


COMMANDS = {
    "simulate": cmd_simulate,
    "moments": cmd_moments,
    "entropy": cmd_entropy,
    "tables": cmd_tables,
    "figures": cmd_figures,
    "spectra": cmd_spectra,
    "extract": cmd_extract,
    "validate": cmd_validate,
}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load_config(getattr(args, "config", None))
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ConsistencyError, SimulationOverflow) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
