"""Command-line entry point: ``fabry <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from fabry.asymptotics import expansion_coefficients
from fabry.capacitance import block_spectrum, build_capacitance
from fabry.chain import ChainConfig, MaterialParams, ResonatorChain, Wavenumber, load_config, parse_delta
from fabry.eigenmode import (
    DegenerateEigenvalueError,
    estimate_gamma,
    fit_trig_shape,
    reconstruct_mode,
    trig_approximation,
)
from fabry.figures import BUILTIN_CONFIGS, plot_csv, run_figure
from fabry.output import dumps, fmt, mode_csv, sweep_csv, write_text
from fabry.solver import contour_count, default_radius, delta_sweep, find_resonances, prepare
from fabry.verify import verify_all, verify_identities

log = logging.getLogger("fabry")


def _load(args: argparse.Namespace) -> ChainConfig:
    src = args.config
    exact = False if getattr(args, "float_mode", False) else None
    if not Path(src).exists() and src in BUILTIN_CONFIGS:
        data = dict(BUILTIN_CONFIGS[src])
        if exact is False:
            data["float_mode"] = True
        return load_config(data)
    return load_config(src, exact=exact)


def _k0(args: argparse.Namespace, cfg: ChainConfig) -> Wavenumber:
    if getattr(args, "k0", None) is not None:
        return Wavenumber.parse(args.k0, exact=cfg.t.exact)
    if cfg.k0 is None:
        raise SystemExit("error: no k0 given (use --k0 or k0_over_pi in the config)")
    return cfg.k0


def _delta(args: argparse.Namespace, cfg: ChainConfig) -> complex:
    if getattr(args, "delta", None) is not None:
        return parse_delta(args.delta)
    return cfg.chain.params.delta


def _emit(text: str, out: str | None) -> None:
    if out:
        write_text(out, text)
    else:
        sys.stdout.write(text)


# --- subcommands --------------------------------------------------------------------


def cmd_partition(args) -> int:
    cfg = _load(args)
    k0 = _k0(args, cfg)
    sysm = build_capacitance(cfg.t, k0)
    data = {"k0_over_pi": str(k0.q), **sysm.partition.as_dict()}
    _emit(dumps(data), args.out)
    return 0


def cmd_spectrum(args) -> int:
    cfg = _load(args)
    k0 = _k0(args, cfg)
    sysm = build_capacitance(cfg.t, k0)
    spectrum = block_spectrum(sysm)
    part = sysm.partition
    data = {
        "k0_over_pi": str(k0.q),
        "I": list(part.I),
        "blocks": [
            {"a": be.system.block.a, "b": be.system.block.b, "xi": be.system.block.xi,
             "eta": be.system.block.eta, "eigenvalues": be.eigenvalues}
            for be in spectrum.blocks
        ],
        "m": spectrum.m,
        "n": part.n,
    }
    _emit(dumps(data), args.out)
    return 0


def cmd_expand(args) -> int:
    cfg = _load(args)
    k0 = _k0(args, cfg)
    sysm = build_capacitance(cfg.t, k0)
    exps = expansion_coefficients(sysm, block_spectrum(sysm), cfg.chain.params)
    n_delta = sysm.partition.n - 2 * sysm.partition.m
    if args.json:
        rows = [
            {"block": [e.a, e.b], "lambda": e.lam, "c1": e.c1, "c2": e.c2} for e in exps
        ]
        _emit(dumps({"k0_over_pi": str(k0.q), "branches": rows, "delta_type": n_delta}), args.out)
        return 0
    lines = [f"{'block':>10} {'lambda':>24} {'c1':>24} {'c2_re':>24} {'c2_im':>24}"]
    for e in exps:
        lines.append(
            f"{f'[{e.a},{e.b}]':>10} {fmt(e.lam):>24} {'+/-' + fmt(e.c1):>24} "
            f"{fmt(e.c2.real):>24} {fmt(e.c2.imag):>24}"
        )
    lines.append(f"delta-type branches at k0: {n_delta}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_resonances(args) -> int:
    cfg = _load(args)
    k0 = _k0(args, cfg)
    delta = _delta(args, cfg)
    if delta == 0:
        raise SystemExit("error: delta must be nonzero")
    params = MaterialParams(delta=delta, r=cfg.chain.params.r, v=cfg.chain.params.v)
    pr = prepare(cfg.t, k0, params)
    rs = find_resonances(cfg.t, k0, delta, problem=pr)
    radius = args.radius or default_radius(pr, delta)
    nu = 2 * delta / (delta + pr.r)
    cc = contour_count(cfg.t, nu, k0.value, radius)
    inside = sum(1 for b in rs.branches if abs(b.k_num - k0.value) < cc.radius)
    data = {
        "k0_over_pi": str(k0.q),
        "delta": delta,
        "n": pr.n,
        "m": pr.m,
        "branches": [b.as_dict() for b in rs.branches],
        "contour": {"center": cc.center, "radius": cc.radius, "winding": cc.winding, "nodes": cc.nodes},
        "roots_inside_contour": inside,
        "distinct_roots": len(rs.distinct_roots(1e-10 * (1 + k0.value))),
        "warnings": rs.warnings,
        "notes": rs.notes,
    }
    _emit(dumps(data), args.out)
    return 0 if cc.winding == inside == pr.n else 1


def cmd_converge(args) -> int:
    cfg = _load(args)
    k0 = _k0(args, cfg)
    if args.delta_min <= 0 or args.delta_max < args.delta_min or args.points < 1:
        raise SystemExit("error: need 0 < delta-min <= delta-max and points >= 1")
    deltas = [float(d) for d in np.geomspace(args.delta_max, args.delta_min, args.points)]
    table = delta_sweep(cfg.t, k0, deltas, cfg.chain.params)
    _emit(sweep_csv(table), args.out)
    slopes = {table.labels[b]: s for b, s in table.slopes.items()}
    if slopes:
        sys.stderr.write(dumps({"slopes": slopes}))
    for w in table.warnings:
        log.warning(w)
    return 0


def cmd_eigenmode(args) -> int:
    cfg = _load(args)
    k0 = _k0(args, cfg)
    delta = _delta(args, cfg)
    if delta == 0:
        raise SystemExit("error: delta must be nonzero")
    params = MaterialParams(delta=delta, r=cfg.chain.params.r, v=cfg.chain.params.v)
    chain = ResonatorChain(cfg.chain.lengths, cfg.chain.spacings, params, cfg.chain.offset)
    pr = prepare(cfg.t, k0, params)
    rs = find_resonances(cfg.t, k0, delta, problem=pr)
    branch = _pick_branch(rs.branches, args.branch)
    prof = reconstruct_mode(chain, branch.k_num, delta, target=branch.block)
    side: dict[str, Any] = {
        "branch": branch.as_dict(),
        "radiation_residual": prof.radiation_residual,
    }
    if branch.kind == "sqrt":
        try:
            pred = trig_approximation(pr.partition, pr.spectrum, k0, branch.lam)
            fit = fit_trig_shape(prof, pred)
            side["beta"] = {str(j): b for j, b in zip(pred.spacings, pred.beta)}
            side["fitted_amplitudes"] = {str(j): a for j, a in zip(pred.spacings, fit.amplitudes)}
            side["deviation"] = fit.deviation
        except DegenerateEigenvalueError as exc:
            side["degenerate"] = str(exc)
    # second contrast for the per-interval exponents
    d2 = delta / 4
    rs2 = find_resonances(cfg.t, k0, d2, problem=pr)
    prof2 = reconstruct_mode(chain, rs2.branches[branch.branch_id].k_num, d2, target=branch.block)
    side["gamma"] = {str(j): g for j, g in estimate_gamma(prof, prof2, abs(delta), abs(d2)).items()}
    write_text(args.out, mode_csv(prof))
    write_text(Path(args.out).with_suffix(".json"), dumps(side))
    return 0


def _pick_branch(branches, key: str):
    for b in branches:
        if key in (str(b.branch_id), b.label):
            return b
    raise SystemExit(f"error: no branch {key!r}; have {[b.label for b in branches]}")


def cmd_plot(args) -> int:
    plot_csv(args.csv, args.out)
    return 0


def cmd_run_figure(args) -> int:
    res = run_figure(args.name, args.outdir)
    sys.stdout.write(dumps({"figure": res.name, "checks": res.checks, "ok": res.ok,
                            "files": [str(p) for p in res.files]}))
    return 0 if res.ok else 1


def cmd_verify_identities(args) -> int:
    res = verify_identities(args.seed, args.samples)
    width = max(len(d["check"]) for d in res.details)
    for d in res.details:
        mark = "PASS" if d["ok"] else "FAIL"
        sys.stdout.write(f"{mark}  {d['check']:<{width}}  max residual {d['max_residual']:.3e}  (tol {d['tolerance']:.0e})\n")
    return 0 if res.status == "pass" else 1


def cmd_verify_all(args) -> int:
    report = verify_all(args.seed, fault=args.fault, chains=args.chains)
    _emit(dumps(report), args.out)
    return 0 if report["ok"] else 1


# --- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fabry", description="Resonances of high-contrast resonator chains.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp, k0=True):
        sp.add_argument("--config", required=True, help="JSON chain config, or a built-in name")
        sp.add_argument("--float-mode", action="store_true", help="accept irrational inputs with 1e-9 tolerance")
        if k0:
            sp.add_argument("--k0", help="k0 / pi as 'p/q' or decimal (overrides config)")
        sp.add_argument("--out", help="output path (default stdout)")
        return sp

    with_config(sub.add_parser("partition", help="resonant index set and blocks")).set_defaults(func=cmd_partition)
    with_config(sub.add_parser("spectrum", help="block spectra of C(k0)")).set_defaults(func=cmd_spectrum)
    sp = with_config(sub.add_parser("expand", help="expansion coefficients per branch"))
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_expand)
    sp = with_config(sub.add_parser("resonances", help="refined resonances and contour count"))
    sp.add_argument("--delta", help="contrast; number or 're+imj'")
    sp.add_argument("--radius", type=float, help="contour radius (default from the spectrum)")
    sp.set_defaults(func=cmd_resonances)
    sp = with_config(sub.add_parser("converge", help="delta sweep to CSV"))
    sp.add_argument("--delta-min", type=float, default=1e-5)
    sp.add_argument("--delta-max", type=float, default=1e-2)
    sp.add_argument("--points", type=int, default=16)
    sp.set_defaults(func=cmd_converge)
    sp = with_config(sub.add_parser("eigenmode", help="sampled eigenmode to CSV + JSON sidecar"))
    sp.add_argument("--branch", required=True, help="branch id or label")
    sp.add_argument("--delta")
    sp.set_defaults(func=cmd_eigenmode)
    sp.set_defaults(out=None)
    sp = sub.add_parser("plot", help="SVG from a sweep or mode CSV")
    sp.add_argument("csv")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_plot)
    sp = sub.add_parser("run-figure", help="reproduce a figure")
    sp.add_argument("name", choices=["fig2", "fig4", "fig5", "fig6", "fig8"])
    sp.add_argument("--outdir", default=".")
    sp.set_defaults(func=cmd_run_figure)
    sp = sub.add_parser("verify-identities", help="transfer identity table")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--samples", type=int, default=50)
    sp.set_defaults(func=cmd_verify_identities)
    sp = sub.add_parser("verify-all", help="every verification suite as JSON")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--chains", type=int, default=200)
    sp.add_argument("--fault", type=float, default=0.0, help="shift one coupling of the oracle matrix")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify_all)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.command == "eigenmode" and not args.out:
        parser.error("eigenmode requires --out")
    try:
        return int(args.func(args))
    except (ValueError, KeyError, FileNotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
