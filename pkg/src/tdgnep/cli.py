"""Command-line front end: ``tdgnep solve | verify | oracle``.

Exit status: 0 when the certificate is accepted (or the oracle agrees),
2 when the run is not converged or the profile is rejected, 1 on input errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from .economy import EconomyGame, EconomyModel, excess_demand, validate
from .errors import MembershipError, ScenarioError, ShapeError
from .gnep import solve
from .oracle import OracleRefused, brute_force_oracle
from .scenario import load_scenario
from .verify import EquilibriumCertificate, Tolerances, certify

EXIT_OK, EXIT_ERROR, EXIT_REJECTED = 0, 1, 2
MAX_CELLS = 2.0

log = logging.getLogger("tdgnep")


class InputError(Exception):
    """Bad user input; reported on stderr with exit status 1."""


# --------------------------------------------------------------- time series


def series_columns(model: EconomyModel, with_excess: bool = True) -> list:
    l = model.l
    cols = ["t"]
    cols += [f"a{j}_{h}" for j in range(1, model.s + 1) for h in range(1, l + 1)]
    cols += [f"b{i}_{h}" for i in range(1, model.r + 1) for h in range(1, l + 1)]
    cols += [f"p_{h}" for h in range(1, l + 1)]
    if with_excess:
        cols += [f"z_{h}" for h in range(1, l + 1)]
    return cols


def format_series(model: EconomyModel, a, b, p) -> str:
    """Comma-separated table, one row per interval, reals with 17 significant digits."""
    z = excess_demand(model, a, b).values
    blocks = [np.asarray(v, dtype=float) for v in list(a) + list(b) + [p, z]]
    buf = io.StringIO()
    buf.write(",".join(series_columns(model)) + "\n")
    for k, t in enumerate(model.grid.nodes):
        row = [t] + [v for blk in blocks for v in blk[k]]
        buf.write(",".join("%.17g" % v for v in row) + "\n")
    return buf.getvalue()


def read_series(model: EconomyModel, text: str):
    """Parse a time-series table into ``(a, b, p)``; the excess columns are optional."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise InputError("profile table is empty")
    header = [c.strip() for c in rows[0]]
    if header not in (series_columns(model), series_columns(model, with_excess=False)):
        raise InputError(f"profile header {header} does not match the scenario's columns "
                         f"{series_columns(model, with_excess=False)} (optionally followed by z columns)")
    body = rows[1:]
    m, l = model.shape
    if len(body) != m:
        raise InputError(f"profile table has {len(body)} rows, expected {m}")
    try:
        data = np.array([[float(v) for v in row] for row in body], dtype=float)
    except ValueError as exc:
        raise InputError(f"profile table holds a non-numeric entry: {exc}") from None
    if data.shape[1] != len(header):
        raise InputError("ragged profile table")
    if not np.all(np.isfinite(data)):
        raise InputError("profile table holds non-finite values")
    col = 1
    a, b = [], []
    for _ in range(model.s):
        a.append(data[:, col:col + l].copy())
        col += l
    for _ in range(model.r):
        b.append(data[:, col:col + l].copy())
        col += l
    return a, b, data[:, col:col + l].copy()


# -------------------------------------------------------------------- report


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def certificate_lines(cert: EquilibriumCertificate) -> list:
    out = [f"verdict = {'accepted' if cert.accepted else 'rejected'}"]
    out += [f"producer_gap.{j} = {_fmt(g)}" for j, g in enumerate(cert.producer_gaps, 1)]
    out += [f"consumer_gap.{i} = {_fmt(g)}" for i, g in enumerate(cert.consumer_gaps, 1)]
    out.append(f"price_gap = {_fmt(cert.price_gap)}")
    out += [f"clearing_integral.{h} = {_fmt(c)}" for h, c in enumerate(cert.clearing_integrals, 1)]
    out.append(f"walras_residual = {_fmt(cert.walras_residual)}")
    out.append(f"walras_applicable = {_fmt(cert.walras_applicable)}")
    out.append(f"walras_reason = {cert.walras_reason}")
    out += [f"producer_profit.{j} = {_fmt(v)}" for j, v in enumerate(cert.producer_profits, 1)]
    out += [f"failure = {f}" for f in cert.failures()]
    return out


def tolerance_lines(tol: Tolerances) -> list:
    return [f"tolerance.{f.name} = {_fmt(getattr(tol, f.name))}" for f in fields(tol)]


def parse_report(text: str) -> dict:
    """``key = value`` report lines as a dict (repeated keys collect into lists)."""
    out = {}
    for line in text.splitlines():
        if " = " not in line:
            continue
        k, v = line.split(" = ", 1)
        if k in out:
            out[k] = (out[k] if isinstance(out[k], list) else [out[k]]) + [v]
        else:
            out[k] = v
    return out


# ------------------------------------------------------------------ commands


def _load(args) -> tuple:
    overrides = list(args.override or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"solver.seed={args.seed}")
    overrides += [f"tolerances.{t}" for t in (args.tolerance or [])]
    try:
        sc = load_scenario(args.scenario, overrides)
        model = sc.build()
    except OSError as exc:
        raise InputError(f"cannot read scenario: {exc}") from None
    except (ScenarioError, ShapeError, ValueError, TypeError) as exc:
        raise InputError(f"{args.scenario}: {exc}") from None
    report = validate(model, seed=sc.solver.seed)
    if not report:
        raise InputError(f"{args.scenario}: model failed validation: {report}")
    return sc, model


def _out_dir(args) -> Path:
    out = Path(args.out_dir) if args.out_dir else Path("runs") / Path(args.scenario).stem
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(args) -> int:
    sc, model = _load(args)
    game = EconomyGame(model)
    sched = sc.schedule()
    t0 = time.perf_counter()
    res = solve(game, game.initial_profile(), sched)
    elapsed = time.perf_counter() - t0
    a, b, p = game.unpack(res.profile)
    lines = [f"scenario = {Path(args.scenario).name}", f"seed = {sc.solver.seed}",
             f"converged = {_fmt(res.converged)}", f"iterations = {res.iterations}",
             f"final_gap = {_fmt(res.gap)}", f"final_residual = {_fmt(res.final_residual)}",
             f"max_projection = {_fmt(res.max_projection)}"]
    lines += [f"solver.{f.name} = {_fmt(getattr(sched, f.name))}" for f in fields(sched)]
    accepted = False
    try:
        cert = certify(model, a, b, p, sc.tolerances, game.R)
        accepted = cert.accepted
        lines += certificate_lines(cert)
    except MembershipError as exc:
        lines += ["verdict = rejected", f"membership_error = {exc}"]
    lines += tolerance_lines(sc.tolerances)
    status = "accepted" if accepted and res.converged else ("not_converged" if not res.converged else "rejected")
    lines.insert(0, f"status = {status}")

    out = _out_dir(args)
    (out / sc.output.report).write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / sc.output.series).write_text(format_series(model, a, b, p), encoding="utf-8")
    print("\n".join(lines))
    log.info("solve finished in %.2f s; artifacts in %s", elapsed, out)
    return EXIT_OK if status == "accepted" else EXIT_REJECTED


def cmd_verify(args) -> int:
    sc, model = _load(args)
    try:
        text = Path(args.profile).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read profile: {exc}") from None
    a, b, p = read_series(model, text)
    try:
        cert = certify(model, a, b, p, sc.tolerances)
    except MembershipError as exc:
        print("verdict = rejected")
        print(f"membership_error = {exc}")
        print(f"constraint = {exc.constraint}")
        return EXIT_REJECTED
    print("\n".join(certificate_lines(cert) + tolerance_lines(sc.tolerances)))
    return EXIT_OK if cert.accepted else EXIT_REJECTED


def cmd_oracle(args) -> int:
    sc, model = _load(args)
    t0 = time.perf_counter()
    try:
        res = brute_force_oracle(model, args.resolution)
    except OracleRefused as exc:
        raise InputError(f"{exc} (estimate {exc.estimate})") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    lines = [f"oracle.resolution = {res.resolution}", f"oracle.size = {res.evaluated}",
             f"oracle.gap = {_fmt(res.gap)}", f"oracle.profiles = {len(res.profiles)}",
             f"oracle.seconds = {time.perf_counter() - t0:.3f}"]
    names = series_columns(model, with_excess=False)[1:]
    first = np.concatenate([np.ravel(v) for v in res.profiles[0]])
    lines += [f"oracle.{n} = {_fmt(v)}" for n, v in zip(names, first)]

    series = Path(args.compare) if args.compare else _out_dir(args) / sc.output.series
    code = EXIT_OK
    if series.exists():
        a, b, p = read_series(model, series.read_text(encoding="utf-8"))
        blocks = a + b + [p]
        near = res.nearest(blocks)
        solver_vals = np.concatenate([np.ravel(v) for v in blocks])
        oracle_vals = np.concatenate([np.ravel(v) for v in near])
        steps = np.concatenate([np.ravel(s) for s in res.steps])
        for n, sv, ov, h in zip(names, solver_vals, oracle_vals, steps):
            cells = abs(sv - ov) / h if h > 0 else (0.0 if abs(sv - ov) <= 1e-12 else np.inf)
            lines.append(f"deviation.{n} = solver {sv:.10g} oracle {ov:.10g} cells {cells:.4g}")
        worst = res.cell_deviation(near, blocks)
        lines.append(f"deviation.max_cells = {_fmt(worst)}")
        lines.append(f"agreement = {_fmt(worst <= MAX_CELLS)}")
        code = EXIT_OK if worst <= MAX_CELLS else EXIT_REJECTED
    else:
        lines.append(f"comparison = skipped (no solve artifact at {series})")
    print("\n".join(lines))
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tdgnep", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="scenario file")
        p.add_argument("--override", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a scenario entry (repeatable)")
        p.add_argument("--seed", type=int, help="replace the scenario seed")
        p.add_argument("--out-dir", help="run directory (default runs/<scenario stem>)")
        p.add_argument("--tolerance", action="append", metavar="NAME=VALUE",
                       help="override a certificate tolerance (repeatable)")

    p = sub.add_parser("solve", help="solve a scenario and certify the result")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="certify a stored profile without solving")
    common(p)
    p.add_argument("profile", help="time-series table written by solve")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="brute-force grid oracle for one-interval scenarios")
    common(p)
    p.add_argument("--resolution", type=int, default=21)
    p.add_argument("--compare", help="time-series table to compare against (default: the solve artifact)")
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; that code means "rejected" here
        return EXIT_OK if not exc.code else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
