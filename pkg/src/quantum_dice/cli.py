"""``quantum-dice`` command line.

Exit codes: 0 when every check passes, 1 on a statistical or oracle failure,
2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Any, Optional, Sequence

from . import entangled as ent
from .die import (
    DieState,
    RollDirection,
    grid_probability,
    hidden_measurement_probability,
    state_vector_of,
)
from .harness import (
    CI_FLOOR,
    CSV_COLUMNS,
    ComparisonReport,
    RunConfig,
    run_chsh_session,
    run_sequential_session,
    run_single_die_session,
)
from .hilbert import (
    TOL,
    born_probability,
    make_face_observable,
    projector_for,
    total_probability_decomposition,
)

SEED_ENV = "QUANTUM_DICE_SEED"
DEFAULT_SEED = 20240229
DEFAULT_TRIALS = 100_000
GRID_POINTS = 1_000_000
GRID_TOL = 1e-3

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- argument types ---------------------------------------------------------

def _die_state(token: str) -> DieState:
    try:
        return DieState(token)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"invalid state {token!r} (choose from +z, -z, +x, -x)") from None


def _direction(token: str) -> RollDirection:
    try:
        return RollDirection(token.lower())
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"invalid direction {token!r} (choose from z, x)") from None


def _positive_int(token: str) -> int:
    try:
        v = int(token)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {token!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _non_negative_int(token: str) -> int:
    try:
        v = int(token)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {token!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _seed(token: str) -> int:
    try:
        v = int(token, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {token!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {v}")
    return v


def _positive_float(token: str) -> float:
    try:
        v = float(token)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {token!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be positive, got {token}")
    return v


def _prepared(token: str) -> tuple[DieState, DieState]:
    parts = token.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(
            f"expected two comma-separated states like +x,-x, got {token!r}")
    return _die_state(parts[0].strip()), _die_state(parts[1].strip())


def _resolve_seed(args) -> tuple[int, str]:
    if args.seed is not None:
        return args.seed, "flag"
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return _seed(env), f"env:{SEED_ENV}"
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"{SEED_ENV}: {exc}") from None
    return DEFAULT_SEED, "default"


# -- rendering helpers ------------------------------------------------------

def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return v


def _json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _report_table(report: ComparisonReport) -> str:
    lines = [f"  {'outcome':<12}{'analytic':>10}{'count':>10}{'p_hat':>12}"
             f"{'+/-':>12}  result"]
    for r in report.rows:
        e = r.estimate
        lines.append(f"  {r.label:<12}{_fmt(r.analytic):>10}{e.count:>10}"
                     f"{e.p_hat:>12.6f}{e.ci_half_width:>12.6f}  "
                     f"{'ok' if r.passed else 'FAIL'}")
    return "\n".join(lines)


def _config_line(config: dict, seed_source: str) -> str:
    items = ", ".join(f"{k}={v}" for k, v in config.items() if v is not None)
    return f"config: {items} (seed from {seed_source})"


# -- subcommands ------------------------------------------------------------

def _born_table() -> list[tuple[DieState, RollDirection, int, float]]:
    return [(s, d, r, born_probability(state_vector_of(s), projector_for(d, r)))
            for s in DieState for d in RollDirection for r in (1, -1)]


def cmd_probabilities(args) -> tuple[str, int]:
    table = _born_table()
    observables = {f"F_{d.value}": make_face_observable(d).matrix.tolist()
                   for d in RollDirection}
    if args.format == "json":
        doc = {"probabilities": [
            {"state": s.value, "direction": d.value, "reading": r, "probability": p}
            for s, d, r, p in table], "observables": observables}
        return _json(doc), EXIT_OK
    if args.format == "csv":
        return _csv(("state", "direction", "reading", "probability"),
                    [(s.value, d.value, r, p) for s, d, r, p in table]), EXIT_OK
    lines = ["Born probabilities P(state --roll--> reading)", "",
             f"  {'state':<8}{'roll':<8}{'reading':>8}{'probability':>14}"]
    for s, d, r, p in table:
        lines.append(f"  {s.ket:<8}{d.value + '-roll':<8}{r:>+8d}{_fmt(p):>14}")
    lines.append("")
    for name, m in observables.items():
        lines.append(f"  {name} = [[{m[0][0]:g}, {m[0][1]:g}], [{m[1][0]:g}, {m[1][1]:g}]]")
    return "\n".join(lines) + "\n", EXIT_OK


def cmd_roll(args) -> tuple[str, int]:
    seed, source = _resolve_seed(args)
    cfg = RunConfig(seed, args.trials, sigma_level=args.sigma)
    report = run_single_die_session(cfg, args.state, args.direction, lanes=args.lanes)
    code = EXIT_OK if report.overall_pass else EXIT_FAIL
    if args.format == "json":
        doc = report.as_dict()
        doc["config"]["seed_source"] = source
        return _json(doc), code
    if args.format == "csv":
        return report.to_csv(), code
    text = (f"{args.trials} {args.direction.value}-rolls of a die prepared in "
            f"{args.state.ket}\n{_config_line(report.config, source)}\n\n"
            f"{_report_table(report)}\n\n"
            f"overall: {'PASS' if report.overall_pass else 'FAIL'}\n")
    return text, code


def cmd_interference(args) -> tuple[str, int]:
    seed, source = _resolve_seed(args)
    psi = state_vector_of(args.state)
    p_alpha = projector_for(args.condition, 1)
    p_beta = projector_for(args.target, 1)
    dec = total_probability_decomposition(psi, p_alpha, p_beta)
    terms = {"marginal": dec.marginal, "joint_then": dec.joint_then,
             "joint_complement_then": dec.joint_complement_then,
             "interference": dec.interference, "classical_sum": dec.classical_sum,
             "residual": dec.residual}
    ok = abs(dec.residual) < TOL
    report = None
    if args.trials > 0:
        cfg = RunConfig(seed, args.trials, sigma_level=args.sigma)
        report = run_sequential_session(cfg, args.state, args.condition, args.target,
                                        lanes=args.lanes)
        ok = ok and report.overall_pass
    code = EXIT_OK if ok else EXIT_FAIL
    config = {"state": args.state.value, "condition": args.condition.value,
              "target": args.target.value, "trials": args.trials, "seed": seed,
              "sigma_level": args.sigma, "seed_source": source}

    if args.format == "json":
        doc = {"config": config, "analytic": terms,
               "session": report.as_dict() if report is not None else None}
        return _json(doc), code
    if args.format == "csv":
        rows = [(f"decomposition:{k}", v, None, None, None, None, None)
                for k, v in terms.items()]
        if report is not None:
            for r in report.rows:
                e = r.estimate
                rows.append((r.label, r.analytic, e.count, e.n, e.p_hat,
                             e.ci_half_width, r.passed))
        return _csv(CSV_COLUMNS, rows), code

    c, t = args.condition.value, args.target.value
    lines = [
        f"Total probability of F_{t}=+1 for {args.state.ket}, conditioned on an "
        f"F_{c} roll",
        "",
        f"  P(F_{t}=+1)                    = {_fmt(dec.marginal)}",
        f"  P(F_{c}=+1 then F_{t}=+1)        = {_fmt(dec.joint_then)}",
        f"  P(F_{c}=-1 then F_{t}=+1)        = {_fmt(dec.joint_complement_then)}",
        f"  interference 2Re<Pa Pb Pa'>    = {_fmt(dec.interference)}",
        f"  classical sum of paths         = {_fmt(dec.classical_sum)}"
        + ("   <-- differs from the marginal" if abs(dec.interference) > TOL else ""),
        f"  closure residual               = {dec.residual:.3g}",
    ]
    if report is not None:
        est = report.extras["estimate"]
        lines += ["", _config_line(report.config, source), "",
                  _report_table(report), "",
                  f"  direct marginal estimate       = "
                  f"{est['direct_marginal']['p_hat']:.6f}",
                  f"  sum of sequential paths        = {est['sequential_sum']:.6f}",
                  f"  measured deficit               = {est['deficit']:.6f}"
                  f" (analytic {_fmt(dec.marginal - dec.classical_sum)})"]
    lines += ["", f"overall: {'PASS' if ok else 'FAIL'}"]
    return "\n".join(lines) + "\n", code


def _chsh_rows(result) -> list[tuple]:
    """Summary rows: analytic value, estimate in ``p_hat``, its half-width."""
    a, e = result.report, result.estimated
    names = ("E_ab", "E_ab'", "E_a'b", "E_a'b'", "I")
    analytic = a.expectations + (a.i_value,)
    estimate = e.expectations + (e.i_value,)
    cis = result.e_ci + (result.i_ci,)
    return [(f"chsh:{name}", av, None, None, ev, ci,
             abs(ev - av) <= max(ci, CI_FLOOR))
            for name, av, ev, ci in zip(names, analytic, estimate, cis)]


def cmd_bell(args) -> tuple[str, int]:
    seed, source = _resolve_seed(args)
    cfg = RunConfig(seed, args.trials, sigma_level=args.sigma)
    if args.variant == "rolled":
        if args.prepared is not None:
            raise UsageError("--prepared only applies to --variant discovery")
        result = run_chsh_session(cfg, "rolled", lanes=args.lanes)
        claim_ok = abs(result.report.i_value - ent.MAX_CHSH) <= TOL
    else:
        prepared = args.prepared or (DieState.PLUS_X, DieState.MINUS_X)
        result = run_chsh_session(cfg, "discovery", prepared, lanes=args.lanes)
        claim_ok = (result.report.i_value <= ent.BELL_BOUND + TOL
                    and result.estimated_i <= ent.BELL_BOUND + TOL)
    bounds = ent.enumerate_deterministic_chsh()
    ordering_ok = ent.MAX_CHSH > ent.TSIRELSON_BOUND > ent.BELL_BOUND
    ok = claim_ok and ordering_ok and bounds.max_i <= ent.BELL_BOUND + TOL \
        and result.per_pair.overall_pass
    code = EXIT_OK if ok else EXIT_FAIL

    summary = {"bell_bound": ent.BELL_BOUND, "tsirelson_bound": ent.TSIRELSON_BOUND,
               "deterministic_min_i": bounds.min_i,
               "deterministic_max_i": bounds.max_i,
               "deterministic_assignments": len(bounds.values)}
    if args.format == "json":
        doc = result.as_dict()
        doc["config"]["seed_source"] = source
        doc["bounds"] = summary
        doc["pass"] = ok
        return _json(doc), code
    if args.format == "csv":
        rows = [(r.label, r.analytic, r.estimate.count, r.estimate.n, r.estimate.p_hat,
                 r.estimate.ci_half_width, r.passed) for r in result.per_pair.rows]
        rows += _chsh_rows(result)
        return _csv(CSV_COLUMNS, rows), code

    a, e = result.report, result.estimated
    names = ("E_ab", "E_ab'", "E_a'b", "E_a'b'")
    lines = [f"CHSH experiment on the rod-linked dice ({args.variant} variant)",
             _config_line(result.per_pair.config, source), "",
             f"  {'':<8}{'analytic':>10}{'estimate':>12}"]
    for name, ea, ee in zip(names, a.expectations, e.expectations):
        lines.append(f"  {name:<8}{_fmt(ea):>10}{ee:>12.6f}")
    lines += [f"  {'I':<8}{_fmt(a.i_value):>10}{e.i_value:>12.6f}  +/- {result.i_ci:.6f}",
              "",
              f"  Bell (local) bound       2",
              f"  Tsirelson bound 2*sqrt2  {ent.TSIRELSON_BOUND:.4f}",
              f"  maximal value            4",
              f"  deterministic local assignments: {len(bounds.values)}, "
              f"I in [{_fmt(bounds.min_i)}, {_fmt(bounds.max_i)}]"]
    if args.variant == "rolled":
        v = result.per_pair.extras["anticorrelation_violations"]
        lines.append(f"  joint rolls with equal faces: {v} of {args.trials}")
    lines += ["", "per-pair outcome frequencies:", _report_table(result.per_pair),
              "", f"overall: {'PASS' if ok else 'FAIL'}"]
    return "\n".join(lines) + "\n", code


def oracle_cells(points: int = GRID_POINTS) -> list[dict]:
    cells = []
    for s in DieState:
        for d in RollDirection:
            for r in (1, -1):
                closed = hidden_measurement_probability(s, d, r)
                born = born_probability(state_vector_of(s), projector_for(d, r))
                grid = grid_probability(s, d, r, points)
                cells.append({"state": s.value, "direction": d.value, "reading": r,
                              "closed_form": closed, "born": born, "grid": grid,
                              "pass": abs(closed - born) <= TOL and abs(grid - born) <= GRID_TOL})
    return cells


def cmd_oracle(args) -> tuple[str, int]:
    cells = oracle_cells(args.grid_points)
    n_pass = sum(c["pass"] for c in cells)
    code = EXIT_OK if n_pass == len(cells) else EXIT_FAIL
    if args.format == "json":
        doc = {"config": {"grid_points": args.grid_points, "grid_tolerance": GRID_TOL},
               "cells": cells, "passed": n_pass, "total": len(cells),
               "pass": code == EXIT_OK}
        return _json(doc), code
    if args.format == "csv":
        keys = ("state", "direction", "reading", "closed_form", "born", "grid", "pass")
        return _csv(keys, [[c[k] for k in keys] for c in cells]), code
    lines = ["Hidden-impulse measure vs Born rule", "",
             f"  {'state':<8}{'roll':<8}{'reading':>8}{'measure':>10}{'born':>8}"
             f"{'grid':>12}  result"]
    for c in cells:
        lines.append(f"  {DieState(c['state']).ket:<8}{c['direction'] + '-roll':<8}"
                     f"{c['reading']:>+8d}{_fmt(c['closed_form']):>10}"
                     f"{_fmt(c['born']):>8}{c['grid']:>12.6f}  "
                     f"{'ok' if c['pass'] else 'FAIL'}")
    lines += ["", f"{n_pass}/{len(cells)} cells pass"]
    return "\n".join(lines) + "\n", code


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quantum-dice",
        description="Exact and Monte Carlo experiments with quantum-like dice.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(p, session=True):
        p.add_argument("--format", choices=("human", "json", "csv"), default="human")
        if session:
            p.add_argument("--seed", type=_seed, default=None,
                           help=f"64-bit seed (default: ${SEED_ENV} or {DEFAULT_SEED})")
            p.add_argument("--sigma", type=_positive_float, default=3.0,
                           help="confidence level in standard errors (default 3)")
            p.add_argument("--lanes", type=_positive_int, default=1,
                           help="worker processes; results do not depend on it")

    p = sub.add_parser("probabilities", help="analytic Born table and observables")
    common(p, session=False)
    p.set_defaults(func=cmd_probabilities)

    p = sub.add_parser("roll", help="Monte Carlo single-die rolls vs the Born rule")
    p.add_argument("--state", type=_die_state, required=True)
    p.add_argument("--direction", type=_direction, required=True)
    p.add_argument("--trials", type=_positive_int, default=DEFAULT_TRIALS)
    common(p)
    p.set_defaults(func=cmd_roll)

    p = sub.add_parser("interference",
                       help="total-probability decomposition and sequential rolls")
    p.add_argument("--state", type=_die_state, required=True)
    p.add_argument("--condition", type=_direction, required=True,
                   help="direction of the first (conditioning) roll")
    p.add_argument("--target", type=_direction, required=True,
                   help="direction of the second roll")
    p.add_argument("--trials", type=_non_negative_int, default=DEFAULT_TRIALS,
                   help="0 prints the analytic decomposition only")
    common(p)
    p.set_defaults(func=cmd_interference)

    p = sub.add_parser("bell", help="CHSH experiment on the entangled dice")
    p.add_argument("--variant", choices=("rolled", "discovery"), default="rolled")
    p.add_argument("--prepared", type=_prepared, default=None,
                   help="die states for the discovery variant, e.g. +x,-x")
    p.add_argument("--trials", type=_positive_int, default=DEFAULT_TRIALS)
    common(p)
    p.set_defaults(func=cmd_bell)

    p = sub.add_parser("oracle", help="hidden-impulse measure vs Born rule, all cells")
    p.add_argument("--grid-points", type=_positive_int, default=GRID_POINTS)
    common(p, session=False)
    p.set_defaults(func=cmd_oracle)
    return parser


_STATE_OPTIONS = ("--state", "--prepared")


def _attach_state_values(argv: Sequence[str]) -> list[str]:
    """Turn ``--state -x`` into ``--state=-x`` so argparse does not read a flag."""
    out, i = [], 0
    argv = list(argv)
    while i < len(argv):
        tok = argv[i]
        if tok in _STATE_OPTIONS and i + 1 < len(argv) and argv[i + 1][:1] == "-" \
                and argv[i + 1][1:2] in ("z", "x"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    args = parser.parse_args(_attach_state_values(argv))  # exits 2 on usage errors
    try:
        text, code = args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
