"""Command line entry point.

Exit status: 0 when every enabled check passes, 1 when a check (or scenario
validation) fails, 2 when a file cannot be read or written.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .behavior import classify_rest_point, enclosing_set, worthwhile_set
from .dynamics import (
    clairvoyance_index,
    ekeland_certificate,
    hill_climb,
    inefficiency_gap,
    run_process,
    time_accounting,
    verify_budget,
    verify_certificate,
    verify_shrinking,
)
from .goals import frustration, goal_state
from .lsp import criticality_residual, lsp_run
from .scenario import Scenario, ScenarioError, load_scenario
from .space import gradient_check
from .traceio import emit_trace

log = logging.getLogger("wtmove")

OK, FAILED, ENV = 0, 1, 2


class EnvFailure(Exception):
    pass


def _out_dir(args, sc: Scenario) -> Path:
    d = Path(args.out or sc.output["dir"])
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise EnvFailure(f"cannot create output directory {d}: {exc}")
    return d


def _write(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise EnvFailure(f"cannot write {path}: {exc}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if dataclasses.is_dataclass(o):
        return dataclasses.asdict(o)
    return str(o)


def _need(sc, engine, command):
    if sc.engine != engine:
        print(f"{command}: scenario {sc.name!r} uses the {sc.engine} engine", file=sys.stderr)
        return False
    return True


def terminal_certificate(sc: Scenario, trace) -> dict:
    x = trace.terminal
    theta = trace.theta
    members, rho = enclosing_set(theta, sc.space, sc.gain, x)
    t_y = sc.process.exploit_time or sc.profile.t_max
    W = worthwhile_set(sc.profile, sc.cost, sc.space, sc.gain, min(t_y, sc.profile.t_max), x)
    gs = goal_state(theta, sc.space, sc.gain, x, sc.process.p, sc.process.q)
    return {
        "state": x,
        "gain": sc.gain(x),
        "classification": classify_rest_point(theta, sc.space, sc.gain, x).value,
        "enclosing_set": members.tolist(),
        "enclosing_radius": rho,
        "worthwhile_set": W.tolist(),
        "frustration": frustration(sc.profile.mu, gs.aspiration, gs.gain),
        "completed": trace.completed,
    }


def cmd_run_wtm(sc: Scenario, args) -> int:
    if not _need(sc, "wtm", "run-wtm"):
        return FAILED
    out = _out_dir(args, sc)
    trace = run_process(sc.space, sc.gain, sc.profile, sc.cost, sc.process, sc.x0)
    cert = terminal_certificate(sc, trace)
    fmt = args.format or sc.output["format"]
    try:
        emit_trace(trace, fmt, out / f"trace.{fmt}", cert)
    except OSError as exc:
        raise EnvFailure(str(exc))

    ok = True
    lines = [f"terminal: state {trace.terminal}, {cert['classification']} rest point"
             if trace.completed else f"terminal: non-terminal after {trace.n_moves} moves"]
    report = {"terminal": cert, "moves": trace.n_moves}
    if sc.verify["budget"]:
        rep = verify_budget(trace, trace.theta, sc.gain.upper)
        ok &= rep.ok
        lines.append(rep.summary())
        report["budget"] = rep
    if sc.verify["shrinking"] and trace.mode.value == "improving-enough":
        rep = verify_shrinking(trace, sc.space, sc.gain)
        ok &= rep.ok or rep.status.startswith("non-terminal")
        lines.append(rep.summary())
        report["shrinking"] = rep
    if sc.verify["time"]:
        speed_min = sc.profile.v_min or sc.cost.speed
        alpha_min = min(sc.profile.alpha_min, sc.process.alpha)
        tr = time_accounting(trace, sc.process.alpha, sc.cost.speed, alpha_min, min(speed_min, sc.cost.speed))
        ok &= tr.ok
        lines.append(f"time: total {tr.total!r} ({'pass' if tr.ok else 'fail'})")
        report["time"] = tr
    idx = clairvoyance_index(trace, sc.space, sc.gain, sc.profile, sc.cost, sc.process.radius,
                             sc.process.exploit_time)
    report["clairvoyance_index"] = idx
    _write(out / "report.json", _dump(report))
    print("\n".join(lines))
    return OK if ok else FAILED


def cmd_run_lsp(sc: Scenario, args) -> int:
    if not _need(sc, "lsp", "run-lsp"):
        return FAILED
    out = _out_dir(args, sc)
    cfg = sc.lsp
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.max_steps is not None:
        cfg = dataclasses.replace(cfg, max_iter=args.max_steps)
    trace = lsp_run(sc.gain, sc.constraint, sc.x0, cfg)
    fmt = args.format or sc.output["format"]
    summary = {
        "converged": trace.converged,
        "steps": trace.n_steps,
        "x": trace.x.tolist(),
        "value": trace.values[-1],
        "residual": trace.residual,
        "min_slack": min(trace.slacks) if trace.slacks else None,
    }
    ok = trace.converged
    lines = [f"lsp: {'converged' if trace.converged else 'not converged'} after {trace.n_steps} steps, "
             f"residual {trace.residual:.3e}"]
    if sc.verify["residual"]:
        res = criticality_residual(sc.gain, sc.constraint, trace.x, cfg.probe)
        ok &= res <= cfg.residual_tol
    if sc.verify["budget"] and sc.gain.upper is not None:
        summ = trace.summability_ok(sc.gain.upper, cfg.theta)
        summary["summability"] = summ
        summary["summability_degraded"] = trace.summability_degraded(sc.gain.upper, cfg.theta)
        ok &= summ
        lines.append(f"summability: {'pass' if summ else 'fail'}")
    mono = all(b >= a - e for a, b, e in zip(trace.values, trace.values[1:], [cfg.eps] * trace.n_steps))
    ok &= mono
    lines.append(f"monotone values: {'pass' if mono else 'fail'}")
    try:
        emit_trace(trace, fmt, out / f"lsp_trace.{fmt}")
    except OSError as exc:
        raise EnvFailure(str(exc))
    _write(out / "report.json", _dump(summary))
    print("\n".join(lines))
    return OK if ok else FAILED


def cmd_rest_points(sc: Scenario, args) -> int:
    if not _need(sc, "wtm", "rest-points"):
        return FAILED
    out = _out_dir(args, sc)
    theta = sc.theta
    rows = []
    for x in range(len(sc.space)):
        members, rho = enclosing_set(theta, sc.space, sc.gain, x)
        rows.append([x, sc.gain(x), classify_rest_point(theta, sc.space, sc.gain, x).value, len(members), rho])
    header = ["state", "gain", "class", "enclosing_size", "enclosing_radius"]
    try:
        with open(out / "rest_points.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows([[r[0], repr(r[1]), r[2], r[3], repr(r[4])] for r in rows])
    except OSError as exc:
        raise EnvFailure(str(exc))
    print(f"theta = {theta!r}")
    for r in rows:
        print(f"{r[0]:>5}  g={r[1]:<12.6g} {r[2]}")
    return OK


def cmd_ekeland(sc: Scenario, args) -> int:
    if not _need(sc, "wtm", "ekeland-check"):
        return FAILED
    out = _out_dir(args, sc)
    theta = sc.ekeland.get("theta", sc.theta)
    x0 = sc.ekeland.get("x0", sc.x0)
    eps = sc.ekeland.get("eps", sc.gain.upper - sc.gain(x0))
    cert = ekeland_certificate(sc.space, sc.gain, theta, eps, x0)
    rep = verify_certificate(sc.space, sc.gain, cert)
    _write(out / "ekeland.json", _dump({**cert.to_dict(), "reverified": rep.ok}))
    print(f"ekeland: x* = {cert.x_star} ({cert.status}); re-verification {'pass' if rep.ok else 'fail'}")
    return OK if cert.found and rep.ok else FAILED


def cmd_compare(sc: Scenario, args) -> int:
    if not _need(sc, "wtm", "compare"):
        return FAILED
    out = _out_dir(args, sc)
    trace = run_process(sc.space, sc.gain, sc.profile, sc.cost, sc.process, sc.x0)
    r = sc.compare.get("radius", sc.process.radius)
    hc = hill_climb(sc.space, sc.gain, r, sc.x0, sc.process.max_steps)
    gup = sc.gain.upper
    res = {
        "wtm": {"terminal": trace.terminal, "gain": trace.records[-1].gain, "gap": inefficiency_gap(trace, gup)},
        "hill_climb": {"terminal": hc.terminal, "gain": hc.records[-1].gain, "gap": inefficiency_gap(hc, gup)},
    }
    _write(out / "compare.json", _dump(res))
    print(f"worthwhile-to-move gap: {res['wtm']['gap']!r} (terminal {trace.terminal})")
    print(f"hill-climb gap:         {res['hill_climb']['gap']!r} (terminal {hc.terminal})")
    rep = verify_budget(trace, trace.theta, gup)
    return OK if rep.ok else FAILED


def cmd_validate(sc: Scenario, args) -> int:
    if sc.engine == "lsp":
        res = gradient_check(sc.gain, sc.x0)
        ok = res <= 1e-5 * max(1.0, float(np.abs(sc.gain.gradient(sc.x0)).max()))
        print(f"gradient check at x0: {res:.3e} ({'pass' if ok else 'fail'})")
        return OK if ok else FAILED
    print(f"{sc.name}: metric on {len(sc.space)} points valid")
    return OK


COMMANDS = {
    "run-wtm": cmd_run_wtm,
    "run-lsp": cmd_run_lsp,
    "rest-points": cmd_rest_points,
    "ekeland-check": cmd_ekeland,
    "compare": cmd_compare,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wtmove", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help="scenario JSON document")
        p.add_argument("--out", help="output directory (default from scenario, else ./out)")
        p.add_argument("--seed", type=int, help="seed for LSP multi-start")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--max-steps", type=int, dest="max_steps")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        sc = load_scenario(args.scenario)
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return ENV
    except json.JSONDecodeError as exc:
        print(f"error: scenario is not valid JSON: {exc}", file=sys.stderr)
        return ENV
    except ScenarioError as exc:
        for e in exc.errors:
            print(f"invalid: {e}", file=sys.stderr)
        return FAILED
    if sc.engine == "wtm" and args.max_steps is not None:
        sc.process = dataclasses.replace(sc.process, max_steps=args.max_steps)
    try:
        return COMMANDS[args.command](sc, args)
    except EnvFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ENV


if __name__ == "__main__":
    sys.exit(main())
