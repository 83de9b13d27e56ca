"""Command-line interface.

Subcommands
-----------
analyze    channel spec JSON -> full steering report JSON
simulate   session config JSON -> Monte Carlo session result JSON
sweep      grid over one channel parameter -> CSV/JSON rows
weight     assemblage JSON -> steerable weight JSON
selftest   run the invariant catalog; print the threshold table

Exit codes: 0 success, 2 input error, 3 numerical (SDP) failure,
4 self-test failure. The environment variable TEMPSTEER_SDP_TOL overrides
the default --sdp-tol.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import metrics
from .assemblage import Assemblage, lhs_assemblage, strategy_table
from .channels import ChannelError, make_channel, preset_catalog, validate
from .qubit import ValidationError
from .report import analytic_report
from .sdp import SDP_TOL, SolverError, build_weight_sdp, steerable_weight
from .serialize import SCHEMA_VERSION, SchemaError, dump_json, load_json
from .simulate import SessionConfig, run_and_analyze

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_SELFTEST = 4

_SWEEPABLE = {
    "depolarizing": {"v"},
    "phase_damping": {"p"},
    "amplitude_damping": {"g"},
    "pauli": {"px", "py", "pz"},
    "unitary": {"angle"},
}

SWEEP_COLUMNS = [
    "schema_version", "param", "value", "n_bases", "s", "branch_resolved_s",
    "qber", "qber_lower_bound", "qber_upper_bound", "w_t",
    "secure_individual", "secure_unconditional", "monogamous",
]


def _default_sdp_tol() -> float:
    env = os.environ.get("TEMPSTEER_SDP_TOL")
    return float(env) if env else SDP_TOL


def _parse_basis_pair(text: str) -> tuple[int, int]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ValidationError(f"--basis-pair expects two comma-separated indices, got {text!r}")
    return int(parts[0]), int(parts[1])


def _emit_json(payload: dict, out: str | None) -> None:
    if out:
        dump_json(payload, out)
    else:
        print(json.dumps(payload, sort_keys=True, indent=2))


def cmd_analyze(args) -> int:
    spec = load_json(args.channel)
    bases = _parse_basis_pair(args.basis_pair) if args.n == 2 else None
    report = analytic_report(
        spec, args.n, bases,
        q_override=args.q_override, sdp_tol=args.sdp_tol,
    )
    payload = report.to_json()
    if args.mode != "both":
        payload["verdicts"] = [
            v for v in payload["verdicts"] if v["mode"] == args.mode
        ]
    _emit_json(payload, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    data = load_json(args.config)
    if args.rounds is not None:
        data["rounds"] = args.rounds
    if args.seed is not None:
        data["seed"] = args.seed
    cfg = SessionConfig.from_json(data)
    result = run_and_analyze(
        cfg, known_channel=True, sdp_tol=args.sdp_tol, q_override=args.q_override
    )
    _emit_json(result.to_json(), args.out)
    if args.rounds_csv:
        result.log.to_csv(args.rounds_csv)
    return EXIT_OK


def cmd_weight(args) -> int:
    asm = Assemblage.from_json(load_json(args.assemblage))
    weight = steerable_weight(asm, tol=args.sdp_tol)
    _emit_json(weight.to_json(), args.out)
    if args.dump_problem:
        problem = build_weight_sdp(asm)
        dump_json(
            {
                "problem": problem.to_json(),
                "solution": weight.solution.to_json(),
            },
            args.dump_problem,
        )
    return EXIT_OK


def _sweep_point(task) -> dict:
    """One grid point; module-level so worker processes can pickle it."""
    spec, param, value, n_bases, q_override, sdp_tol = task
    point = dict(spec)
    point[param] = value
    report = analytic_report(point, n_bases, q_override=q_override, sdp_tol=sdp_tol)
    individual = report.verdict("individual")
    unconditional = report.verdict("unconditional")
    return {
        "schema_version": SCHEMA_VERSION,
        "param": param,
        "value": value,
        "n_bases": n_bases,
        "s": report.summary.s,
        "branch_resolved_s": report.summary.branch_resolved_s,
        "qber": report.summary.qber,
        "qber_lower_bound": report.qber_lower,
        "qber_upper_bound": report.qber_upper,
        "w_t": report.weight.w_t,
        "secure_individual": individual.secure,
        "secure_unconditional": unconditional.secure,
        "monogamous": individual.monogamous,
    }


def cmd_sweep(args) -> int:
    spec = load_json(args.channel)
    kind = spec.get("kind")
    allowed = _SWEEPABLE.get(kind, set())
    if args.param not in allowed:
        raise ValidationError(
            f"unknown sweep parameter {args.param!r} for channel kind {kind!r}"
            f" (allowed: {sorted(allowed) or 'none'})"
        )
    if args.values:
        values = [float(v) for v in args.values.split(",")]
    else:
        values = np.linspace(args.start, args.stop, args.points).tolist()
    tasks = [
        (spec, args.param, value, args.n, args.q_override, args.sdp_tol)
        for value in values
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))  # grid order preserved
    else:
        rows = [_sweep_point(t) for t in tasks]

    if args.format == "json":
        _emit_json({"schema_version": SCHEMA_VERSION, "rows": rows}, args.out)
        return EXIT_OK
    handle = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(handle, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            out_row = dict(row)
            if out_row["qber_upper_bound"] is None:
                out_row["qber_upper_bound"] = ""
            for key in ("secure_individual", "secure_unconditional", "monogamous"):
                out_row[key] = "true" if out_row[key] else "false"
            writer.writerow(out_row)
    finally:
        if args.out:
            handle.close()
    return EXIT_OK


def _selftest_checks(seed: int, sdp_tol: float):
    """The invariant catalog; yields (name, passed, detail)."""
    q2 = metrics.individual_attack_qber(2)
    q3 = metrics.individual_attack_qber(3)
    yield ("threshold-q2", abs(q2 - (1 - 1 / math.sqrt(2)) / 2) < 1e-12, f"q_2 = {q2:.15f}")
    yield ("threshold-q3", abs(q3 - 1 / 6) < 1e-12, f"q_3 = {q3:.15f}")
    s2 = metrics.s_threshold(2, q2)
    s3 = metrics.s_threshold(3, q3)
    yield ("threshold-s2", abs(s2 - 1.0) < 1e-12, f"N(1-2q_2)^2 = {s2:.15f}")
    yield ("threshold-s3", abs(s3 - 4 / 3) < 1e-12, f"N(1-2q_3)^2 = {s3:.15f}")
    m2 = metrics.monogamy_threshold(2)
    m3 = metrics.monogamy_threshold(3)
    yield ("monogamy-threshold-2", abs(m2 - 1.0) < 1e-12, f"2^(N-1)/N = {m2:.15f}")
    yield ("monogamy-threshold-3", abs(m3 - 4 / 3) < 1e-12, f"2^(N-1)/N = {m3:.15f}")

    bad = [name for name, spec in preset_catalog()
           if not validate(make_channel(spec)).trace_preserving]
    yield ("cptp-catalog", not bad, f"{len(preset_catalog())} presets trace preserving")

    rng = np.random.default_rng(seed)
    worst_sandwich = 0.0
    worst_var = 0.0
    worst_bd = 0.0
    for n_bases in (2, 3):
        for _ in range(200):
            weights = rng.dirichlet(np.ones(4))
            channel = make_channel({
                "kind": "pauli",
                "px": weights[0], "py": weights[1], "pz": weights[2],
            })
            table = metrics.fidelity_table(channel, n_bases)
            s = metrics.steering_parameter(table)
            q = metrics.qber(table)
            lower = metrics.qber_lower_bound(s, n_bases)
            f_min = table.f_min()
            worst_sandwich = max(worst_sandwich, lower - q)
            if f_min > 0:
                upper = metrics.qber_upper_bound(s, n_bases, f_min, 1.0)
                worst_sandwich = max(worst_sandwich, q - upper)
            worst_var = max(worst_var, metrics.variance_identity_residual(table))
            worst_bd = max(worst_bd, -metrics.bhatia_davis_slack(table))
    yield ("sandwich-random-pauli", worst_sandwich <= 1e-10,
           f"worst bound violation {worst_sandwich:.2e} over 400 channels")
    yield ("variance-identity", worst_var < 1e-12, f"worst residual {worst_var:.2e}")
    yield ("bhatia-davis", worst_bd <= 1e-12, f"worst negative slack {worst_bd:.2e}")

    worst_iso = 0.0
    for v in np.linspace(0.0, 1.0, 21):
        channel = make_channel({"kind": "depolarizing", "v": float(v)})
        for n_bases in (2, 3):
            table = metrics.fidelity_table(channel, n_bases)
            gap = abs(metrics.qber(table)
                      - metrics.qber_lower_bound(metrics.steering_parameter(table), n_bases))
            worst_iso = max(worst_iso, gap)
    yield ("isotropic-saturation", worst_iso < 1e-12, f"worst |QBER - bound| {worst_iso:.2e}")

    worst_est = 0.0
    for _name, spec in preset_catalog():
        channel = make_channel(spec)
        for n_bases in (2, 3):
            table = metrics.fidelity_table(channel, n_bases)
            cond, priors = metrics.channel_statistics(channel, n_bases)
            diff = abs(metrics.steering_parameter_from_statistics(cond, priors)
                       - metrics.steering_parameter(table))
            worst_est = max(worst_est, diff)
    yield ("estimator-agreement", worst_est < 1e-12, f"worst estimator gap {worst_est:.2e}")

    ucl = metrics.fidelity_table(make_channel({"kind": "universal_cloner"}), 3)
    s_ucl = metrics.steering_parameter(ucl)
    ok_ucl = (abs(metrics.qber(ucl) - 1 / 6) < 1e-10
              and abs(s_ucl - 4 / 3) < 1e-10
              and not metrics.security_verdict(s_ucl, 3).secure)
    yield ("universal-cloner-limit", ok_ucl,
           f"QBER = {metrics.qber(ucl):.12f}, S_3 = {s_ucl:.12f}, insecure")
    pcc = metrics.fidelity_table(make_channel({"kind": "phase_covariant"}), 2)
    s_pcc = metrics.steering_parameter(pcc)
    ok_pcc = (abs(metrics.qber(pcc) - q2) < 1e-10
              and abs(s_pcc - 1.0) < 1e-10
              and not metrics.security_verdict(s_pcc, 2).secure)
    yield ("phase-covariant-limit", ok_pcc,
           f"QBER = {metrics.qber(pcc):.12f}, S_2 = {s_pcc:.12f}, insecure")

    worst_sat = 0.0
    for n_bases in (2, 3):
        channel = make_channel({"kind": "intercept_resend", "bases": list(range(1, n_bases + 1))
                                if n_bases == 3 else [1, 3]})
        worst_sat = max(worst_sat,
                        abs(metrics.branch_resolved_steering(channel, n_bases) - 1.0))
    yield ("intercept-resend-saturation", worst_sat < 1e-10,
           f"worst |S_branch - 1| {worst_sat:.2e}")

    lhs_ok = True
    for n_bases in (2, 3):
        table = strategy_table(n_bases)
        for trial in range(2):
            states = []
            for _ in range(table.n_strategies):
                z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
                states.append(z @ z.conj().T)
            total = sum(np.trace(s).real for s in states)
            states = [s / total for s in states]
            weight = steerable_weight(lhs_assemblage(table, states), tol=sdp_tol)
            lhs_ok = lhs_ok and weight.w_t == 0.0
    yield ("lhs-weight-zero", lhs_ok, "hidden-state mixtures give w_t = 0")


def cmd_selftest(args) -> int:
    q2 = metrics.individual_attack_qber(2)
    q3 = metrics.individual_attack_qber(3)
    print("Threshold constants:")
    print(f"  q_2 (individual, BB84)      = {q2:.15f}")
    print(f"  q_3 (individual, B98)       = {q3:.15f}")
    print(f"  S-threshold N=2, N(1-2q)^2  = {metrics.s_threshold(2, q2):.15f}")
    print(f"  S-threshold N=3, N(1-2q)^2  = {metrics.s_threshold(3, q3):.15f}")
    print(f"  monogamy N=2, 2^(N-1)/N     = {metrics.monogamy_threshold(2):.15f}")
    print(f"  monogamy N=3, 2^(N-1)/N     = {metrics.monogamy_threshold(3):.15f}")
    failures = 0
    total = 0
    for name, passed, detail in _selftest_checks(args.seed, args.sdp_tol):
        total += 1
        if not passed:
            failures += 1
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    print(f"Self-test: {total - failures}/{total} passed")
    return EXIT_OK if failures == 0 else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tempsteer",
        description="Temporal steering of qubit channels: metrics, steerable "
                    "weight, MUB-QKD security verdicts, and seeded simulation.",
        epilog="Exit codes: 0 ok, 2 input error, 3 numerical failure, "
               "4 self-test failure. TEMPSTEER_SDP_TOL sets the default "
               "--sdp-tol.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sdp_tol = _default_sdp_tol()

    p = sub.add_parser("analyze", help="steering report for a channel spec")
    p.add_argument("--channel", required=True, help="channel spec JSON file")
    p.add_argument("--n", type=int, choices=(2, 3), required=True,
                   help="number of mutually unbiased bases")
    p.add_argument("--basis-pair", default="1,3",
                   help="Pauli bases for N=2, e.g. '1,3' (default)")
    p.add_argument("--mode", choices=("individual", "unconditional", "both"),
                   default="both")
    p.add_argument("--q-override", type=float, default=None,
                   help="QBER threshold for unconditional mode (default 0.1)")
    p.add_argument("--sdp-tol", type=float, default=sdp_tol)
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="run a Monte Carlo session")
    p.add_argument("--config", required=True, help="session config JSON file")
    p.add_argument("--rounds", type=int, default=None, help="override round count")
    p.add_argument("--seed", type=int, default=None, help="override RNG seed")
    p.add_argument("--q-override", type=float, default=None)
    p.add_argument("--sdp-tol", type=float, default=sdp_tol)
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.add_argument("--rounds-csv", default=None,
                   help="also write the per-round record CSV here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="grid over one channel parameter")
    p.add_argument("--channel", required=True, help="channel spec JSON template")
    p.add_argument("--param", required=True, help="parameter name to sweep")
    p.add_argument("--n", type=int, choices=(2, 3), required=True)
    p.add_argument("--values", default=None, help="comma-separated grid values")
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--stop", type=float, default=1.0)
    p.add_argument("--points", type=int, default=11)
    p.add_argument("--q-override", type=float, default=None)
    p.add_argument("--sdp-tol", type=float, default=sdp_tol)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("weight", help="steerable weight of an assemblage JSON")
    p.add_argument("--assemblage", required=True, help="assemblage JSON file")
    p.add_argument("--sdp-tol", type=float, default=sdp_tol)
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.add_argument("--dump-problem", default=None,
                   help="write the SDP problem+solution dump here for "
                        "cross-validation against external solvers")
    p.set_defaults(func=cmd_weight)

    p = sub.add_parser("selftest", help="run the invariant catalog")
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--sdp-tol", type=float, default=sdp_tol)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except json.JSONDecodeError as exc:
        print(f"input error: line {exc.lineno}, column {exc.colno}: {exc.msg}",
              file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValidationError, ChannelError, SchemaError, KeyError, TypeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
