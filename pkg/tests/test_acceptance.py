"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with ``pytest -s tests/test_acceptance.py`` to see the per-criterion
lines and timings. Tolerances are pinned here, not configurable.
"""
import csv
import json
import math
from contextlib import contextmanager
from pathlib import Path
from time import perf_counter

import numpy as np
import pytest

from tempsteer import cli
from tempsteer.assemblage import build_assemblage, lhs_assemblage, strategy_table
from tempsteer.channels import make_channel, preset_catalog
from tempsteer.metrics import (
    bhatia_davis_slack,
    branch_resolved_steering,
    fidelity_table,
    qber,
    qber_lower_bound,
    qber_upper_bound,
    steering_parameter,
    variance_identity_residual,
)
from tempsteer.sdp import build_weight_sdp, lmi_min_eigenvalues, solve, steerable_weight
from tempsteer.serialize import dump_json
from tempsteer.simulate import (
    SessionConfig,
    empirical_branch_steering,
    run_session,
    sift,
)

FIXTURE_PATH = Path(__file__).parent / "fixtures" / "reference_weights.json"
SQRT_HALF = 1 / math.sqrt(2)


@contextmanager
def criterion(name, budget_seconds):
    start = perf_counter()
    try:
        yield
    except BaseException:
        print(f"FAIL {name} ({perf_counter() - start:.2f}s)")
        raise
    elapsed = perf_counter() - start
    print(f"PASS {name} ({elapsed:.2f}s)")
    assert elapsed < budget_seconds, f"{name} blew its {budget_seconds}s budget"


def test_criterion_1_threshold_constants(capsys):
    with criterion("criterion-1 threshold constants via selftest", 1.0):
        assert cli.main(["selftest"]) == 0
        out = capsys.readouterr().out
        printed = {}
        for line in out.splitlines():
            if "=" in line and line.startswith("  "):
                label, value = line.rsplit("=", 1)
                printed[label.strip()] = float(value)
        assert abs(printed["q_2 (individual, BB84)"] - (1 - SQRT_HALF) / 2) < 1e-12
        assert abs(printed["q_3 (individual, B98)"] - 1 / 6) < 1e-12
        assert abs(printed["S-threshold N=2, N(1-2q)^2"] - 1.0) < 1e-12
        assert abs(printed["S-threshold N=3, N(1-2q)^2"] - 4 / 3) < 1e-12
        assert abs(printed["monogamy N=2, 2^(N-1)/N"] - 1.0) < 1e-12
        assert abs(printed["monogamy N=3, 2^(N-1)/N"] - 4 / 3) < 1e-12


def _analyze_via_cli(tmp_path, spec, n_bases):
    channel = tmp_path / "channel.json"
    out = tmp_path / "report.json"
    dump_json(spec, channel)
    assert cli.main(["analyze", "--channel", str(channel), "--n", str(n_bases),
                     "--out", str(out)]) == 0
    return json.loads(out.read_text())


def test_criterion_2_cloner_attacks(tmp_path, capsys):
    with capsys.disabled(), criterion("criterion-2 cloner attack reproduction", 1.0):
        report = _analyze_via_cli(tmp_path, {"kind": "universal_cloner"}, 3)
        assert abs(report["summary"]["qber"] - 1 / 6) < 1e-10
        assert abs(report["summary"]["s"] - 4 / 3) < 1e-10
        individual = [v for v in report["verdicts"] if v["mode"] == "individual"][0]
        assert individual["secure"] is False

        report = _analyze_via_cli(tmp_path, {"kind": "phase_covariant"}, 2)
        assert abs(report["summary"]["qber"] - (1 - SQRT_HALF) / 2) < 1e-10
        assert abs(report["summary"]["s"] - 1.0) < 1e-10
        individual = [v for v in report["verdicts"] if v["mode"] == "individual"][0]
        assert individual["secure"] is False


def test_criterion_3_classical_copying_saturation(capsys):
    with capsys.disabled(), criterion("criterion-3 classical copying saturation", 30.0):
        for protocol, n_bases, bases in (("BB84", 2, [1, 3]), ("B98", 3, [1, 2, 3])):
            spec = {"kind": "intercept_resend", "bases": bases}
            channel = make_channel(spec)
            assert abs(branch_resolved_steering(channel, n_bases) - 1.0) < 1e-10
            table = fidelity_table(channel, n_bases)
            assert abs(qber(table) - (n_bases - 1) / (2 * n_bases)) < 1e-12

            cfg = SessionConfig(protocol=protocol, channel=spec, rounds=100_000,
                                seed=20240811)
            result = run_session(cfg)
            sifted = sift(result.log)
            s_branch, sigma = empirical_branch_steering(sifted, cfg.bases)
            assert abs(s_branch - 1.0) < 3 * sigma
            q_true = (n_bases - 1) / (2 * n_bases)
            q_sigma = math.sqrt(q_true * (1 - q_true) / result.sifted_length)
            assert abs(result.qber_hat - q_true) < 3 * q_sigma


def test_criterion_4_sandwich_property(capsys):
    with capsys.disabled(), criterion("criterion-4 sandwich property", 10.0):
        rng = np.random.default_rng(42)
        for n_bases in (2, 3):
            for _ in range(1000):
                weights = rng.dirichlet(np.ones(4))
                channel = make_channel({
                    "kind": "pauli",
                    "px": weights[0], "py": weights[1], "pz": weights[2],
                })
                table = fidelity_table(channel, n_bases)
                s = steering_parameter(table)
                q = qber(table)
                assert qber_lower_bound(s, n_bases) <= q + 1e-10
                if table.f_min() > 0:
                    # Upper bound at the largest allowed fidelity M = 1.
                    assert q <= qber_upper_bound(s, n_bases, table.f_min(), 1.0) + 1e-10
                assert variance_identity_residual(table) < 1e-12
                assert bhatia_davis_slack(table) >= -1e-12


def test_criterion_5_isotropic_saturation(capsys):
    with capsys.disabled(), criterion("criterion-5 isotropic saturation", 1.0):
        for v in np.linspace(0.0, 1.0, 101):
            channel = make_channel({"kind": "depolarizing", "v": float(v)})
            for n_bases in (2, 3):
                table = fidelity_table(channel, n_bases)
                s = steering_parameter(table)
                assert abs(qber(table) - (1 - math.sqrt(s / n_bases)) / 2) < 1e-12


def test_criterion_6_weight_threshold_sweep(tmp_path, capsys):
    with capsys.disabled(), criterion("criterion-6 w_t threshold sweep", 60.0):
        channel = tmp_path / "depol.json"
        out = tmp_path / "sweep.csv"
        dump_json({"kind": "depolarizing", "v": 0.0}, channel)
        assert cli.main([
            "sweep", "--channel", str(channel), "--param", "v", "--n", "2",
            "--start", "0", "--stop", "1", "--points", "101", "--out", str(out),
        ]) == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 101
        fixtures = json.loads(FIXTURE_PATH.read_text())["fixtures"]
        identity_w = next(f["w_t"] for f in fixtures if f["name"] == "identity-n2")
        for row in rows:
            v = float(row["value"])
            w = float(row["w_t"])
            s = float(row["s"])
            if v <= SQRT_HALF - 1e-3:
                assert w <= 1e-6
            if v >= SQRT_HALF + 1e-2:
                assert w >= 1e-4
            if abs(v - SQRT_HALF) > 2e-3:
                assert (w > 0) == (s > 1.0)
            if v == 1.0:
                assert abs(w - identity_w) < 1e-6


def test_criterion_7_sdp_reference_fixtures(capsys):
    with capsys.disabled(), criterion("criterion-7 SDP reference fixtures", 60.0):
        fixtures = json.loads(FIXTURE_PATH.read_text())["fixtures"]
        assert len(fixtures) == 5
        for fixture in fixtures:
            asm = build_assemblage(
                make_channel(fixture["channel"]), fixture["n_bases"],
                bases=fixture["bases"],
            )
            problem = build_weight_sdp(asm)
            solution = solve(problem)
            assert solution.status == "optimal", fixture["name"]
            assert abs(solution.primal_value - fixture["primal_value"]) < 1e-6
            assert solution.gap <= 1e-8
            assert min(lmi_min_eigenvalues(problem, solution.rho_gamma)) > -5e-8
            for rho in solution.rho_gamma:
                eigs = np.linalg.eigvalsh(rho)
                assert eigs[0] > -5e-8

        rng = np.random.default_rng(7)
        for n_bases in (2, 3):
            table = strategy_table(n_bases)
            for _ in range(3):
                states = []
                for _g in range(table.n_strategies):
                    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
                    states.append(z @ z.conj().T)
                total = sum(np.trace(st).real for st in states)
                asm = lhs_assemblage(table, [st / total for st in states])
                weight = steerable_weight(asm)
                assert weight.w_t == 0.0
                assert abs(weight.w_raw) < 1e-6


def _haar_unitary(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def test_criterion_8_unitary_invariance(capsys):
    with capsys.disabled(), criterion("criterion-8 unitary invariance of w_t", 60.0):
        fixtures = json.loads(FIXTURE_PATH.read_text())["fixtures"]
        assemblages = [
            build_assemblage(make_channel(f["channel"]), f["n_bases"], bases=f["bases"])
            for f in fixtures
        ]
        rng = np.random.default_rng(20240811)
        worst = 0.0
        for asm in assemblages:
            base = steerable_weight(asm).w_t
            for _ in range(20):
                u = _haar_unitary(rng)
                rotated = steerable_weight(asm.conjugate(u)).w_t
                worst = max(worst, abs(base - rotated))
        assert worst <= 2e-7, f"worst unitary deviation {worst:.3e}"


def test_criterion_9_monte_carlo_convergence(capsys):
    with capsys.disabled(), criterion("criterion-9 Monte Carlo convergence", 60.0):
        for name, spec in preset_catalog():
            cfg = SessionConfig(protocol="B98", channel=spec, rounds=140_000,
                                seed=987654321)
            result = run_session(cfg)
            assert result.sifted_length >= 100_000, name
            truth = qber(fidelity_table(make_channel(spec), 3))
            sigma = math.sqrt(max(truth * (1 - truth), 1e-12) / result.sifted_length)
            assert abs(result.qber_hat - truth) < 3 * sigma + 1e-12, name

            again = run_session(cfg)
            assert again.qber_hat == result.qber_hat, name
            assert np.array_equal(again.log.outcome, result.log.outcome), name
            assert np.array_equal(again.log.branch_index, result.log.branch_index), name
            assert again.to_json() == result.to_json(), name
