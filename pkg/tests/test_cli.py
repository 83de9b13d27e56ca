"""Command-line interface: subcommands, schemas, exit codes, determinism."""
import csv
import json
import math

import numpy as np
import pytest

from tempsteer import cli, metrics
from tempsteer.assemblage import build_assemblage
from tempsteer.channels import make_channel
from tempsteer.sdp import steerable_weight
from tempsteer.serialize import dump_json


def write_channel(tmp_path, spec, name="channel.json"):
    path = tmp_path / name
    dump_json(spec, path)
    return str(path)


def run_cli(args):
    return cli.main(args)


class TestAnalyze:
    def test_universal_cloner_report(self, tmp_path, capsys):
        channel = write_channel(tmp_path, {"kind": "universal_cloner"})
        assert run_cli(["analyze", "--channel", channel, "--n", "3"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["summary"]["s"] == pytest.approx(4 / 3, abs=1e-10)
        assert payload["summary"]["qber"] == pytest.approx(1 / 6, abs=1e-10)
        individual = [v for v in payload["verdicts"] if v["mode"] == "individual"][0]
        assert not individual["secure"]
        assert payload["schema_version"] == 1

    def test_identity_secure_and_monogamous(self, tmp_path, capsys):
        channel = write_channel(tmp_path, {"kind": "identity"})
        assert run_cli(["analyze", "--channel", channel, "--n", "2"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["summary"]["s"] == pytest.approx(2.0, abs=1e-12)
        individual = [v for v in payload["verdicts"] if v["mode"] == "individual"][0]
        assert individual["secure"] and individual["monogamous"]

    def test_phase_damping_upper_bound_saturates(self, tmp_path, capsys):
        channel = write_channel(
            tmp_path, {"kind": "phase_damping", "p": 0.25, "axis": "z"}
        )
        assert run_cli(["analyze", "--channel", channel, "--n", "3"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["qber_upper_bound"] == pytest.approx(1 / 6, abs=1e-12)
        assert payload["summary"]["qber"] == pytest.approx(1 / 6, abs=1e-12)

    def test_output_file_byte_stable(self, tmp_path):
        channel = write_channel(tmp_path, {"kind": "depolarizing", "v": 0.8})
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        for out in (out1, out2):
            assert run_cli(["analyze", "--channel", channel, "--n", "2",
                            "--out", str(out)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_mode_filter(self, tmp_path, capsys):
        channel = write_channel(tmp_path, {"kind": "identity"})
        run_cli(["analyze", "--channel", channel, "--n", "2", "--mode", "individual"])
        payload = json.loads(capsys.readouterr().out)
        assert [v["mode"] for v in payload["verdicts"]] == ["individual"]

    def test_missing_file_exit_2(self, tmp_path, capsys):
        assert run_cli(["analyze", "--channel", str(tmp_path / "nope.json"),
                        "--n", "2"]) == 2

    def test_malformed_json_exit_2_with_location(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"kind": "identity",\n  broken\n}')
        assert run_cli(["analyze", "--channel", str(bad), "--n", "2"]) == 2
        err = capsys.readouterr().err
        assert "line 2" in err

    def test_unknown_kind_exit_2(self, tmp_path, capsys):
        channel = write_channel(tmp_path, {"kind": "wormhole"})
        assert run_cli(["analyze", "--channel", channel, "--n", "2"]) == 2

    def test_numerical_failure_exit_3(self, tmp_path, monkeypatch, capsys):
        from tempsteer.sdp import SolverError

        def explode(*_args, **_kw):
            raise SolverError("injected")

        monkeypatch.setattr("tempsteer.report.steerable_weight", explode)
        channel = write_channel(tmp_path, {"kind": "identity"})
        assert run_cli(["analyze", "--channel", channel, "--n", "2"]) == 3


class TestSimulate:
    def test_session_output(self, tmp_path, capsys):
        cfg = {
            "protocol": "BB84",
            "channel": {"kind": "depolarizing", "v": 0.8},
            "rounds": 40_000,
            "seed": 4242,
        }
        path = tmp_path / "session.json"
        dump_json(cfg, path)
        out = tmp_path / "result.json"
        rounds_csv = tmp_path / "rounds.csv"
        assert run_cli(["simulate", "--config", str(path), "--out", str(out),
                        "--rounds-csv", str(rounds_csv)]) == 0
        payload = json.loads(out.read_text())
        sigma = math.sqrt(0.09 / payload["sifted_length"])
        assert abs(payload["qber_hat"] - 0.1) < 3 * sigma
        assert payload["report"]["source"] == "simulation"
        assert payload["report"]["details"]["empirical_vs_analytic"]
        header = rounds_csv.read_text().splitlines()[0]
        assert header == "round,i,a,j,b,purpose,branch"

    def test_overrides_and_determinism(self, tmp_path):
        cfg = {
            "protocol": "B98",
            "channel": {"kind": "universal_cloner"},
            "rounds": 10,
            "seed": 1,
        }
        path = tmp_path / "session.json"
        dump_json(cfg, path)
        outs = []
        for name in ("r1.json", "r2.json"):
            out = tmp_path / name
            assert run_cli(["simulate", "--config", str(path), "--rounds", "30000",
                            "--seed", "777", "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_bad_config_exit_2(self, tmp_path, capsys):
        path = tmp_path / "session.json"
        dump_json({"protocol": "BB84"}, path)
        assert run_cli(["simulate", "--config", str(path)]) == 2


class TestSweep:
    def test_depolarizing_grid(self, tmp_path):
        channel = write_channel(tmp_path, {"kind": "depolarizing", "v": 0.0})
        out = tmp_path / "sweep.csv"
        assert run_cli([
            "sweep", "--channel", channel, "--param", "v", "--n", "2",
            "--start", "0", "--stop", "1", "--points", "11", "--out", str(out),
        ]) == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 11
        assert list(rows[0]) == cli.SWEEP_COLUMNS
        for row in rows:
            v = float(row["value"])
            assert float(row["s"]) == pytest.approx(2 * v * v, abs=1e-12)
        # w_t switches on between 0.7 and 0.8 (threshold 1/sqrt(2)).
        w = {round(float(r["value"]), 6): float(r["w_t"]) for r in rows}
        assert w[0.7] == 0.0
        assert w[0.8] > 1e-3
        secure = {round(float(r["value"]), 6): r["secure_individual"] for r in rows}
        assert secure[0.7] == "false" and secure[0.8] == "true"

    def test_values_list_and_json_format(self, tmp_path, capsys):
        channel = write_channel(tmp_path, {"kind": "depolarizing", "v": 0.0})
        assert run_cli([
            "sweep", "--channel", channel, "--param", "v", "--n", "3",
            "--values", "0.5,1", "--format", "json",
        ]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert [row["value"] for row in payload["rows"]] == [0.5, 1.0]
        assert payload["rows"][1]["s"] == pytest.approx(3.0, abs=1e-12)

    def test_worker_pool_preserves_order(self, tmp_path):
        channel = write_channel(tmp_path, {"kind": "depolarizing", "v": 0.0})
        out_seq = tmp_path / "seq.csv"
        out_par = tmp_path / "par.csv"
        args = ["sweep", "--channel", channel, "--param", "v", "--n", "2",
                "--points", "6"]
        assert run_cli(args + ["--out", str(out_seq)]) == 0
        assert run_cli(args + ["--out", str(out_par), "--jobs", "2"]) == 0
        assert out_seq.read_bytes() == out_par.read_bytes()

    def test_unknown_parameter_exit_2(self, tmp_path, capsys):
        channel = write_channel(tmp_path, {"kind": "depolarizing", "v": 0.0})
        assert run_cli(["sweep", "--channel", channel, "--param", "zeta",
                        "--n", "2"]) == 2
        assert "unknown sweep parameter" in capsys.readouterr().err


class TestWeight:
    def test_weight_matches_direct_call(self, tmp_path, capsys):
        asm = build_assemblage(make_channel({"kind": "depolarizing", "v": 0.9}), 2)
        path = tmp_path / "assemblage.json"
        dump_json(asm.to_json(), path)
        assert run_cli(["weight", "--assemblage", str(path)]) == 0
        payload = json.loads(capsys.readouterr().out)
        direct = steerable_weight(asm)
        assert payload["w_t"] == pytest.approx(direct.w_t, abs=1e-9)
        assert payload["solution"]["status"] == "optimal"

    def test_problem_dump(self, tmp_path, capsys):
        asm = build_assemblage(make_channel({"kind": "depolarizing", "v": 0.5}), 3)
        path = tmp_path / "assemblage.json"
        dump_json(asm.to_json(), path)
        dump = tmp_path / "problem.json"
        assert run_cli(["weight", "--assemblage", str(path),
                        "--dump-problem", str(dump)]) == 0
        doc = json.loads(dump.read_text())
        assert doc["problem"]["kind"] == "steerable_weight"
        assert len(doc["problem"]["members"]) == 6
        assert doc["solution"]["primal_value"] == pytest.approx(1.0, abs=1e-7)

    def test_inconsistent_assemblage_exit_2(self, tmp_path, capsys):
        asm = build_assemblage(make_channel({"kind": "identity"}), 2).to_json()
        asm["members"][0]["matrix"][0][0][0] = 0.9  # break consistency
        path = tmp_path / "assemblage.json"
        dump_json(asm, path)
        assert run_cli(["weight", "--assemblage", str(path)]) == 2


class TestSelftest:
    def test_passes(self, capsys):
        assert run_cli(["selftest"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert "q_2 (individual, BB84)      = 0.146446609406726" in out
        assert "q_3 (individual, B98)       = 0.166666666666667" in out

    def test_injected_fault_detected(self, capsys, monkeypatch):
        # Negative control: flip the sign inside the lower bound and the
        # sandwich check must fail.
        def flipped(s, n_bases):
            return (1 + math.sqrt(min(max(s, 0.0), n_bases) / n_bases)) / 2

        monkeypatch.setattr(metrics, "qber_lower_bound", flipped)
        assert run_cli(["selftest"]) == 4
        out = capsys.readouterr().out
        assert "FAIL sandwich-random-pauli" in out

    def test_env_var_sets_default_tolerance(self, monkeypatch, tmp_path, capsys):
        monkeypatch.setenv("TEMPSTEER_SDP_TOL", "1e-7")
        parser = cli.build_parser()
        args = parser.parse_args(["selftest"])
        assert args.sdp_tol == pytest.approx(1e-7)
