import csv
import json
import math

import numpy as np
import pytest

from sparseform import cli
from sparseform import experiments as ex
from sparseform.dyadic import Grid, read_stepfn
from sparseform.exceptions import ConfigError, ParameterError
from sparseform.sparse import read_family

SMALL = {"exponents": [1, "inf", 2, 2], "depth": 3, "samples": 3, "restarts": 2, "seed": 7}


def config(**kw):
    raw = dict(SMALL)
    raw.update(kw)
    return ex.ExperimentConfig.from_dict(raw)


class TestConfig:
    def test_defaults(self):
        c = ex.ExperimentConfig.from_dict({})
        assert c.depth == 6 and c.samples == 200 and c.generators == ("lognormal", "spike", "power")

    def test_exponent_dict_and_infinity(self):
        c = ex.ExperimentConfig.from_dict({"exponents": {"p0": 2, "q0": "inf", "p": 3, "q": 3}})
        assert c.exponents == (2.0, math.inf, 3.0, 3.0)

    @pytest.mark.parametrize("raw", [
        {"bogus": 1},
        {"exponents": [2, "inf", 2, 2]},
        {"exponents": [1, 2]},
        {"depth": 40},
        {"weights": {"generators": ["gamma"]}},
        {"family": {"density": 0}},
        {"suite": "T9"},
        {"format": "xml"},
        {"tol": 0},
    ])
    def test_rejected(self, raw):
        with pytest.raises(ConfigError):
            ex.ExperimentConfig.from_dict(raw)

    def test_load_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            ex.load_config(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            ex.load_config(bad)


class TestGenerators:
    def test_constant(self):
        np.testing.assert_array_equal(ex.gen_weights({"kind": "constant", "c": 1}, Grid(3)).values, 1.0)

    def test_spike(self):
        vals = ex.gen_weights({"kind": "spike", "base": 1, "height": 9, "position": 2}, Grid(2)).values
        np.testing.assert_array_equal(vals, [1, 1, 9, 1])

    def test_power_formula(self):
        L, a = 3, 1.7
        vals = ex.gen_weights({"kind": "power", "a": a}, Grid(L)).values
        np.testing.assert_allclose(vals, [((k + 0.5) * 2.0 ** -L) ** a for k in range(8)], rtol=1e-15)

    def test_lognormal_seeded(self):
        spec = {"kind": "lognormal", "mu": 0, "s": 1}
        a = ex.gen_weights(spec, Grid(4), 5).values
        assert np.array_equal(a, ex.gen_weights(spec, Grid(4), 5).values)
        assert not np.array_equal(a, ex.gen_weights(spec, Grid(4), 6).values)
        assert np.all(a > 0)

    def test_nonpositive_rejected(self):
        with pytest.raises(ParameterError):
            ex.gen_weights({"kind": "constant", "c": 0}, Grid(1))
        with pytest.raises(ParameterError):
            ex.gen_weights({"kind": "spike", "height": 2, "position": 9}, Grid(1))

    def test_samples_cross_generators(self):
        c = config(samples=9)
        kinds = {(ex.draw_sample(c, i).spec_a["kind"], ex.draw_sample(c, i).spec_b["kind"]) for i in range(9)}
        assert len(kinds) == 9


class TestReports:
    def test_float_format(self):
        assert ex.format_value(1.3) == "1.3"
        assert ex.format_value(0.1 + 0.2) == "0.30000000000000004"
        assert ex.format_value(np.float64(2.5)) == "2.5"
        assert ex.format_value(True) == "true" and ex.format_value(np.bool_(False)) == "false"

    def test_empty_csv_is_header_only(self, tmp_path):
        path = ex.emit_report([], "csv", tmp_path / "r.csv", columns=["a", "b"])
        assert path.read_text() == "a,b\n"

    def test_json_round_trip(self, tmp_path):
        rows = [{"x": 1.3, "ok": True, "n": 2}, {"x": math.pi, "ok": False, "n": 3}]
        path = ex.emit_report(rows, "json", tmp_path / "r.json", {"seed": 1})
        doc = ex.read_json_report(path)
        assert doc["schema"] == "sparseform-report/1" and doc["rows"] == rows

    def test_csv_values_round_trip(self, tmp_path):
        rows = [{"x": math.pi / 3, "y": 1e-300}]
        path = ex.emit_report(rows, "csv", tmp_path / "r.csv")
        back = list(csv.DictReader(path.open()))
        assert float(back[0]["x"]) == rows[0]["x"] and float(back[0]["y"]) == rows[0]["y"]

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ConfigError):
            ex.emit_report([], "xml", tmp_path / "r.xml")

    def test_schema_checked(self, tmp_path):
        p = tmp_path / "r.json"
        p.write_text(json.dumps({"schema": "other"}))
        with pytest.raises(ConfigError):
            ex.read_json_report(p)


class TestSuites:
    def test_trivial_setting_every_rhs_at_least_one(self):
        c = config(samples=1, weights={"generators": ["constant"]}, exponents=[2, 4, 3, 3])
        for suite in ("T1_2", "T1_3", "T1_4", "BUMP_ENTROPY", "BUMP_JOINT"):
            row = ex.verify_theorem(suite, c).rows[0]
            assert row["rhs"] >= 1 - 1e-12
            assert row["N"] > 0 and math.isfinite(row["rhs"])

    def test_t1_1_rows_and_checks(self):
        rep = ex.verify_theorem("T1_1", config())
        assert rep.violations == 0
        for r in rep.rows:
            assert r["ratio"] == (r["testing"] + r["testing_dual"]) / r["lambda_norm"]

    def test_ratios_reproduce(self):
        for suite in ("T1_2", "T1_3", "BUMP_JOINT"):
            for r in ex.verify_theorem(suite, config()).rows:
                assert r["ratio"] == pytest.approx(r["N"] / r["rhs"], rel=1e-12)

    def test_diagonal_required(self):
        with pytest.raises(ConfigError):
            ex.verify_theorem("T1_2", config(exponents=[1, "inf", 2, 3]))

    def test_stability_summary(self):
        rep = ex.verify_theorem("T1_2", config(depths=[2, 3]))
        assert set(rep.summary["C_star_by_depth"]) == {"2", "3"}
        assert isinstance(rep.summary["stable"], bool)

    def test_workers_do_not_change_rows(self):
        a = ex.verify_theorem("T1_2", config(samples=4))
        b = ex.verify_theorem("T1_2", config(samples=4, workers=2))
        assert a.rows == b.rows

    def test_bump_functions_must_be_integrable(self):
        c = config(young={"A": {"family": "power", "a": 2.0}}, exponents=[1, "inf", 2, 2])
        with pytest.raises(ConfigError):
            ex.verify_theorem("BUMP_JOINT", c)


class TestHunt:
    def test_monotone_and_deterministic(self):
        c = config(depth=3, hunt={"steps": 6, "restarts": 1})
        a = ex.hunt("ONE_SUP", c)
        best = [r["best_ratio"] for r in a.rows]
        assert best == sorted(best)
        for r in a.rows[1:]:
            assert r["accepted"] == (r["ratio"] > best[a.rows.index(r) - 1])
        b = ex.hunt("ONE_SUP", c)
        assert a.summary["best_ratio"] == b.summary["best_ratio"]

    def test_trivial_start_finite(self):
        c = config(depth=2, weights={"generators": ["constant"]}, hunt={"steps": 0})
        for which in ex.CONJECTURES:
            rep = ex.hunt(which, c)
            assert math.isfinite(rep.rows[0]["ratio"]) and rep.rows[0]["rhs"] > 0


class TestCli:
    def write(self, tmp_path, **kw):
        raw = dict(SMALL)
        raw.update(kw)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(raw))
        return str(path)

    @pytest.mark.parametrize("command", ["characteristics", "norm", "testing"])
    def test_sample_commands(self, tmp_path, command):
        out = tmp_path / "out"
        assert cli.run([command, "--config", self.write(tmp_path), "--out", str(out)]) == cli.EXIT_OK
        rows = list(csv.DictReader((out / f"{command}.csv").open()))
        assert len(rows) == 3

    def test_verify_both_formats(self, tmp_path, capsys):
        cfg = self.write(tmp_path, suite="T1_2", format="both")
        assert cli.run(["verify", "--config", cfg, "--out", str(tmp_path)]) == cli.EXIT_OK
        assert (tmp_path / "verify_T1_2.csv").exists()
        doc = ex.read_json_report(tmp_path / "verify_T1_2.json")
        assert doc["summary"]["violations"] == 0
        assert '"violations": 0' in capsys.readouterr().out

    def test_gen(self, tmp_path):
        out = tmp_path / "gen"
        assert cli.run(["gen", "--config", self.write(tmp_path), "--out", str(out), "--depth", "2"]) == 0
        w = read_stepfn(out / "sample0000_w.txt")
        assert w.grid.depth == 2
        assert read_family(out / "sample0001_family.txt").verified

    def test_hunt(self, tmp_path):
        cfg = self.write(tmp_path, depth=2, hunt={"steps": 2, "restarts": 1}, format="json")
        assert cli.run(["hunt", "--config", cfg, "--out", str(tmp_path)]) == cli.EXIT_OK
        assert "best_w" in ex.read_json_report(tmp_path / "hunt_ONE_SUP.json")["summary"]

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg = self.write(tmp_path, exponents=[3, "inf", 2, 2])
        assert cli.run(["norm", "--config", cfg, "--out", str(tmp_path)]) == cli.EXIT_CONFIG
        assert "configuration error" in capsys.readouterr().err

    def test_assertion_exit_code(self, tmp_path, monkeypatch):
        real = ex.summarize

        def failing(kind, rows):
            out = real(kind, rows)
            out["violations"] = 1
            return out

        monkeypatch.setattr(ex, "summarize", failing)
        cfg = self.write(tmp_path, suite="T1_2")
        assert cli.run(["verify", "--config", cfg, "--out", str(tmp_path)]) == cli.EXIT_ASSERTION

    def test_overrides(self, tmp_path):
        cfg = self.write(tmp_path)
        assert cli.run(["characteristics", "--config", cfg, "--out", str(tmp_path), "--seed", "3",
                        "--depth", "2", "--workers", "2"]) == 0
        rows = list(csv.DictReader((tmp_path / "characteristics.csv").open()))
        assert {r["depth"] for r in rows} == {"2"}

    def test_reports_byte_identical(self, tmp_path):
        cfg = self.write(tmp_path, suite="T1_1", format="both")
        for d in ("a", "b"):
            assert cli.run(["verify", "--config", cfg, "--out", str(tmp_path / d)]) == 0
        for name in ("verify_T1_1.csv", "verify_T1_1.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
