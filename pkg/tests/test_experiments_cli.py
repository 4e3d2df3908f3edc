import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

import becbox.cli as cli
from becbox import experiments as ex
from becbox.config import ConfigError, ExperimentConfig, parse_config_text
from becbox.continuum import HypothesisError

MINI_CONVERGE = """
kind = converge
dim = 1
beta = 1.0
family = affine:a=0,b=1
f = dipole:c=0,s=1,a=0.75
L_start = 8
L_factor = 2
L_steps = 2
h = 0.125
cutoff = 40
p_spacing = 0.05
quad_points = 1024
zero_wall_time = true
seed = 7
"""


class TestConfig:
    def test_defaults_validate(self):
        ExperimentConfig().validate()

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config_text("bogus = 1")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("h = 0.5\nh = 0.25")

    def test_h_must_divide_L(self):
        with pytest.raises(ConfigError, match="does not divide"):
            parse_config_text("L_start = 8\nh = 0.3")

    def test_L_schedule_increasing(self):
        with pytest.raises(ConfigError, match="increasing"):
            parse_config_text("L_list = 8,4\nh = 0.5")

    def test_L_list_overrides_schedule(self):
        cfg = parse_config_text("L_list = 4,6,8\nh = 0.125")
        assert cfg.lengths() == [4.0, 6.0, 8.0]

    def test_bool_and_comments(self):
        cfg = parse_config_text("# comment\nzero_wall_time = yes\nsvg = off\n")
        assert cfg.zero_wall_time is True
        assert cfg.svg is False

    def test_krein_z_negative(self):
        with pytest.raises(ConfigError, match="negative"):
            parse_config_text("krein_z = -1,0.5")

    def test_beta_positive(self):
        with pytest.raises(ConfigError, match="beta"):
            parse_config_text("beta = -2")

    def test_bad_value_type(self):
        with pytest.raises(ConfigError, match="bad value"):
            parse_config_text("L_steps = few")


@pytest.fixture(scope="module")
def mini_report():
    return ex.run_converge_sweep(parse_config_text(MINI_CONVERGE))


class TestConvergeSweep:
    def test_rhs_constant_across_rows(self, mini_report):
        assert len({r.rhs for r in mini_report.rows}) == 1

    def test_condensate_column_constant(self, mini_report):
        # the overlap sums only see supp f, and the node lattice is shared
        vals = [r.condensate_term for r in mini_report.rows]
        assert abs(vals[1] - vals[0]) <= 1e-13 * abs(vals[0])

    def test_split_identity_on_every_row(self, mini_report):
        assert max(r.split_agreement for r in mini_report.rows) <= 1e-12

    def test_rel_err_decreases(self, mini_report):
        errs = [r.rel_err for r in mini_report.rows]
        assert errs[1] < errs[0]

    def test_richardson_rows(self):
        cfg = parse_config_text(MINI_CONVERGE + "h_richardson = 0.0625\n")
        report = ex.run_converge_sweep(cfg)
        assert report.rows_richardson is not None
        # extrapolation removes the h^2 bias: (4 v2 - v1) / 3
        for a, b, r in zip(report.rows, report.rows_fine, report.rows_richardson):
            expected = (4 * b.lhs - a.lhs) / 3
            assert r.lhs == pytest.approx(expected, rel=1e-12)

    def test_support_must_fit_smallest_box(self):
        cfg = parse_config_text(MINI_CONVERGE.replace("L_start = 8", "L_start = 2"))
        with pytest.raises(HypothesisError, match="support"):
            ex.run_converge_sweep(cfg)

    def test_nonzero_mean_rejected_d1(self):
        cfg = parse_config_text(MINI_CONVERGE.replace(
            "f = dipole:c=0,s=1,a=0.75", "f = bump:c=0,a=0.75"))
        with pytest.raises(HypothesisError):
            ex.run_converge_sweep(cfg)


class TestEmission:
    def test_csv_header_and_determinism(self, tmp_path, mini_report):
        paths = ex.emit_converge(mini_report, str(tmp_path), "a")
        csv_path = tmp_path / "a.csv"
        first = csv_path.read_bytes()
        header = first.decode().splitlines()[0]
        assert header == ("L,N,h,lhs_re,lhs_im,rhs_re,rhs_im,abs_err,rel_err,"
                          "green_term,regular_term,condensate_term,wall_time_s")
        # a fresh computation of the same config emits byte-identical files
        report2 = ex.run_converge_sweep(parse_config_text(MINI_CONVERGE))
        ex.emit_converge(report2, str(tmp_path), "b")
        assert (tmp_path / "b.csv").read_bytes() == first
        # re-emission of the unchanged report is also byte-identical
        ex.emit_converge(mini_report, str(tmp_path), "c")
        assert (tmp_path / "c.csv").read_bytes() == first
        assert str(csv_path) in paths

    def test_json_summary(self, tmp_path, mini_report):
        ex.emit_converge(mini_report, str(tmp_path), "s")
        doc = json.loads((tmp_path / "s.json").read_text())
        assert doc["rows"] == 2
        assert doc["strictly_decreasing"] is True
        assert len(doc["input_hash"]) == 40
        assert doc["config"]["family"] == "affine:a=0,b=1"

    def test_svg_well_formed(self, tmp_path, mini_report):
        ex.emit_converge(mini_report, str(tmp_path), "p")
        tree = ET.parse(tmp_path / "p.svg")
        polylines = tree.getroot().findall(
            ".//{http://www.w3.org/2000/svg}polyline")
        assert len(polylines) == 1  # one series, one polyline

    def test_float_formatting(self):
        from becbox.reports import format_float
        assert format_float(0.125) == "1.2500000000000000e-01"
        assert len(format_float(np.pi).split("e")[0].replace("-", "").replace(".", "")) == 17


class TestSrsSweep:
    def test_mini_run(self):
        cfg = parse_config_text(
            "kind = srs\nu = bump:c=1,a=1\nfamily = affine:a=0,b=1\n"
            "L_start = 8\nL_factor = 2\nL_steps = 2\nh = 0.125\nwindow_margin = 1\n"
            "zero_wall_time = true\n")
        report = ex.run_srs_sweep(cfg)
        assert len(report.rows) == 2
        assert report.rows[1].err < report.rows[0].err
        assert report.all_decreasing()

    def test_zero_input(self):
        cfg = parse_config_text(
            "kind = srs\nu = bump:c=0,a=1,amp=0\nfamily =\n"
            "L_start = 8\nL_steps = 2\nh = 0.25\n")
        report = ex.run_srs_sweep(cfg)
        assert all(r.err == 0.0 for r in report.rows)

    def test_empty_family_behaves_the_same(self):
        # the convergence statement does not depend on the chosen extensions
        base = ("kind = srs\nu = bump:c=1,a=1\nL_start = 8\nL_factor = 2\n"
                "L_steps = 2\nh = 0.125\nwindow_margin = 1\n")
        with_family = ex.run_srs_sweep(parse_config_text(base + "family = affine:a=0,b=1\n"))
        without = ex.run_srs_sweep(parse_config_text(base + "family =\n"))
        for rep in (with_family, without):
            assert rep.all_decreasing()
            assert rep.rows[1].err < rep.rows[0].err

    def test_emit(self, tmp_path):
        cfg = parse_config_text(
            "kind = srs\nL_start = 8\nL_steps = 2\nh = 0.25\nzero_wall_time = true\n")
        report = ex.run_srs_sweep(cfg)
        ex.emit_srs(report, str(tmp_path), "s")
        lines = (tmp_path / "s_srs.csv").read_text().splitlines()
        assert lines[0] == "L,N,h,err,decreasing,wall_time_s"
        assert len(lines) == 3


class TestWickDemo:
    def test_cross_check(self):
        cfg = parse_config_text("kind = wick\nwick_n = 3\nL_start = 4\nh = 0.0625\n")
        payload = ex.run_wick_demo(cfg)
        assert payload["cross_check_rel"] <= 1e-13
        assert payload["n"] == 3

    def test_n_limit(self):
        cfg = parse_config_text("kind = wick\nwick_n = 13\nL_start = 4\nh = 0.0625\n")
        with pytest.raises(ConfigError, match="wick_n"):
            ex.run_wick_demo(cfg)


class TestVerifySuite:
    def test_empty_family_all_pass_with_equality_residuals(self):
        cfg = parse_config_text("kind = verify\nfamily =\nL_start = 8\nh = 0.0625\n")
        checks = ex.run_verify_suite(cfg)
        assert all(c.passed for c in checks)
        for c in checks:
            if c.name in ("krein_identity", "domain_decomposition", "eigenvalue_ordering"):
                assert max(c.residuals.values()) <= 1e-13


class TestCli:
    def test_verify_default_passes(self, tmp_path, capsys):
        rc = cli.main(["verify", "--out", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "[PASS] krein_identity" in out
        doc = json.loads((tmp_path / "run_checks.json").read_text())
        assert doc["pass"] is True

    def test_config_error_exit_2(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("mystery = 3\n")
        assert cli.main(["converge", "--config", str(bad)]) == 2

    def test_hypothesis_violation_exit_3(self, tmp_path):
        cfg = tmp_path / "h.cfg"
        cfg.write_text("kind = converge\nf = bump:c=0,a=0.75\n"
                       "L_start = 8\nL_steps = 2\nh = 0.125\n"
                       "cutoff = 20\np_spacing = 0.1\nquad_points = 512\n")
        assert cli.main(["converge", "--config", str(cfg), "--out", str(tmp_path)]) == 3

    def test_check_failure_exit_1(self, tmp_path, monkeypatch):
        from becbox.verification import CheckReport

        def fake_suite(cfg):
            return [CheckReport("forced", {"r": 1.0}, {"r": 1e-10})]

        monkeypatch.setattr(ex, "run_verify_suite", fake_suite)
        assert cli.main(["verify", "--out", str(tmp_path)]) == 1

    def test_converge_cli_end_to_end(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(MINI_CONVERGE)
        rc = cli.main(["converge", "--config", str(cfg), "--out", str(tmp_path),
                       "--label", "cc"])
        assert rc == 0
        assert (tmp_path / "cc.csv").exists()
        assert (tmp_path / "cc.json").exists()

    def test_fourier_dump(self, tmp_path):
        cfg = tmp_path / "f.cfg"
        cfg.write_text("kind = fourier\nf = dipole:c=0,s=1,a=0.75\n"
                       "cutoff = 10\np_spacing = 0.1\nquad_points = 512\n")
        rc = cli.main(["fourier-dump", "--config", str(cfg), "--out", str(tmp_path)])
        assert rc == 0
        lines = (tmp_path / "run_fourier.csv").read_text().splitlines()
        assert lines[0] == "p,re,im"
        doc = json.loads((tmp_path / "run_fourier.json").read_text())
        assert abs(doc["value_at_zero_re"]) <= 1e-14

    def test_seed_and_mode_overrides(self, tmp_path):
        rc = cli.main(["verify", "--out", str(tmp_path), "--seed", "99",
                       "--mode", "fd", "--label", "v2"])
        assert rc == 0
        doc = json.loads((tmp_path / "v2_checks.json").read_text())
        assert doc["config"]["seed"] == 99
