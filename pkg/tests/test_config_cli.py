import numpy as np
import pytest

from mmsqp import cli
from mmsqp.config import ConfigError, load_config, parse_config_text
from mmsqp.diagnostics import kkt_residual
from mmsqp.poly import parse_polynomial
from mmsqp.problems import get_builtin
from mmsqp.sets import Box, Simplex, WholeSpace

MINIMAL = """
dimension = 2
objective = x1^2 + x2^2
method = gradproj
x0 = 1, 1
"""

HALFLINE_CONFIG = """
# the linear-over-halfline builtin, spelled out by hand
name = linear-over-halfline
dimension = 1
objective = x1
constraint.1 = -x1
q_set = wholespace
trust_box = -2, 2
lipschitz.objective = 1
lipschitz.constraint.1 = 1
method = mb
x0 = 1
"""


class TestParseConfig:
    def test_minimal_config_auto_lipschitz(self):
        cfg, problem = parse_config_text(MINIMAL)
        assert cfg.method == "gradproj"
        assert problem.dimension == 2
        assert problem.objective.lipschitz_grad == 2.0  # Hessian of the square sum
        assert np.array_equal(cfg.x0, [1.0, 1.0])

    def test_bad_exponent_cites_key_and_offset(self):
        text = MINIMAL.replace("x1^2 + x2^2", "x1^-1")
        with pytest.raises(ConfigError) as err:
            parse_config_text(text)
        msg = str(err.value)
        assert "objective" in msg
        assert "offset" in msg
        assert "negative" in msg

    def test_matches_builtin_field_by_field(self):
        cfg, problem = parse_config_text(HALFLINE_CONFIG)
        bp = get_builtin("linear-over-halfline")
        ref = bp.build()
        assert cfg.name == bp.name
        assert problem.dimension == bp.dimension
        assert problem.objective.poly == ref.objective.poly
        assert problem.objective.lipschitz_grad == ref.objective.lipschitz_grad
        assert len(problem.constraints) == len(ref.constraints)
        for got, want in zip(problem.constraints, ref.constraints):
            assert got.poly == want.poly
            assert got.lipschitz_grad == want.lipschitz_grad
        assert isinstance(problem.simple_set, WholeSpace)
        assert np.array_equal(cfg.x0, bp.x0)

    def test_missing_required_key(self):
        with pytest.raises(ConfigError) as err:
            parse_config_text("dimension = 1\nmethod = mb\nx0 = 0\n")
        assert "objective" in str(err.value)

    def test_unknown_key_cites_line(self):
        with pytest.raises(ConfigError) as err:
            parse_config_text(MINIMAL + "wat = 3\n")
        assert "unknown key" in str(err.value)

    def test_x0_dimension_mismatch(self):
        with pytest.raises(ConfigError):
            parse_config_text(MINIMAL.replace("x0 = 1, 1", "x0 = 1"))

    def test_constraint_numbering_must_be_contiguous(self):
        text = MINIMAL + "constraint.2 = x1 - 1\n"
        with pytest.raises(ConfigError) as err:
            parse_config_text(text)
        assert "numbered" in str(err.value)

    def test_q_set_variants(self):
        text = MINIMAL.replace("method = gradproj", "method = gradproj\nq_set = box\nq_params = 0, 1")
        _, problem = parse_config_text(text)
        assert isinstance(problem.simple_set, Box)
        text = MINIMAL.replace("method = gradproj", "method = gradproj\nq_set = simplex\nq_params = 1")
        _, problem = parse_config_text(text)
        assert isinstance(problem.simple_set, Simplex)

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError) as err:
            parse_config_text(MINIMAL + "x0 = 2, 2\n")
        assert "duplicate" in str(err.value)


class TestCliRun:
    def test_builtin_quadratic_gradproj_exit_zero(self, tmp_path):
        code = cli.main(["run", "quadratic-2d", "--method", "gradproj",
                         "--out", str(tmp_path), "--no-figures"])
        assert code == 0
        csv = (tmp_path / "quadratic-2d_gradproj_trace.csv").read_text().strip().splitlines()
        assert csv[0].startswith("k,merit,f,F,step_norm,beta,")
        # one moving step plus the confirming zero step
        assert len(csv) - 1 == 2

    def test_linear_objective_exit_two(self, tmp_path):
        code = cli.main(["run", "diverging-linear", "--method", "gradproj",
                         "--out", str(tmp_path), "--no-figures"])
        assert code == 2

    def test_mfqc_violation_exit_four_and_named(self, tmp_path, capsys):
        code = cli.main(["run", "mfqc-violating-line", "--method", "mb",
                         "--out", str(tmp_path), "--no-figures"])
        assert code == 4
        summary = (tmp_path / "mfqc-violating-line_mb_summary.txt").read_text()
        assert "MFQC" in summary or "Mangasarian" in summary

    def test_config_file_run(self, tmp_path):
        cfg = tmp_path / "halfline.cfg"
        cfg.write_text(HALFLINE_CONFIG, encoding="utf-8")
        code = cli.main(["run", str(cfg), "--out", str(tmp_path), "--no-figures"])
        assert code == 0
        summary = (tmp_path / "linear-over-halfline_mb_summary.txt").read_text()
        assert "status = converged" in summary

    def test_bad_config_exit_one(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("dimension = 1\nobjective = x1^-1\nmethod = mb\nx0 = 1\n", encoding="utf-8")
        assert cli.main(["run", str(cfg), "--out", str(tmp_path)]) == 1
        assert "objective" in capsys.readouterr().err

    def test_missing_file_exit_one(self, tmp_path, capsys):
        assert cli.main(["run", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)]) == 1

    def test_method_not_applicable_exit_one(self, tmp_path, capsys):
        # the ball-constrained driver rejects an infeasible start
        assert cli.main(["run", "infeasible-start-quadratic", "--method", "mb",
                         "--out", str(tmp_path)]) == 1

    def test_figures_rendered_by_default(self, tmp_path):
        code = cli.main(["run", "quadratic-2d", "--method", "gradproj", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "quadratic-2d_gradproj_convergence.png").stat().st_size > 0

    def test_out_dir_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MMP_NLP_OUT", str(tmp_path / "envout"))
        code = cli.main(["run", "quadratic-2d", "--method", "gradproj", "--no-figures"])
        assert code == 0
        assert (tmp_path / "envout" / "quadratic-2d_gradproj_trace.csv").exists()


class TestCliList:
    def test_list_mentions_every_builtin(self, capsys):
        assert cli.main(["list"]) == 0
        out = capsys.readouterr().out
        for name in ("quadratic-2d", "linear-over-halfline", "mfqc-violating-line"):
            assert name in out
        # dimension column matches the stored problem
        for line in out.splitlines()[2:]:
            name = line.split()[0]
            assert int(line.split()[1]) == get_builtin(name).dimension


class TestSummaryConsistency:
    def test_summary_kkt_equals_recomputed(self, tmp_path):
        bp = get_builtin("disk-linear")
        code = cli.main(["run", "disk-linear", "--method", "mb", "--out", str(tmp_path), "--no-figures"])
        assert code == 0
        summary = (tmp_path / "disk-linear_mb_summary.txt").read_text()
        fields = dict(line.split(" = ", 1) for line in summary.strip().splitlines())
        x = np.array([float(v) for v in fields["final_x"].split()])
        lam = np.array([float(v) for v in fields["multipliers"].split()])
        rep = kkt_residual(bp.build(), x, lam)
        assert abs(rep.stationarity - float(fields["kkt_stationarity"])) <= 1e-12
        assert abs(rep.feasibility - float(fields["kkt_feasibility"])) <= 1e-12
        assert abs(rep.complementarity - float(fields["kkt_complementarity"])) <= 1e-12

    def test_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert cli.main(["run", "corner-quadratic", "--method", "esqm", "--out", str(a), "--no-figures"]) == 0
        assert cli.main(["run", "corner-quadratic", "--method", "esqm", "--out", str(b), "--no-figures"]) == 0
        name = "corner-quadratic_esqm_trace.csv"
        assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_threaded_suite_matches_sequential(self, tmp_path):
        a, b = tmp_path / "seq", tmp_path / "par"
        assert cli.main(["suite", "--out", str(a), "--no-figures"]) == 0
        assert cli.main(["suite", "--out", str(b), "--no-figures", "--jobs", "4"]) == 0
        for pa in sorted(a.glob("*.csv")):
            assert (b / pa.name).read_bytes() == pa.read_bytes(), pa.name
