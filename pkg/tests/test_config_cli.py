import csv
import io

import numpy as np
import pytest

from matmart.cli import CSV_COLUMNS, main, run
from matmart.config import ExperimentConfig, format_generator, parse_config
from matmart.errors import ConfigError
from matmart.fixtures import state_scaled_chain

MINIMAL_BOUND = """
[experiment]
command = bound
seed = 7

[params]
x = 1.0
y = 1.0
c = 1.0
n = 1
d = 2
"""

TAIL_CFG = """
[experiment]
command = tail
trials = 4000
seed = 42
workers = {workers}

[params]
x = 0.47, 0.8
y = 1.0
c = 1.0
n = 6
d = 2

[generator]
kind = rademacher_series
dim = 2
horizon = 6
matrix = 1 0  0 -1
"""


def _rows(text):
    data = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(data))))


def _strip_wall(text):
    out = []
    for ln in text.splitlines():
        if ln.startswith("#") or ln.startswith("command"):
            out.append(ln)
        else:
            out.append(",".join(ln.split(",")[:-1]))
    return out


class TestParseConfig:
    def test_minimal_bound(self):
        cfg = parse_config(MINIMAL_BOUND)
        assert cfg.command == "bound"
        assert cfg.xs == (1.0,) and cfg.ys == (1.0,)
        assert len(cfg.grid_points()) == 1
        assert cfg.grid_points()[0].t == 0.5

    def test_tilt_window_violation_names_constraint(self):
        bad = MINIMAL_BOUND + "t = 1.5\n"
        with pytest.raises(ConfigError) as exc:
            parse_config(bad)
        assert any("0<ct<1" in e for e in exc.value.errors)

    def test_asymmetric_matrix_names_index(self):
        cfg = TAIL_CFG.format(workers=1).replace("matrix = 1 0  0 -1",
                                                 "matrix_1 = 1 0  0 -1\n"
                                                 "matrix_2 = 1 2  0 -1\n"
                                                 "matrix = 0.5 0  0 0.5")
        with pytest.raises(ConfigError) as exc:
            parse_config(cfg)
        assert any("matrix_2" in e and "symmetric" in e for e in exc.value.errors)

    def test_collects_all_errors(self):
        bad = """
[experiment]
command = tail
[params]
x = -1.0
y = oops
c = 1.0
n = 0
d = 2
mystery = 3
"""
        with pytest.raises(ConfigError) as exc:
            parse_config(bad)
        msgs = "\n".join(exc.value.errors)
        assert "params.x" in msgs           # semantic: negative
        assert "params.y" in msgs           # type error
        assert "params.n" in msgs           # range error
        assert "experiment.seed" in msgs    # missing seed
        assert "mystery" in msgs            # unknown key
        assert "generator" in msgs          # required section missing
        assert len(exc.value.errors) >= 6

    def test_syntax_errors_carry_line_numbers(self):
        bad = "[experiment]\ncommand = bound\nnot an assignment\n[weird]\nk = v\n"
        with pytest.raises(ConfigError) as exc:
            parse_config(bad)
        assert any("line 3" in e for e in exc.value.errors)
        assert any("line 4" in e for e in exc.value.errors)

    def test_duplicate_key(self):
        with pytest.raises(ConfigError) as exc:
            parse_config(MINIMAL_BOUND + "x = 2.0\n")
        assert any("duplicate" in e for e in exc.value.errors)

    def test_dim_mismatch_checked(self):
        cfg = TAIL_CFG.format(workers=1).replace("d = 2", "d = 3")
        with pytest.raises(ConfigError) as exc:
            parse_config(cfg)
        assert any("params.d" in e for e in exc.value.errors)

    def test_horizon_bound_checked(self):
        cfg = TAIL_CFG.format(workers=1).replace("\nn = 6\n", "\nn = 60\n")
        with pytest.raises(ConfigError) as exc:
            parse_config(cfg)
        assert any("params.n" in e for e in exc.value.errors)

    def test_generator_roundtrip(self):
        spec = state_scaled_chain(d=2, horizon=4)
        text = ("[experiment]\ncommand = simulate\ntrials = 3\nseed = 1\n"
                + format_generator(spec))
        cfg = parse_config(text)
        assert cfg.generator.kind == spec.kind
        assert cfg.generator.s_hi == spec.s_hi
        for a, b in zip(cfg.generator.base_matrices, spec.base_matrices):
            np.testing.assert_array_equal(a.entries, b.entries)


class TestRun:
    def test_bound_grid_rows(self, tmp_path):
        text = MINIMAL_BOUND.replace("x = 1.0", "x = 0.5, 1.0").replace(
            "y = 1.0", "y = 1.0, 2.0")
        cfg = parse_config(text)
        out = tmp_path / "bound.csv"
        cfg = ExperimentConfig(**{**cfg.__dict__, "output_path": str(out)})
        status, rows = run(cfg, config_text=text, out_stream=io.StringIO())
        assert status == 0
        parsed = _rows(out.read_text())
        assert len(parsed) == 4
        for row in parsed:
            assert row["hits"] == "" and row["p_hat"] == "" and row["se"] == ""
            assert float(row["bound_product"]) <= float(row["bound_exp"]) * (1 + 1e-12)

    def test_csv_floats_roundtrip(self, tmp_path):
        text = TAIL_CFG.format(workers=1)
        cfg = parse_config(text)
        out = tmp_path / "tail.csv"
        cfg = ExperimentConfig(**{**cfg.__dict__, "output_path": str(out)})
        status, rows = run(cfg, config_text=text, out_stream=io.StringIO())
        assert status == 0
        parsed = _rows(out.read_text())
        assert len(parsed) == 2
        for written, row_obj in zip(parsed, rows):
            # text -> float recovers the exact binary value
            assert float(written["p_hat"]) == row_obj.cells["p_hat"]
            assert float(written["bound_product"]) == row_obj.cells["bound_product"]
            assert float(written["se"]) == row_obj.cells["se"]

    def test_schema_columns_exact(self, tmp_path):
        text = TAIL_CFG.format(workers=1)
        cfg = parse_config(text)
        out = tmp_path / "t.csv"
        cfg = ExperimentConfig(**{**cfg.__dict__, "output_path": str(out)})
        run(cfg, config_text=text, out_stream=io.StringIO())
        header = [ln for ln in out.read_text().splitlines()
                  if not ln.startswith("#")][0]
        assert header == ",".join(CSV_COLUMNS)
        assert header == ("command,d,n,x,y,c,t,trials,hits,p_hat,se,"
                          "bound_product,bound_exp,seed,wall_ms")

    def test_worker_count_invariance(self, tmp_path):
        outputs = []
        for workers in (1, 3):
            text = TAIL_CFG.format(workers=workers)
            cfg = parse_config(text)
            out = tmp_path / f"w{workers}.csv"
            cfg = ExperimentConfig(**{**cfg.__dict__, "output_path": str(out)})
            run(cfg, config_text=TAIL_CFG.format(workers=1),
                out_stream=io.StringIO())
            outputs.append(_strip_wall(out.read_text()))
        assert outputs[0] == outputs[1]

    def test_repeat_run_identical(self, tmp_path):
        text = TAIL_CFG.format(workers=2)
        snaps = []
        for tag in ("a", "b"):
            cfg = parse_config(text)
            out = tmp_path / f"{tag}.csv"
            cfg = ExperimentConfig(**{**cfg.__dict__, "output_path": str(out)})
            run(cfg, config_text=text, out_stream=io.StringIO())
            snaps.append(_strip_wall(out.read_text()))
        assert snaps[0] == snaps[1]

    def test_lemmas_row_layout(self, tmp_path):
        text = "[experiment]\ncommand = lemmas\ntrials = 300\nseed = 5\n[params]\nd = 3\n"
        cfg = parse_config(text)
        out = tmp_path / "lemmas.csv"
        cfg = ExperimentConfig(**{**cfg.__dict__, "output_path": str(out)})
        status, _ = run(cfg, config_text=text, out_stream=io.StringIO())
        assert status == 0
        content = out.read_text()
        assert "hits and" in content and "violation count" in content  # header note
        parsed = _rows(content)
        assert len(parsed) == 4
        for row in parsed:
            assert row["hits"] == "0"              # violations land in hits
            assert float(row["p_hat"]) < 0.0       # worst slack in p_hat

    def test_failing_condition_sets_exit_status(self, tmp_path):
        text = """
[experiment]
command = check-condition
seed = 1
[params]
c = 0.5
p_max = 6
[generator]
kind = rademacher_series
dim = 2
horizon = 1
matrix = 2 0  0 2
"""
        cfg = parse_config(text)
        status, rows = run(cfg, config_text=text, out_stream=io.StringIO())
        assert status == 1
        assert rows[0].passed is False
        assert rows[0].cells["hits"] >= 1

    def test_union_tail_is_informational(self):
        text = TAIL_CFG.format(workers=1).replace("command = tail",
                                                  "command = union-tail")
        cfg = parse_config(text)
        status, rows = run(cfg, config_text=text, out_stream=io.StringIO())
        assert status == 0
        assert all(row.passed is None for row in rows)


class TestMain:
    def test_cli_end_to_end(self, tmp_path, capsys):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(TAIL_CFG.format(workers=1))
        out_path = tmp_path / "r.csv"
        status = main(["tail", "--config", str(cfg_path), "--out", str(out_path)])
        assert status == 0
        assert out_path.exists()
        assert "PASS" in capsys.readouterr().out

    def test_command_mismatch(self, tmp_path, capsys):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(TAIL_CFG.format(workers=1))
        assert main(["bound", "--config", str(cfg_path)]) == 2
        assert "declares command" in capsys.readouterr().err

    def test_invalid_config_lists_errors(self, tmp_path, capsys):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text("[experiment]\ncommand = tail\n")
        assert main(["tail", "--config", str(cfg_path)]) == 2
        err = capsys.readouterr().err
        assert "experiment.seed" in err

    def test_seed_override_changes_digest_not_schema(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(TAIL_CFG.format(workers=1))
        out1 = tmp_path / "s1.csv"
        out2 = tmp_path / "s2.csv"
        assert main(["tail", "--config", str(cfg_path), "--out", str(out1)]) == 0
        assert main(["tail", "--config", str(cfg_path), "--out", str(out2),
                     "--seed", "43"]) == 0
        rows1, rows2 = _rows(out1.read_text()), _rows(out2.read_text())
        assert rows1[0]["seed"] == "42" and rows2[0]["seed"] == "43"
