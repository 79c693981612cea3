import io
import math

import pytest

from bvfv import cli, harness, metrics
from bvfv.fv2d import CFLError
from bvfv.harness import ConfigError, ExperimentConfig

FAST = ((0.5, 0.25), (0.25, 0.125), (0.125, 0.0625))


@pytest.fixture(scope="module")
def smooth_rows():
    return harness.run_experiment(ExperimentConfig("ex1-linear", rows=FAST))


def test_presets_follow_tables():
    assert ExperimentConfig("ex1-linear").rows == harness.SMOOTH_ROWS
    assert ExperimentConfig("brick-step", mesh="staggered").rows[-1] == (6.25e-3, 6.25e-3)
    assert len(ExperimentConfig("ex3-nonlinear").rows) == 5


@pytest.mark.parametrize("kw", [
    dict(case="ex9"),
    dict(case="ex1-linear", mesh="voronoi"),
    dict(case="brick-step", mesh="cartesian"),
    dict(case="ex3-nonlinear", mesh="hexagonal"),
    dict(case="ex1-linear", rows=((0.25, 0.1), (0.5, 0.1))),
    dict(case="ex1-linear", rows=((0.25, 0.1), (0.25, 0.05))),
    dict(case="ex1-linear", rows=((0.25, -0.1),)),
    dict(case="ex1-linear", T=0.0),
])
def test_config_errors(kw):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kw)


def test_indivisible_h():
    with pytest.raises(ConfigError):
        harness.run_experiment(ExperimentConfig("ex1-linear", rows=((0.3, 0.01),)))


def test_cfl_error_carries_row():
    with pytest.raises(CFLError, match="row h=0.5"):
        harness.run_experiment(ExperimentConfig("ex1-linear", rows=((0.5, 5.0),)))


def test_rates_are_metric_rates(smooth_rows):
    rows = smooth_rows
    assert rows[0].l1_rate is None and rows[0].bv_rate is None
    for a, b in zip(rows, rows[1:]):
        assert b.bv_rate == metrics.rate(b.bv, a.bv, b.h, a.h)
        assert b.l1_rate == metrics.rate(b.l1, a.l1, b.h, a.h)


def test_first_row_error_matches_reference(smooth_rows):
    assert smooth_rows[0].l1 == pytest.approx(1.37e-1, rel=0.05)


def test_csv_roundtrip(tmp_path, smooth_rows):
    path = tmp_path / "t.csv"
    cfg = ExperimentConfig("ex1-linear", rows=FAST)
    harness.emit_csv(smooth_rows, path, harness.metadata(cfg))
    text = path.read_text().splitlines()
    data = [ln for ln in text if not ln.startswith("#")]
    assert len(data) == 1 + len(smooth_rows)
    assert data[0].split(",")[:len(harness.COLUMNS)] == list(harness.COLUMNS)
    first = dict(zip(data[0].split(","), data[1].split(",")))
    assert first["l1_rate"] == "-" and first["bv_rate"] == "-"
    assert first["h"] == "5.00e-01"
    meta, back = harness.read_csv(path)
    assert meta["case"] == "ex1-linear" and meta["seed"] == "0"
    for row, parsed in zip(smooth_rows, back):
        for c in ("h", "delta", "l1", "l2", "linf", "bv", "bv_st", "mass"):
            assert parsed[c] == getattr(row, c)
        assert parsed["cells"] == row.cells
    assert back[0]["bv_rate"] is None
    assert back[2]["bv_rate"] == metrics.rate(back[2]["bv"], back[1]["bv"], back[2]["h"],
                                              back[1]["h"])


def test_five_row_table(tmp_path):
    rows = harness.run_experiment(ExperimentConfig("ex1-linear"))
    harness.emit_csv(rows, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert len(lines) == 6


def test_single_row_has_no_rate_columns(tmp_path):
    rows = harness.run_experiment(ExperimentConfig("ex1-linear", rows=FAST[:1]))
    harness.emit_csv(rows, tmp_path / "one.csv")
    header = (tmp_path / "one.csv").read_text().splitlines()[0].split(",")
    assert not any("rate" in c for c in header)
    _, back = harness.read_csv(tmp_path / "one.csv")
    assert back[0]["bv_rate"] is None and back[0]["bv"] == rows[0].bv


def test_emit_empty_rejected(tmp_path):
    with pytest.raises(ValueError):
        harness.emit_csv([], tmp_path / "x.csv")


def test_output_bit_identical(tmp_path):
    cfg = ExperimentConfig("ex2-linear", mesh="perturbed_cartesian", rows=harness.STEP_ROWS[:3],
                           seed=4)
    paths = []
    for n in range(2):
        rows = harness.run_experiment(cfg)
        for r in rows:
            r.seconds = 0.0
        paths.append(tmp_path / f"{n}.csv")
        harness.emit_csv(rows, paths[-1], harness.metadata(cfg))
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_seed_recorded_and_used():
    a = harness.run_experiment(ExperimentConfig("ex1-linear", "perturbed_cartesian", FAST, seed=1))
    b = harness.run_experiment(ExperimentConfig("ex1-linear", "perturbed_cartesian", FAST, seed=2))
    assert a[-1].bv != b[-1].bv
    meta = harness.metadata(ExperimentConfig("ex1-linear", "perturbed_cartesian", seed=2))
    assert meta["seed"] == "2" and meta["theta"] == "0.25"


def test_no_exact_solution_leaves_errors_blank():
    rows = harness.run_experiment(ExperimentConfig("ex2-sinusoidal",
                                                   rows=harness.STEP_SINUSOIDAL_ROWS[:2]))
    assert rows[1].l1 is None and rows[1].l1_rate is None
    assert math.isfinite(rows[1].bv_rate)


def test_snapshot(tmp_path, smooth_rows):
    path = tmp_path / "snap.dat"
    harness.write_snapshot(smooth_rows[0].extra["final"], path)
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    assert len(lines) == smooth_rows[0].cells
    assert len(lines[0].split()) == 3


def run_cli(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), stdout=out)
    return code, out.getvalue()


def test_cli_list_cases():
    code, out = run_cli("list-cases")
    assert code == 0
    assert {ln.split()[0] for ln in out.splitlines()} == {
        "ex1-linear", "ex1-sinusoidal", "ex2-linear", "ex2-sinusoidal", "ex3-nonlinear",
        "brick-step"}


def test_cli_run_writes_csv(tmp_path):
    path = tmp_path / "out.csv"
    code, _ = run_cli("run", "--case", "ex1-linear", "--rows", "2", "--out", str(path))
    assert code == 0
    meta, rows = harness.read_csv(path)
    assert len(rows) == 2 and rows[1]["h"] == 0.25


def test_cli_rows_pairs_and_T():
    code, out = run_cli("run", "--case", "ex1-linear", "--rows", "0.5:0.1,0.25:0.05", "--T", "0.2")
    assert code == 0
    assert "1.00e-01" in out and "5.00e-02" in out


def test_cli_config_overrides_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# study\ncase = brick-step\nmesh = staggered\nrows = 0.1:0.1\n"
                   f"out = {tmp_path / 'd.csv'}\n")
    code, _ = run_cli("run", "--case", "ex1-linear", "--rows", "3", "--config", str(cfg))
    assert code == 0
    meta, rows = harness.read_csv(tmp_path / "d.csv")
    assert meta["case"] == "brick-step" and len(rows) == 1


@pytest.mark.parametrize("text", ["nonsense\n", "colour = red\n", "seed = many\n"])
def test_cli_bad_config(tmp_path, text, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    code, _ = run_cli("run", "--case", "ex1-linear", "--config", str(cfg))
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_cli_unsupported_combination(capsys):
    code, _ = run_cli("run", "--case", "brick-step", "--mesh", "hexagonal")
    assert code == 2
    assert "staggered" in capsys.readouterr().err


def test_cli_dump_mesh(tmp_path):
    from bvfv import mesh
    path = tmp_path / "m.txt"
    code, out = run_cli("dump-mesh", "--family", "triangular", "--h", "0.5", "--domain",
                        "0,1,0,1", "--out", str(path))
    assert code == 0 and "8 cells" in out
    assert mesh.load_mesh(path).n_cells == 8
