import logging
from pathlib import Path

import pytest

from src.config.settings import Settings
from src.domain.errors import FitError, InfeasibleError, NotFoundError, StoreError, ToolkitError, ValidationError
from src.link.codec import read_code
from src.platforms.cli.commands import (
    EXIT_FAILURE,
    EXIT_INFEASIBLE,
    EXIT_IO,
    EXIT_OK,
    EXIT_USAGE,
    dispatch,
    exit_code_for,
    join_negative_values,
)
from src.services.tradeoff import parse_model


@pytest.fixture
def settings(tmp_path: Path) -> Settings:
    return Settings(
        env="test",
        log_level="INFO",
        threads=1,
        quadrature_order=64,
        results_db=None,
        output_dir=tmp_path,
    )


@pytest.fixture
def h84(tmp_path: Path, settings: Settings) -> Path:
    assert dispatch(["codec", "build", "--m", "3", "--t", "1", "--out", "h84.txt"], settings) == EXIT_OK
    return tmp_path / "h84.txt"


def body(path: Path) -> list[str]:
    return [ln for ln in path.read_text(encoding="utf-8").splitlines() if not ln.startswith("#")]


def comments(path: Path) -> list[str]:
    return [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.startswith("#")]


# -------------------------
# Argument handling
# -------------------------

def test_join_negative_values():
    argv = ["bounds", "--snr-db", "-10:0.2:10", "--n", "128", "--a", "-.5"]
    assert join_negative_values(argv) == ["bounds", "--snr-db=-10:0.2:10", "--n", "128", "--a=-.5"]


@pytest.mark.parametrize(
    "exc, code",
    [
        (ValidationError("x"), EXIT_USAGE),
        (FitError("x"), EXIT_USAGE),
        (InfeasibleError("x"), EXIT_INFEASIBLE),
        (NotFoundError("x"), EXIT_INFEASIBLE),
        (StoreError("x"), EXIT_IO),
        (FileNotFoundError("x"), EXIT_IO),
        (ToolkitError("x"), EXIT_FAILURE),
    ],
)
def test_exit_codes(exc, code):
    assert exit_code_for(exc) == code


def test_unknown_flag_is_usage_error(tmp_path, settings):
    code = dispatch(["bounds", "--snr-db", "0:1:2", "--bogus", "1", "--out", "b.csv"], settings)
    assert code == EXIT_USAGE
    assert not (tmp_path / "b.csv").exists()


def test_missing_subcommand(settings):
    assert dispatch([], settings) == EXIT_USAGE


def test_help_exits_cleanly(settings, capsys):
    assert dispatch(["--help"], settings) == EXIT_OK
    assert "urllc-toolkit" in capsys.readouterr().out


# -------------------------
# bounds
# -------------------------

def test_bounds_csv(tmp_path, settings):
    assert dispatch(["bounds", "--snr-db", "-10:0.2:10", "--out", "bounds.csv"], settings) == EXIT_OK
    out = tmp_path / "bounds.csv"

    lines = body(out)
    assert lines[0] == "snr_db,capacity,dispersion,rate"
    assert len(lines) == 1 + 101
    assert lines[1].startswith("-10,")
    assert lines[-1].startswith("10,")

    header = comments(out)
    assert header[0] == "# urllc-toolkit bounds"
    assert "# n = 128" in header
    assert "# eps_m = 1e-05" in header
    assert "# snr_db = -10:0.2:10" in header


def test_bounds_reruns_are_byte_identical(tmp_path, settings):
    argv = ["bounds", "--n", "256", "--eps", "1e-3", "--snr-db", "-2,0,2"]
    assert dispatch(argv + ["--out", "a.csv"], settings) == EXIT_OK
    assert dispatch(argv + ["--out", "b.csv"], settings) == EXIT_OK
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_bounds_to_stdout(settings, capsys):
    assert dispatch(["bounds", "--snr-db", "0"], settings) == EXIT_OK
    out = capsys.readouterr().out
    assert "snr_db,capacity,dispersion,rate" in out


# -------------------------
# Config files
# -------------------------

def test_missing_config_is_io_error(tmp_path, settings):
    code = dispatch(["bounds", "--snr-db", "0", "--config", str(tmp_path / "nope.env")], settings)
    assert code == EXIT_IO


def test_unknown_config_key(tmp_path, settings):
    cfg = tmp_path / "exp.env"
    cfg.write_text("n = 128\nbogus = 1\n", encoding="utf-8")
    assert dispatch(["bounds", "--snr-db", "0", "--config", str(cfg)], settings) == EXIT_USAGE


def test_flags_override_config_file(tmp_path, settings):
    cfg = tmp_path / "exp.env"
    cfg.write_text("n = 64\neps_m = 1e-3\n", encoding="utf-8")
    argv = ["bounds", "--snr-db", "0", "--config", str(cfg), "--n", "128", "--out", "o.csv"]
    assert dispatch(argv, settings) == EXIT_OK

    header = comments(tmp_path / "o.csv")
    assert f"# config = {cfg.as_posix()}" in header
    assert "# n = 128" in header
    assert "# eps_m = 0.001" in header


# -------------------------
# codec and Monte Carlo
# -------------------------

def test_codec_build_writes_code_file(h84):
    code = read_code(h84)
    assert (code.n, code.k) == (8, 4)
    header = comments(h84)
    assert header[0] == "# urllc-toolkit codec build"
    assert "# m = 3" in header
    assert "# t = 1" in header


def test_codec_build_needs_parameters(settings):
    assert dispatch(["codec", "build"], settings) == EXIT_USAGE


def test_codec_info(tmp_path, settings, h84):
    assert dispatch(["codec", "info", "--code", str(h84), "--out", "info.csv"], settings) == EXIT_OK
    lines = body(tmp_path / "info.csv")
    assert lines[0] == "n,k,rate,min_distance,digest"
    assert lines[1].startswith("8,4,0.5,4,")


def test_simulate_cep_needs_seed(tmp_path, settings, h84):
    argv = ["simulate-cep", "--code", str(h84), "--order", "1", "--snr-db", "2", "--out", "cep.csv"]
    assert dispatch(argv, settings) == EXIT_USAGE
    assert not (tmp_path / "cep.csv").exists()


def test_simulate_cep_same_output_for_any_worker_count(tmp_path, settings, h84):
    argv = [
        "simulate-cep", "--code", str(h84), "--order", "1", "--snr-db", "0:1:2",
        "--trials", "2000", "--target-errors", "0", "--seed", "9",
    ]
    assert dispatch(argv + ["--threads", "1", "--out", "one.csv"], settings) == EXIT_OK
    assert dispatch(argv + ["--threads", "2", "--out", "two.csv"], settings) == EXIT_OK
    assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()

    lines = body(tmp_path / "one.csv")
    assert lines[0] == "snr_db,order,trials,errors,cep,ci_low,ci_high,k_complexity"
    assert len(lines) == 4


def test_simulate_cep_reuses_stored_points(tmp_path, settings, h84, caplog):
    db = tmp_path / "store" / "results.sqlite"
    argv = [
        "simulate-cep", "--code", str(h84), "--order", "0", "--snr-db", "1",
        "--trials", "1000", "--target-errors", "0", "--seed", "4", "--db", str(db),
    ]
    assert dispatch(argv + ["--out", "first.csv"], settings) == EXIT_OK
    caplog.set_level(logging.INFO, logger="src.platforms.cli.commands")
    assert dispatch(argv + ["--out", "second.csv"], settings) == EXIT_OK

    assert any("reusing stored cep" in r.getMessage() for r in caplog.records)
    assert body(tmp_path / "first.csv") == body(tmp_path / "second.csv")


# -------------------------
# Trade-off and MOOP
# -------------------------

def test_fit_model_from_points(tmp_path, settings):
    points = tmp_path / "gaps.csv"
    rows = ["# measured", "order,delta_rho_db,log2_k"]
    for order, d in enumerate([0.25, 1.0, 2.0, 4.0]):
        rows.append(f"{order},{d},{1.0 / (0.029 * d ** 0.5 + 0.03)!r}")
    points.write_text("\n".join(rows) + "\n", encoding="utf-8")

    assert dispatch(["fit-model", "--points", str(points), "--out", "model.env"], settings) == EXIT_OK
    model = parse_model((tmp_path / "model.env").read_text(encoding="utf-8"))
    assert model.a == pytest.approx(0.029, abs=1e-9)
    assert model.b == pytest.approx(0.03, abs=1e-9)
    header = comments(tmp_path / "model.env")
    assert header[0] == "# urllc-toolkit fit-model"
    assert f"# points = {points}" in header


def test_fit_model_with_too_few_points(tmp_path, settings):
    points = tmp_path / "gaps.csv"
    points.write_text("delta_rho_db,log2_k\n1.0,12.0\n", encoding="utf-8")
    assert dispatch(["fit-model", "--points", str(points)], settings) == EXIT_USAGE


def test_constrained_rate_csv(tmp_path, settings):
    assert dispatch(["constrained-rate", "--snr-db", "0:2:8", "--out", "m.csv"], settings) == EXIT_OK
    lines = body(tmp_path / "m.csv")
    assert lines[0] == "snr_db,rate_unconstrained,rate_constrained,delta_rho_min_db"
    for line in lines[1:]:
        _, r, m, _ = line.split(",")
        assert float(m) <= float(r) + 1e-9


def test_pareto_csv_has_footer(tmp_path, settings):
    argv = ["pareto", "--rate", "0.5", "--grid-step-db", "0.1", "--out", "p.csv"]
    assert dispatch(argv, settings) == EXIT_OK
    text = (tmp_path / "p.csv").read_text(encoding="utf-8")
    assert "delta_rho_db,delta_r,rate,snr_db" in text
    assert "# delta_rho_s_min_db = " in text
    assert "# r_s = 0.5" in text


def test_pareto_infeasible_budget(tmp_path, settings):
    argv = ["pareto", "--rate", "0.5", "--rho-m-db", "0", "--out", "p.csv"]
    assert dispatch(argv, settings) == EXIT_INFEASIBLE
    assert not (tmp_path / "p.csv").exists()


def test_scalarize_sweep_footer(tmp_path, settings):
    argv = ["scalarize-sweep", "--rate", "0.5", "--alphas", "0,0.5,1", "--grid-step-db", "0.1", "--out", "s.csv"]
    assert dispatch(argv, settings) == EXIT_OK
    lines = body(tmp_path / "s.csv")
    assert lines[0] == "alpha,chosen_delta_r,chosen_delta_rho_db"
    assert len(lines) == 4
    assert "# accessible_points = " in (tmp_path / "s.csv").read_text(encoding="utf-8")


def test_regime_csv(tmp_path, settings):
    assert dispatch(["regime", "--rates", "0.5,0.9", "--out", "r.csv"], settings) == EXIT_OK
    lines = body(tmp_path / "r.csv")
    assert lines[1].endswith(",low")
    assert lines[2].endswith(",high")


def test_battery_rejects_unknown_policy(settings):
    assert dispatch(["battery", "--rate", "0.5", "--theta", "2"], settings) == EXIT_USAGE


def test_battery_weighted_sum_run(tmp_path, settings):
    argv = ["battery", "--rate", "0.5", "--theta", "1", "--grid-step-db", "0.1", "--log", "run", "--out", "bat.csv"]
    assert dispatch(argv, settings) == EXIT_OK
    text = (tmp_path / "bat.csv").read_text(encoding="utf-8")
    assert "step,t,alpha,rate,snr_db,energy_j,codewords" in text
    assert "# summary transmissions=" in text
    assert len(body(tmp_path / "bat.csv")) == 3


def test_battery_writes_one_row_per_codeword(tmp_path, settings):
    argv = [
        "battery", "--rate", "0.5", "--theta", "inf", "--grid-step-db", "0.1",
        "--capacity-wh", "1e-10", "--out", "cw.csv",
    ]
    assert dispatch(argv, settings) == EXIT_OK
    lines = body(tmp_path / "cw.csv")
    assert lines[0] == "codeword,t,alpha,rate,snr_db,energy_j"
    summary = [ln for ln in comments(tmp_path / "cw.csv") if ln.startswith("# summary")][0]
    transmissions = int(summary.split("transmissions=")[1].split()[0])
    assert len(lines) - 1 == transmissions
    assert "# alpha_scale = formula" in comments(tmp_path / "cw.csv")


def test_battery_refuses_huge_codeword_log(settings):
    assert dispatch(["battery", "--rate", "0.5", "--theta", "1", "--grid-step-db", "0.1"], settings) == EXIT_USAGE
