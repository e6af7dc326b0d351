# tests/test_commands.py

import importlib.util
import os
from pathlib import Path

import numpy as np
import pytest

from isacgan import dataset, pipeline
from isacgan.baselines import ls_from_inputs
from isacgan.config import parse_config
from isacgan.errors import ConfigMismatchError, MissingArtifactError, UnsupportedConfigurationError
from isacgan.pilot_protocol import build_pilot_matrix
from isacgan.reports import read_csv
from isacgan.utils import unstack_real_imag_batch

ROOT = Path(__file__).resolve().parent.parent

TINY = ["M=2", "N=4", "K=2", "Q=4", "V=2", "epochs=1", "batch_size=4", "trials=3", "test_snr_db=0,10",
        "sweep_snr_db=0,10"]


def _load_cli():
    spec = importlib.util.spec_from_file_location("isacgan_cli", ROOT / "isacgan.py")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


@pytest.fixture(scope="module")
def cli():
    return _load_cli()


def _args(command, out, *extra, seed=5):
    args = [command, "--out", str(out), "--seed", str(seed)]
    for item in TINY:
        args += ["--set", item]
    return args + list(extra)


@pytest.fixture(scope="module")
def sensing_run(cli, tmp_path_factory):
    out = tmp_path_factory.mktemp("sensing")
    assert cli.main(_args("all", out)) == 0
    return out


def test_all_writes_every_artifact(sensing_run):
    names = set(os.listdir(sensing_run))
    assert {"dataset_sensing.isac", "cgan_sensing.ckpt", "ffn_sensing.ckpt", "elm_sensing.ckpt",
            "nmse_sensing.csv", "split_sensing.csv"} <= names


def test_nmse_report_contents(sensing_run):
    frame, footer = read_csv(str(sensing_run / "nmse_sensing.csv"))
    assert sorted(set(frame["method"])) == ["ELM", "FFN", "LS", "SE-CGAN"]
    assert sorted(set(frame["sweep_value"])) == [0.0, 10.0]
    assert (frame["nmse"] >= 0).all()
    assert footer["seed"] == "5" and footer["trials"] == "3"


def test_runs_are_byte_identical(cli, sensing_run, tmp_path):
    assert cli.main(_args("all", tmp_path)) == 0
    for name in ("nmse_sensing.csv", "split_sensing.csv"):
        assert (tmp_path / name).read_bytes() == (sensing_run / name).read_bytes()


def test_other_seed_changes_the_results(cli, sensing_run, tmp_path):
    assert cli.main(_args("all", tmp_path, seed=6)) == 0
    assert (tmp_path / "nmse_sensing.csv").read_bytes() != (sensing_run / "nmse_sensing.csv").read_bytes()


def test_comm_link_pipeline(cli, tmp_path):
    assert cli.main(_args("all", tmp_path, "--link", "comm", "--set", "user=1")) == 0
    frame, footer = read_csv(str(tmp_path / "nmse_comm_k1.csv"))
    assert "CE-CGAN" in set(frame["method"])
    assert footer["link"] == "comm"


def test_missing_upstream_artifact(cli, tmp_path):
    assert cli.main(_args("evaluate", tmp_path)) == 1
    run_config = parse_config(overrides=TINY, seed=5, out_dir=str(tmp_path))
    with pytest.raises(MissingArtifactError):
        pipeline.load_models(run_config)


def test_checkpoint_from_another_config_is_refused(cli, sensing_run):
    assert cli.main(_args("evaluate", sensing_run, "--set", "alpha=5")) == 1
    run_config = parse_config(overrides=TINY + ["alpha=5"], seed=5, out_dir=str(sensing_run))
    with pytest.raises(ConfigMismatchError):
        pipeline.load_models(run_config)


def test_invalid_configuration_exits_with_an_error(cli, tmp_path):
    assert cli.main(_args("generate", tmp_path, "--set", "M=0")) == 1
    assert not os.listdir(tmp_path)


def test_complexity_command(cli, tmp_path):
    assert cli.main(["complexity", "--out", str(tmp_path)]) == 0
    frame, footer = read_csv(str(tmp_path / "complexity.csv"))
    assert footer["parity"] == "true"
    assert set(frame["link"]) == {"sensing", "comm", "framework"}


def test_single_value_sweep_reproduces_the_evaluation(sensing_run):
    run_config = parse_config(overrides=TINY + ["sweep_values=2"], seed=5, out_dir=str(sensing_run))
    swept = pipeline.sweep(run_config).frame()
    evaluated, _ = read_csv(str(sensing_run / "nmse_sensing.csv"))
    assert len(swept) == len(evaluated) == 8
    for row in evaluated.itertuples(index=False):
        match = swept[(swept["snr_db"] == row.sweep_value) & (swept["method"] == row.method)]
        assert match["nmse"].iloc[0] == pytest.approx(row.nmse, rel=1e-12)


def test_sweep_command_writes_its_report(cli, tmp_path):
    args = _args("sweep", tmp_path, "--variable", "M", "--values", "2,3")
    assert cli.main(args) == 0
    frame, footer = read_csv(str(tmp_path / "sweep_sensing_M.csv"))
    assert sorted(set(frame["sweep_value"])) == [2.0, 3.0]
    assert footer["variable"] == "M"


def test_infeasible_sweep_fails_before_any_work(tmp_path):
    run_config = parse_config(overrides=TINY + ["sweep_variable=N", "sweep_values=8,3"], seed=5,
                              out_dir=str(tmp_path), link="comm")
    with pytest.raises(UnsupportedConfigurationError):
        pipeline.sweep(run_config)
    assert not os.listdir(tmp_path)


def test_oracle_and_zero_estimators_bracket_the_split_scores(sensing_run):
    run_config = parse_config(overrides=TINY, seed=5, out_dir=str(sensing_run))
    _, test_raw = pipeline.split_raw(run_config, pipeline.load_checked_dataset(run_config))
    truth = unstack_real_imag_batch(test_raw.O, pipeline.channel_shape(run_config))
    methods = {"oracle": lambda R: truth, "zero": lambda R: np.zeros_like(truth)}
    frame = pipeline.evaluate_split(run_config, methods, test_raw).frame()
    assert (frame[frame["method"] == "oracle"]["nmse"] == 0.0).all()
    np.testing.assert_allclose(frame[frame["method"] == "zero"]["nmse"], 1.0)


def _least_squares(run_config):
    system = run_config.system
    X = build_pilot_matrix(system.M, system.P, system.tx_power_linear)
    return lambda R: ls_from_inputs(R, "sensing", system, X)


def test_every_snr_point_sees_the_same_scenarios():
    run_config = parse_config(overrides=TINY, seed=5)
    ls = _least_squares(run_config)
    low = pipeline.monte_carlo_nmse(run_config, ls, 0.0, 20)
    high = pipeline.monte_carlo_nmse(run_config, ls, 10.0, 20)
    # same channels and unit noise, so the LS error scales exactly with sigma^2
    assert low / high == pytest.approx(10.0, rel=1e-9)


def test_monte_carlo_draws_the_self_interference_once(monkeypatch):
    run_config = parse_config(overrides=TINY, seed=5)
    calls = []
    real = pipeline.draw_si_channel

    def counting(config, rng=None):
        calls.append(config.seed)
        return real(config, rng)

    monkeypatch.setattr(pipeline, "draw_si_channel", counting)
    monkeypatch.setattr(dataset, "draw_si_channel", counting)
    pipeline.monte_carlo_nmse(run_config, _least_squares(run_config), 10.0, 6)
    assert calls == [5]


def test_validation_pairs_are_carved_from_the_training_split():
    run_config = parse_config(overrides=TINY, seed=5)
    train_raw, _ = pipeline.split_raw(run_config, dataset.generate_dataset(
        run_config.system, run_config.train_snr_db, run_config.Q, run_config.V, "sensing", seed=5))
    prepared = dataset.prepare(train_raw, run_config.system.rho)
    fit, validation = pipeline.fit_and_validation(run_config, prepared)
    assert len(fit) + len(validation) == len(prepared)
    assert len(validation) == round(0.1 * len(prepared))
    pairs = {tuple(row) for row in fit.R}
    assert not any(tuple(row) in pairs for row in validation.R)

    no_validation = parse_config(overrides=TINY + ["validation_fraction=0"], seed=5)
    fit, validation = pipeline.fit_and_validation(no_validation, prepared)
    assert validation is None and fit is prepared
