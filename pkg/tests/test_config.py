# tests/test_config.py

import pytest

from isacgan.config import RunConfig, SystemConfig, TrainConfig, parse_config, parse_grid
from isacgan.errors import ConfigError


def test_defaults_without_a_file():
    config = parse_config()
    assert config.profile == "desk"
    assert (config.Q, config.V, config.train.epochs) == (200, 5, 50)
    assert config.system == SystemConfig()
    assert config.train_snr_db == (10.0, 15.0, 20.0)
    assert len(config.test_snr_db) == 17


def test_full_profile():
    config = parse_config(profile="full")
    assert (config.Q, config.V, config.train.epochs) == (1000, 10, 100)


def test_file_then_overrides_then_flags(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nM = 8\nalpha=50\nlink=comm\n\nQ=7  # trailing comment\n", encoding="utf-8")
    config = parse_config(str(path), ["M=2", "trials=9"], seed=4, link="sensing")
    assert config.system.M == 2
    assert config.train.alpha == 50.0
    assert config.Q == 7 and config.trials == 9
    assert config.seed == 4 and config.train.seed == 4
    assert config.link == "sensing"


def test_file_overrides_the_profile(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("profile=full\nepochs=3\n", encoding="utf-8")
    config = parse_config(str(path))
    assert config.profile == "full" and config.Q == 1000 and config.train.epochs == 3


def test_n_sets_the_sweep_length():
    config = parse_config(overrides=["N=50"])
    assert config.system.C == 50 and config.system.P == config.system.M


@pytest.mark.parametrize("override, key", [
    ("M=0", "M"),
    ("M=abc", "M"),
    ("bogus=1", "bogus"),
    ("rho=-1", "rho"),
    ("batch_size=0", "batch_size"),
    ("test_fraction=1.5", "test_fraction"),
    ("link=radar", "link"),
    ("user=3", "user"),
    ("profile=huge", "profile"),
    ("sweep_variable=K", "sweep_variable"),
    ("validation_fraction=1", "validation_fraction"),
])
def test_invalid_values_name_the_key(override, key):
    with pytest.raises(ConfigError) as info:
        parse_config(overrides=[override])
    assert info.value.key == key
    assert str(info.value).startswith(f"{key}: ")


def test_line_without_equals_is_rejected():
    with pytest.raises(ConfigError):
        parse_config(overrides=["M 4"])


def test_grid_syntax():
    assert parse_grid("-10:2.5:30") == tuple(-10.0 + 2.5 * i for i in range(17))
    assert parse_grid("0, 5,10") == (0.0, 5.0, 10.0)
    with pytest.raises(ValueError):
        parse_grid("0:-1:5")
    assert parse_config(overrides=["test_snr_db=0:10:20"]).test_snr_db == (0.0, 10.0, 20.0)
    assert parse_config(overrides=["sweep_values=4,8"]).sweep_values == (4, 8)


def test_config_hash_tracks_model_inputs_only():
    base = RunConfig()
    assert base.config_hash() == RunConfig().config_hash()
    assert len(base.config_hash()) == 16
    assert RunConfig(system=SystemConfig(M=8)).config_hash() != base.config_hash()
    assert RunConfig(train=TrainConfig(alpha=10.0)).config_hash() != base.config_hash()
    assert RunConfig(train=TrainConfig(validation_fraction=0.0)).config_hash() != base.config_hash()
    assert RunConfig(trials=5, test_snr_db=(0.0,)).config_hash() == base.config_hash()


def test_link_tag_and_paths(tmp_path):
    config = RunConfig(link="comm", user=2, out_dir=str(tmp_path))
    assert config.link_tag == "comm_k2"
    assert config.path("x.csv") == str(tmp_path / "x.csv")
    assert RunConfig().link_tag == "sensing"
