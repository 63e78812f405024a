import pytest

from scat_depth.errors import ConfigError
from scat_depth.trainer.config import TrainConfig
from scat_depth.utils.config import coerce_value, default_train_config, load_config, load_run_config


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_defaults():
    config = TrainConfig()
    assert config.kappa == 0.7
    assert config.epsilon_m == 135.0
    assert config.enable_cgs and config.enable_sdn and config.enable_ada
    assert not config.min_reprojection and not config.auto_mask


def test_key_value_file(tmp_path):
    path = write(
        tmp_path,
        "run.cfg",
        "# vanilla adversarial cell\nenable_cgs = false\nenable_sdn = off\n\nepsilon_m = 40  # smaller budget\n"
        "depth_widths = 4,8\n",
    )
    config = load_run_config(path)
    assert not config.enable_cgs
    assert not config.enable_sdn
    assert config.enable_ada
    assert config.epsilon_m == 40.0
    assert config.depth_widths == (4, 8)
    assert config.kappa == 0.7, "Omitted keys keep their defaults"


def test_malformed_line_names_file_and_line(tmp_path):
    path = write(tmp_path, "bad.cfg", "epochs = 3\nthis line has no separator\n")
    with pytest.raises(ConfigError, match=r"bad.cfg:2"):
        load_run_config(path)


def test_unknown_key(tmp_path):
    path = write(tmp_path, "unknown.cfg", "kapa = 0.5\n")
    with pytest.raises(ConfigError, match=r"unknown.cfg:1: unknown key 'kapa'"):
        load_run_config(path)


def test_bad_value(tmp_path):
    with pytest.raises(ConfigError, match=r"value.cfg:1"):
        load_run_config(write(tmp_path, "value.cfg", "enable_cgs = maybe\n"))
    with pytest.raises(ConfigError):
        load_run_config(write(tmp_path, "range.cfg", "kappa = -1\n"))
    with pytest.raises(ConfigError):
        load_run_config(str(tmp_path / "missing.cfg"))


def test_yaml_run_config(tmp_path):
    path = write(tmp_path, "run.yml", "kappa: 0.3\noptimizer: adam\npose_widths: [4, 8]\n")
    config = load_run_config(path)
    assert config.kappa == 0.3
    assert config.optimizer == "adam"
    assert config.pose_widths == (4, 8)
    with pytest.raises(ConfigError):
        load_run_config(write(tmp_path, "typo.yml", "kapa: 0.3\n"))


def test_run_config_applies_on_base(tmp_path):
    base = TrainConfig(epochs=2, seed=9)
    config = load_run_config(write(tmp_path, "run.cfg", "epochs = 5\n"), base)
    assert (config.epochs, config.seed) == (5, 9)


def test_coerce_value():
    assert coerce_value(" yes ", False) is True
    assert coerce_value("12", 1) == 12
    assert coerce_value("0.5", 1.0) == 0.5
    assert coerce_value("4, 8,16", (1,)) == (4, 8, 16)
    assert coerce_value("adam", "sgd") == "adam"
    with pytest.raises(ValueError):
        coerce_value("x", 1)


@pytest.mark.parametrize(
    "changes",
    [
        {"lr_theta": 0.0},
        {"epsilon_m": -1.0},
        {"kappa": 0.0},
        {"batch_size": 0},
        {"sample_j": 0},
        {"blend_warmup_fraction": 1.5},
        {"optimizer": "rmsprop"},
        {"perturbation": "snow"},
        {"depth_widths": ()},
        {"alpha": 2.0},
        {"snapshot_every_steps": -1},
    ],
)
def test_train_config_validation(changes):
    with pytest.raises(ValueError):
        TrainConfig(**changes)


def test_from_mapping_rejects_unknown_keys():
    with pytest.raises(ValueError):
        TrainConfig.from_mapping({"epochz": 3})
    assert TrainConfig.from_mapping({"depth_widths": [4, 8]}).depth_widths == (4, 8)


def test_settings_file_matches_train_config():
    settings = load_config()
    assert settings["logging"]["level"]
    config = default_train_config(settings)
    assert config.kappa == 0.7
    assert config.epsilon_m == 135.0
    with pytest.raises(ConfigError):
        default_train_config({"training": {"kappa": 0.0}})
