import csv
import json

import pytest

from scat_depth.cli import main
from scat_depth.synthworld.dataset import load_dataset
from scat_depth.trainer.checkpoint import load_checkpoint
from scat_depth.utils.utils import RUN_MANIFEST_NAME

TINY_RUN = """# small enough for a test run
epochs = 1
batch_size = 2
sample_j = 2
buffer_capacity = 2
depth_widths = 4,8
pose_widths = 4,8
generator_widths = 4,8
"""


def gen_data(out, *extra):
    return main(["gen-data", "--out", str(out), "--scenes", "4", "--seed", "7", "--height", "16", "--width", "32", *extra])


def dataset_bytes(root):
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name != RUN_MANIFEST_NAME
    }


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert gen_data(root / "data", "--split", "0.5,0.5") == 0
    config = root / "run.cfg"
    config.write_text(TINY_RUN, encoding="utf-8")
    assert main(["train", "--config", str(config), "--data", str(root / "data"), "--out", str(root / "run")]) == 0
    return root


def test_missing_out_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["gen-data", "--scenes", "3"])
    assert info.value.code == 2


def test_gen_data_is_reproducible(tmp_path):
    assert gen_data(tmp_path / "a") == 0
    assert gen_data(tmp_path / "b") == 0
    assert dataset_bytes(tmp_path / "a") == dataset_bytes(tmp_path / "b")
    assert (tmp_path / "a" / RUN_MANIFEST_NAME).exists()


def test_gen_data_refuses_non_empty_dir(tmp_path):
    assert gen_data(tmp_path) == 0
    assert gen_data(tmp_path) == 4
    assert gen_data(tmp_path, "--force") == 0


def test_gen_data_with_zero_scenes(tmp_path):
    assert main(["gen-data", "--out", str(tmp_path), "--scenes", "0"]) == 0
    assert (tmp_path / "manifest.txt").read_text(encoding="utf-8").count("\n") == 1


def test_train_outputs(workspace):
    run = workspace / "run"
    assert (run / "model.ckpt").exists()
    assert (run / "checkpoints" / "epoch_001.ckpt").exists()
    train_log = read_rows(run / "train_log.csv")
    assert len(train_log) == 1
    assert list(train_log[0]) == ["step", "L_p", "L_AD", "mean_cos", "frac_neg", "grad_norm_theta", "grad_norm_phi"]
    assert len(read_rows(run / "grad_stats.csv")) == 1

    manifest = json.loads((run / RUN_MANIFEST_NAME).read_text(encoding="utf-8"))
    assert manifest["command"][:2] == ["scat-depth", "train"]
    assert str(run / "model.ckpt") in manifest["outputs"]
    assert len(manifest["code_hash"]) == 64


def test_trained_checkpoint_reloads_with_dataset_camera(workspace):
    checkpoint = workspace / "run" / "model.ckpt"
    header = checkpoint.read_bytes().split(b"\n")
    camera_line = next(line for line in header if line.startswith(b"camera "))
    assert b"np." not in camera_line

    trainer = load_checkpoint(checkpoint)
    assert trainer.camera == load_dataset(workspace / "data", "train")[0].camera


def test_bad_config_exits_with_config_error(workspace, tmp_path):
    config = tmp_path / "bad.cfg"
    config.write_text("epochs = 1\nkapa = 0.5\n", encoding="utf-8")
    code = main(["train", "--config", str(config), "--data", str(workspace / "data"), "--out", str(tmp_path / "run")])
    assert code == 3


def test_missing_data_exits_with_data_error(workspace, tmp_path):
    code = main(["train", "--config", str(workspace / "run.cfg"), "--data", str(tmp_path), "--out", str(tmp_path / "run")])
    assert code == 4


def test_eval_clean_only(workspace, tmp_path):
    out = tmp_path / "metrics.csv"
    args = ["eval", "--checkpoint", str(workspace / "run" / "model.ckpt"), "--data", str(workspace / "data")]
    assert main([*args, "--corrupt", "none", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert [(r["tag"], r["corruption"], r["severity"]) for r in rows] == [("model", "clean", "0")]
    assert (tmp_path / RUN_MANIFEST_NAME).exists()


def test_eval_against_itself_gives_mce_100(workspace, tmp_path):
    checkpoint = str(workspace / "run" / "model.ckpt")
    out = tmp_path / "metrics.csv"
    code = main(
        ["eval", "--checkpoint", checkpoint, "--baseline", checkpoint, "--data", str(workspace / "data"),
         "--corrupt", "fog", "--out", str(out)]
    )
    assert code == 0
    rows = read_rows(out)
    assert len(rows) == 2 * 4 + 2
    mce = next(r for r in rows if r["corruption"] == "mce")
    assert float(mce["abs_rel"]) == pytest.approx(100.0)


def test_eval_baseline_needs_corruptions(workspace, tmp_path):
    checkpoint = str(workspace / "run" / "model.ckpt")
    code = main(
        ["eval", "--checkpoint", checkpoint, "--baseline", checkpoint, "--data", str(workspace / "data"),
         "--corrupt", "none", "--out", str(tmp_path / "m.csv")]
    )
    assert code == 3


def test_eval_missing_checkpoint(workspace, tmp_path):
    code = main(
        ["eval", "--checkpoint", str(tmp_path / "none.ckpt"), "--data", str(workspace / "data"), "--out", str(tmp_path / "m.csv")]
    )
    assert code == 4


def test_probes(workspace, tmp_path):
    checkpoint = str(workspace / "run" / "model.ckpt")
    sensitivity = tmp_path / "sensitivity.csv"
    assert main(
        ["probe-sensitivity", "--checkpoint", checkpoint, "--kappas", "1.0,0.3", "--trials", "2", "--out", str(sensitivity)]
    ) == 0
    assert [r["kappa"] for r in read_rows(sensitivity)] == ["0.3", "1.0"]

    gradients = tmp_path / "grad_probe.csv"
    assert main(
        ["probe-gradients", "--checkpoint", checkpoint, "--steps", "1", "--data", str(workspace / "data"), "--out", str(gradients)]
    ) == 0
    assert [r["mode"] for r in read_rows(gradients)] == ["cgs", "plain"]


def test_calibrate_corruptions(workspace, tmp_path):
    out = tmp_path / "calibration.csv"
    assert main(
        ["calibrate-corruptions", "--checkpoint", str(workspace / "run" / "model.ckpt"), "--data", str(workspace / "data"),
         "--out", str(out)]
    ) == 0
    assert len(read_rows(out)) == 18


def test_ablate(workspace, tmp_path):
    out = tmp_path / "ablation"
    code = main(
        ["ablate", "--config", str(workspace / "run.cfg"), "--data", str(workspace / "data"), "--axes", "cgs",
         "--corrupt", "none", "--out", str(out)]
    )
    assert code == 0
    rows = read_rows(out / "ablation.csv")
    assert [r["tag"] for r in rows] == ["cgs=on", "cgs=off"]
    assert main(
        ["ablate", "--config", str(workspace / "run.cfg"), "--data", str(workspace / "data"), "--axes", "bogus",
         "--out", str(out)]
    ) == 3


@pytest.mark.parametrize("bad", [["--kappas", "0", "--trials", "2"], ["--kappas", "0.5", "--trials", "0"]])
def test_sensitivity_command_rejects_bad_arguments(workspace, tmp_path, bad):
    checkpoint = str(workspace / "run" / "model.ckpt")
    with pytest.raises(SystemExit) as info:
        main(["probe-sensitivity", "--checkpoint", checkpoint, *bad, "--out", str(tmp_path / "s.csv")])
    assert info.value.code == 2


def test_invalid_values_inside_a_command_exit_with_config_error(workspace, tmp_path, monkeypatch):
    def reject(*args, **kwargs):
        raise ValueError("kappa must be > 0")

    monkeypatch.setattr("scat_depth.cli.sensitivity_probe", reject)
    code = main(
        ["probe-sensitivity", "--checkpoint", str(workspace / "run" / "model.ckpt"), "--kappas", "0.5", "--trials", "1",
         "--out", str(tmp_path / "s.csv")]
    )
    assert code == 3
