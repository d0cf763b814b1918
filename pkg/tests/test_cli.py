import numpy as np
import pytest

from rdclass import cli
from rdclass.errors import TrainingError
from rdclass.rdmap import load_rd_map

SMALL_CONFIG = """
n_subjects = 4
runs_per_subject = 1
runs_per_robot = 2
frames_per_run = 12
save_cubes = true
boost_stages = 10
forest_trees = 5
"""


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "small.cfg").write_text(SMALL_CONFIG)
    assert cli.main(["simulate", "--config", str(root / "small.cfg"), "--out", str(root / "data")]) == 0
    return root


def test_design_prints_derived_values(capsys):
    assert cli.main(["design"]) == 0
    out = capsys.readouterr().out
    assert "samples_per_chirp = 67" in out and "chirps_per_frame = 128" in out


def test_usage_error_is_config_error():
    assert cli.main(["no-such-command"]) == 2
    assert cli.main(["train", "--manifest", "x.csv", "--model", "perceptron"]) == 2


def test_unknown_config_key(tmp_path):
    (tmp_path / "c.cfg").write_text("warp_factor = 9\n")
    assert cli.main(["design", "--config", str(tmp_path / "c.cfg")]) == 2


def test_missing_manifest_is_data_error(tmp_path):
    assert cli.main(["features", "--manifest", str(tmp_path / "none.csv")]) == 3


def test_training_failure_exit_code(workspace, monkeypatch):
    def boom(*args, **kwargs):
        raise TrainingError("diverged")

    monkeypatch.setattr("rdclass.convnet.train", boom)
    assert cli.main(["train", "--manifest", str(workspace / "data" / "manifest.csv"), "--model", "convnet",
                     "--out", str(workspace / "cnn.json")]) == 4


def test_features_and_restructure(workspace):
    manifest = str(workspace / "data" / "manifest.csv")
    assert cli.main(["features", "--manifest", manifest, "--buffer-size", "3", "--out", str(workspace / "f.csv")]) == 0
    lines = (workspace / "f.csv").read_text().splitlines()
    assert len(lines) == 1 + 8 * 10
    assert cli.main(["restructure", "--manifest", manifest, "--subset", "test", "--out", str(workspace / "p.csv")]) == 0
    assert len((workspace / "p.csv").read_text().splitlines()) > 1


def test_train_evaluate_predict(workspace, capsys):
    manifest = str(workspace / "data" / "manifest.csv")
    model = str(workspace / "gb.json")
    assert cli.main(["train", "--config", str(workspace / "small.cfg"), "--manifest", manifest,
                     "--model", "gradient_boosting", "--out", model]) == 0
    assert cli.main(["evaluate", "--model-file", model, "--manifest", manifest, "--out", str(workspace / "cm.csv")]) == 0
    assert (workspace / "cm.csv").read_text().startswith("tp,fp,fn,tn,accuracy\n")
    pgm = workspace / "data" / "maps" / "e0000_f0000.pgm"
    cube = workspace / "data" / "cubes" / "e0000_f0000.rdc"
    capsys.readouterr()
    assert cli.main(["predict", "--model-file", model, str(pgm), str(cube)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2 and all("score=" in line for line in out)
    assert out[0].split(":")[1].split()[0] == out[1].split(":")[1].split()[0]


def test_rdmap_matches_dataset_map(workspace):
    cube = workspace / "data" / "cubes" / "e0004_f0003.rdc"
    out = workspace / "one.pgm"
    assert cli.main(["rdmap", str(cube), "--out", str(out)]) == 0
    # cube files hold single-precision samples, so a pixel may round differently
    ours = load_rd_map(out).pixels.astype(int)
    ref = load_rd_map(workspace / "data" / "maps" / "e0004_f0003.pgm").pixels.astype(int)
    assert np.abs(ours - ref).max() <= 1
    assert np.mean(ours == ref) > 0.99


def test_predict_rejects_bad_file(workspace, tmp_path):
    (tmp_path / "junk.pgm").write_bytes(b"not a map")
    assert cli.main(["predict", "--model-file", str(workspace / "gb.json"), str(tmp_path / "junk.pgm")]) == 3


def test_benchmark_reports_suite_failure(workspace, tmp_path):
    (tmp_path / "b.cfg").write_text("max_buffer = 13\n")
    code = cli.main(["benchmark", "--config", str(tmp_path / "b.cfg"), "--manifest",
                     str(workspace / "data" / "manifest.csv"), "--suites", "classical", "--seeds", "0",
                     "--out", str(tmp_path / "bench")])
    assert code == 3
