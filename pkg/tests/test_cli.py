import json

import numpy as np
import pytest

from pcgkit.cli import main
from pcgkit.config import SCHEMA, RunConfig, load_config, parse_config_text
from pcgkit.dataio import read_wav
from pcgkit.errors import ConfigError
from pcgkit.metrics import METRIC_KEYS


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli_corpus")
    assert main(["synth", "--corpus", str(d), "--patients", "4,3,1", "--per-patient", "2",
                 "--duration", "3", "--seed", "2"]) == 0
    return d


@pytest.fixture(scope="module")
def small_features(small_corpus):
    out = small_corpus / "features.csv"
    assert main(["features", "--manifest", str(small_corpus / "manifest.csv"), "--out", str(out)]) == 0
    return out


# ---------------------------------------------------------------- config

def test_empty_config_is_defaults(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("")
    cfg = load_config(p)
    assert cfg.values == RunConfig().values
    assert cfg["fir.cutoff_hz"] == 60 and cfg["dwt.levels"] == 6
    assert cfg["peak.height"] == 0.08 and cfg["peak.distance"] == 400
    assert cfg["pca.components"] == 460


def test_single_override(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# tweak\npeak.height = 0.1  # comment\n")
    cfg = load_config(p)
    diff = {k for k in SCHEMA if cfg[k] != RunConfig()[k]}
    assert diff == {"peak.height"} and cfg["peak.height"] == 0.1
    assert cfg.feature_config().peak_height == 0.1


@pytest.mark.parametrize("text", ["dwt.levels=0", "bogus.key=1", "peak.height", "mlp.dropout=0.5",
                                  "svm.gamma=-1", "dwt.selection=minimax"])
def test_invalid_config(tmp_path, text):
    p = tmp_path / "c.cfg"
    p.write_text(text + "\n")
    with pytest.raises(ConfigError):
        load_config(p)


def test_config_to_objects():
    cfg = RunConfig().with_overrides({"pca.policy": "variance", "pca.variance_target": "0.95",
                                      "svm.gamma": "0.25", "mlp.widths": "16,8", "mlp.dropout": "0.1,0.2"})
    ec = cfg.experiment_config()
    assert ec.pca.variance_target == 0.95 and ec.pca.component_count is None
    assert ec.svm_gamma == 0.25 and ec.hidden == (16, 8) and ec.dropout == (0.1, 0.2)
    assert RunConfig().experiment_config().svm_gamma is None


def test_parse_config_text_location():
    with pytest.raises(ConfigError, match="x.cfg:2"):
        parse_config_text("run.seed=1\nnope=2\n", "x.cfg")


# ---------------------------------------------------------------- CLI

def test_unknown_flag_exit_1(capsys):
    assert main(["report", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err


def test_missing_manifest_exit_2(tmp_path, capsys):
    assert main(["features", "--manifest", str(tmp_path / "none.csv"), "--out", str(tmp_path / "f.csv")]) == 2
    assert "none.csv" in capsys.readouterr().err


def test_bad_config_exit_1(tmp_path, small_corpus):
    p = tmp_path / "c.cfg"
    p.write_text("dwt.levels=0\n")
    assert main(["experiment", "--kind", "exp3", "--model", "svm", "--manifest",
                 str(small_corpus / "manifest.csv"), "--out", str(tmp_path / "r.json"), "--config", str(p)]) == 1


def test_synth_single(tmp_path):
    out = tmp_path / "s.wav"
    assert main(["synth", "--out", str(out), "--bpm", "60", "--duration", "5", "--murmur", "--seed", "3"]) == 0
    s = read_wav(out)
    assert s.samples.size == 20000
    events = json.loads(out.with_suffix(".json").read_text())
    assert sum(e["kind"] == "S1" for e in events["events"]) == 5


def test_denoise(tmp_path):
    src, dst = tmp_path / "s.wav", tmp_path / "d.wav"
    main(["synth", "--out", str(src), "--duration", "4", "--noise-rms", "0.05"])
    assert main(["denoise", "--in", str(src), "--out", str(dst), "--threshold", "soft"]) == 0
    y = read_wav(dst).samples
    assert abs(np.max(np.abs(y)) - 0.5) < 1e-4


def test_reduce_train_predict(tmp_path, small_features):
    red = tmp_path / "red.json"
    assert main(["reduce", "--fit", "--features", str(small_features), "--out", str(red),
                 "--variance-target", "0.9"]) == 0
    proj = tmp_path / "proj.csv"
    assert main(["reduce", "--apply", str(red), "--features", str(small_features), "--out", str(proj)]) == 0
    header = proj.read_text().splitlines()[0].split(",")
    assert header[:4] == ["id", "label", "patient_id", "pc1"]
    model = tmp_path / "m.json"
    assert main(["train", "--model", "svm", "--features", str(small_features), "--out", str(model)]) == 0
    pred = tmp_path / "p.csv"
    assert main(["predict", "--model", str(model), "--features", str(small_features), "--out", str(pred)]) == 0
    lines = pred.read_text().splitlines()
    assert lines[0] == "id,predicted" and len(lines) == 17


def test_experiment_byte_identical_and_report(tmp_path, small_corpus, capsys):
    args = ["experiment", "--kind", "exp3", "--model", "dnn", "--manifest", str(small_corpus / "manifest.csv"),
            "--seed", "7", "--epochs", "3", "--folds", "4"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    capsys.readouterr()
    assert main(["report", "--in", str(a), "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(METRIC_KEYS) == "PN,PM,PE,Sens,Spec,Youden,D,TPr"
    assert len(lines) == 2 and len(lines[1].split(",")) == 8


def test_report_rejects_non_report(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{}")
    assert main(["report", "--in", str(p)]) == 2
