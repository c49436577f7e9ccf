import csv
import json

import numpy as np
import pytest

from dcom import ingest
from dcom.cli import main, parse_config_file
from dcom.errors import ConfigError, DcomError
from dcom.features import FEATURE_NAMES
from feature_oracle import oracle_features

CONFIG = """\
# sanity training configuration
config_version = 1
mode = "single"
embedding_dim = 16
hidden_size = 16
feature_dim = 16
dense_widths = [32]
epochs = 6
batch_size = 16
learning_rate = 0.003
vocab_budget = 300
max_len = 64
"""


@pytest.fixture(scope="module")
def corpus_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "corpus.jsonl"
    spec = {"gender": "gender_codes", "description": "descriptions"}
    ingest.save_jsonl(ingest.generate_synthetic_corpus(spec, 30, seed=2), path)
    return path


@pytest.fixture(scope="module")
def trained(tmp_path_factory, corpus_path):
    d = tmp_path_factory.mktemp("model")
    cfg = d / "cfg.toml"
    cfg.write_text(CONFIG)
    model = d / "model.dcom"
    split = d / "split.json"
    code = main([
        "train", "--data", str(corpus_path), "--config", str(cfg),
        "--out", str(model), "--split-out", str(split), "--seed", "1",
    ])
    assert code == 0
    return model, split


class TestConfigFile:
    def test_parse(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text(CONFIG)
        config = parse_config_file(path)
        assert config.mode == "single"
        assert config.dense_widths == (32,)
        assert config.learning_rate == 0.003

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text("config_version = 1\nnot_a_key = 3\n")
        with pytest.raises(ConfigError, match="unknown config keys"):
            parse_config_file(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text("config_version = 99\n")
        with pytest.raises(DcomError, match="config_version"):
            parse_config_file(path)


class TestSynth:
    def test_synth_writes_jsonl(self, tmp_path, capsys):
        out = tmp_path / "c.jsonl"
        assert main(["synth", "--out", str(out), "--n-per-class", "3", "--seed", "4"]) == 0
        instances, vocab = ingest.load_dataset(out, "jsonl")
        assert len(instances) == 3 * len(ingest.DEFAULT_CLASS_SPEC)
        assert len(vocab) == len(ingest.DEFAULT_CLASS_SPEC)


class TestTrainPredictEvaluate:
    def test_train_outputs(self, trained):
        model, split = trained
        assert model.exists() and split.exists()
        log = model.parent / (model.name + ".epochs.csv")
        rows = list(csv.DictReader(open(log)))
        assert len(rows) == 6
        assert set(rows[0]) >= {"epoch", "train_loss", "val_f1", "learning_rate"}

    def test_predict(self, trained, corpus_path, tmp_path):
        model, _ = trained
        out = tmp_path / "preds.jsonl"
        code = main(["predict", "--model", str(model), "--data", str(corpus_path),
                     "--out", str(out), "--k", "3", "--seed", "0"])
        assert code == 0
        records = [json.loads(line) for line in open(out)]
        assert len(records) == 60
        assert all({"source", "label", "confidence", "votes"} <= set(r) for r in records)
        assert all(sum(r["votes"].values()) == 3 for r in records)

    def test_evaluate(self, trained, corpus_path, tmp_path):
        model, split = trained
        out = tmp_path / "metrics.json"
        table = tmp_path / "per_class.csv"
        code = main(["evaluate", "--model", str(model), "--data", str(corpus_path),
                     "--split", str(split), "--k", "1", "--out", str(out),
                     "--table", str(table), "--seed", "0"])
        assert code == 0
        report = json.loads(out.read_text())
        assert 0.0 <= report["f1_weighted"] <= 1.0
        assert report["size_mb"] > 0
        rows = list(csv.DictReader(open(table)))
        assert {r["class"] for r in rows} == {"gender", "description"}

    def test_predict_malformed_line_exit_2(self, trained, tmp_path, capsys):
        model, _ = trained
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"label":"x","values":["a"]}\n{oops\n')
        code = main(["predict", "--model", str(model), "--data", str(bad)])
        assert code == 2
        assert "line 2" in capsys.readouterr().err

    def test_end_to_end_determinism(self, trained, corpus_path, tmp_path):
        model, split = trained
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            main(["evaluate", "--model", str(model), "--data", str(corpus_path),
                  "--split", str(split), "--k", "1", "--out", str(out), "--seed", "9"])
            report = json.loads(out.read_text())
            report.pop("runtime_mean_s")
            report.pop("runtime_std_s")
            outs.append(report)
        assert outs[0] == outs[1]


class TestAugmentCommand:
    def test_single_stream(self, corpus_path, tmp_path):
        out = tmp_path / "aug.jsonl"
        assert main(["augment", "--data", str(corpus_path), "--mode", "single",
                     "--out", str(out), "--seed", "1"]) == 0
        records = [json.loads(line) for line in open(out)]
        assert len(records) == 60
        assert all("text" in r and "r" in r for r in records)

    def test_multi_stream(self, corpus_path, tmp_path):
        out = tmp_path / "aug.jsonl"
        assert main(["augment", "--data", str(corpus_path), "--mode", "multi",
                     "--r", "6", "--out", str(out), "--seed", "1"]) == 0
        records = [json.loads(line) for line in open(out)]
        assert all(len(r["texts"]) == 6 and len(r["mask"]) == 6 for r in records)


class TestFeaturesDump:
    def test_dump_matches_oracle(self, corpus_path, tmp_path):
        out = tmp_path / "features.csv"
        assert main(["features", "dump", "--data", str(corpus_path),
                     "--out", str(out)]) == 0
        instances, _ = ingest.load_dataset(corpus_path, "jsonl")
        rows = list(csv.DictReader(open(out)))
        assert len(rows) == len(instances)
        for row, inst in zip(rows[:10], instances[:10]):
            expected = oracle_features(list(inst.values))
            got = [float(row[name]) for name in FEATURE_NAMES]
            np.testing.assert_allclose(got, expected, atol=1e-9)


class TestExplainCommand:
    def test_explain(self, trained, tmp_path, capsys):
        model, _ = trained
        csv_out = tmp_path / "imp.csv"
        assert main(["explain", "--model", str(model), "--csv", str(csv_out)]) == 0
        assert "Rank" in capsys.readouterr().out
        assert len(csv_out.read_text().splitlines()) == 20


class TestExitCodes:
    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert main(["synth", "--nope"]) == 1

    def test_missing_file(self, capsys):
        assert main(["predict", "--model", "no.dcom", "--data", "no.jsonl"]) == 2
