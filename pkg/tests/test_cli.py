import json

import pytest

from vtc.cli import run
from vtc.metrics import EvalReport, expected_random_pair

TINY_MODEL = ["--d_x", "8", "--hidden", "6", "--d_q", "8", "--depth", "2", "--epochs", "2"]


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert run(["datagen", "--seed", "3", "--n_sentences", "80", "--d_v", "8", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def model(data_dir, tmp_path_factory):
    ck = tmp_path_factory.mktemp("model") / "m.vtck"
    assert run(["train", "--seed", "0", "--corpus", str(data_dir), "--checkpoint", str(ck), *TINY_MODEL]) == 0
    return ck


def test_datagen_layout(data_dir):
    for name in ("sentences.jsonl", "train.jsonl", "val.jsonl", "test.jsonl", "features.vtcf"):
        assert (data_dir / name).exists()


def test_datagen_is_deterministic(data_dir, tmp_path):
    assert run(["datagen", "--seed", "3", "--n_sentences", "80", "--d_v", "8", "--out", str(tmp_path)]) == 0
    for name in ("train.jsonl", "test.jsonl", "features.vtcf"):
        assert (tmp_path / name).read_bytes() == (data_dir / name).read_bytes()


def test_datagen_multi_k(tmp_path):
    assert run(["datagen", "--seed", "1", "--n_sentences", "60", "--k", "2", "--out", str(tmp_path)]) == 0
    test = [json.loads(line) for line in (tmp_path / "test.jsonl").read_text().splitlines()]
    train = [json.loads(line) for line in (tmp_path / "train.jsonl").read_text().splitlines()]
    assert all(len(r["corruptions"]) == 2 for r in test)
    assert all(len(r["corruptions"]) == 1 for r in train)


def test_train_and_eval_round_trip(data_dir, model, tmp_path, capsys):
    report = tmp_path / "r.json"
    assert run(["eval", "--corpus", str(data_dir), "--checkpoint", str(model), "--report", str(report)]) == 0
    rep = EvalReport.loads(report.read_text())
    assert 0 <= rep.correction_accuracy <= rep.detection_accuracy <= 1
    assert "correction MAP" in capsys.readouterr().out


def test_training_is_bit_identical(data_dir, model, tmp_path):
    ck = tmp_path / "again.vtck"
    assert run(["train", "--seed", "0", "--corpus", str(data_dir), "--checkpoint", str(ck), *TINY_MODEL]) == 0
    assert ck.read_bytes() == model.read_bytes()


def test_config_file_with_flag_override(data_dir, model, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 0, "d_x": 8, "hidden": 6, "d_q": 8, "depth": 2, "epochs": 5}))
    ck = tmp_path / "c.vtck"
    assert run(["train", "--config", str(cfg), "--epochs", "2", "--corpus", str(data_dir), "--checkpoint", str(ck)]) == 0
    assert ck.read_bytes() == model.read_bytes()


def test_oracle_eval_is_perfect(data_dir, tmp_path):
    report = tmp_path / "o.json"
    assert run(["eval", "--corpus", str(data_dir), "--oracle", "--report", str(report)]) == 0
    rep = EvalReport.loads(report.read_text())
    assert rep.detection_accuracy == rep.correction_accuracy == rep.map == 1.0


def test_random_eval_is_near_chance(tmp_path):
    assert run(["datagen", "--seed", "5", "--n_sentences", "3000", "--out", str(tmp_path)]) == 0
    report = tmp_path / "rand.json"
    assert run(["eval", "--corpus", str(tmp_path), "--random_scores", "--seed", "1", "--report", str(report)]) == 0
    rep = EvalReport.loads(report.read_text())
    lines = (tmp_path / "test.jsonl").read_text().splitlines()
    lengths = [len(json.loads(line)["tokens"]) for line in lines]
    n_beta = len({c["original"] for line in lines for c in json.loads(line)["corruptions"]})
    p = expected_random_pair(lengths, n_beta)
    assert abs(rep.correction_accuracy - p) < 4 * (p / len(lines)) ** 0.5 + 1 / len(lines)


def test_predict_json(model, data_dir, capsys):
    vid = json.loads((data_dir / "test.jsonl").read_text().splitlines()[0])["video_id"]
    code = run(["predict", "--checkpoint", str(model), "--features", str(data_dir / "features.vtcf"),
                "--sentence", "Someone Zorbles the apple", "--feature_id", vid, "--json"])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["tokens"] == ["someone", "zorbles", "the", "apple"]
    assert 1 in out["unk_positions"]
    assert len(out["predictions"]) == 1


@pytest.mark.parametrize(
    "argv,code",
    [
        (["train", "--corpus", "x", "--checkpoint", "y"], 2),
        (["train", "--seed", "0", "--kernel_size", "4", "--corpus", "x", "--checkpoint", "y"], 2),
        (["train", "--seed", "0", "--corpus", "/nonexistent/train.jsonl", "--checkpoint", "y"], 3),
        (["eval", "--corpus", "/nonexistent.jsonl", "--checkpoint", "y"], 3),
    ],
)
def test_exit_codes(argv, code):
    assert run(argv) == code


def test_unknown_config_field(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(["datagen", "--config", str(cfg), "--seed", "0", "--out", str(tmp_path)]) == 2


def test_bad_checkpoint_magic(data_dir, tmp_path):
    bad = tmp_path / "bad.vtck"
    bad.write_bytes(b"NOPE" + bytes(20))
    assert run(["eval", "--corpus", str(data_dir), "--checkpoint", str(bad)]) == 3


def test_sentence_too_long(model, data_dir):
    long = " ".join(["apple"] * 200)
    assert run(["predict", "--checkpoint", str(model), "--features", str(data_dir / "features.vtcf"),
                "--sentence", long, "--feature_id", "syn00.v"]) == 4
