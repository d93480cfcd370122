import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from vtc import VisualTextCorrector
from vtc.exceptions import CompatibilityError, ConfigError, ContractError, CorpusError, LengthError
from vtc.forge import Corruption, FeatureStore, VtcSample

SMALL = dict(d_x=8, hidden=6, d_q=8, depth=2, epochs=3, random_state=0)


@pytest.fixture(scope="module")
def fitted(tiny_corpus):
    _, store, samples = tiny_corpus
    return VisualTextCorrector(**SMALL).fit(samples, features=store, validation=samples[:20])


def test_sklearn_params_and_clone():
    est = VisualTextCorrector(**SMALL)
    assert est.get_params()["d_x"] == 8
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    est.set_params(lr=0.01)
    assert est.lr == 0.01


def test_unfitted_estimator():
    with pytest.raises(NotFittedError):
        VisualTextCorrector().predict([])


def test_history_and_candidates(fitted, tiny_corpus):
    _, _, samples = tiny_corpus
    assert [h["epoch"] for h in fitted.history_] == list(range(1, fitted.n_epochs_ + 1))
    assert {"loss", "l_d", "l_f", "val_detection", "val_correction"} <= set(fitted.history_[0])
    for h in fitted.history_:
        assert h["loss"] == pytest.approx(h["l_d"] + h["l_f"], rel=1e-5)
    assert set(fitted.beta_words_) == {c.original for s in samples for c in s.corruptions}
    assert fitted.beta_words_ == sorted(fitted.beta_words_)


def test_predict_shapes(fitted, tiny_corpus):
    _, store, samples = tiny_corpus
    out = fitted.predict(samples[:5], store, k=2)
    for s, rows in zip(samples[:5], out):
        assert len(rows) == 2
        for pos, word, score in rows:
            assert 0 <= pos < len(s.tokens)
            assert word in fitted.beta_words_
            assert score <= 0
    scores = fitted.decision_function(samples[:3], store)
    assert [d.shape for d in scores] == [(len(s.tokens),) for s in samples[:3]]


def test_top_k_predictions_are_nested(fitted, tiny_corpus):
    _, store, samples = tiny_corpus
    one = fitted.predict(samples[:10], store, k=1)
    three = fitted.predict(samples[:10], store, k=3)
    for a, b in zip(one, three):
        assert a[0][0] in [p for p, _, _ in b]


def test_evaluate_and_score(fitted, tiny_corpus):
    _, store, samples = tiny_corpus
    rep = fitted.evaluate(samples, store)
    assert 0 <= rep.correction_accuracy <= rep.detection_accuracy <= 1
    assert fitted.score(samples, features=store) == rep.correction_accuracy


def test_fit_is_deterministic(tiny_corpus, tmp_path):
    _, store, samples = tiny_corpus
    for name in ("a", "b"):
        VisualTextCorrector(**SMALL).fit(samples, features=store).save(tmp_path / f"{name}.vtck")
    assert (tmp_path / "a.vtck").read_bytes() == (tmp_path / "b.vtck").read_bytes()


def test_text_only_needs_no_features(tiny_corpus):
    _, _, samples = tiny_corpus
    est = VisualTextCorrector(**{**SMALL, "epochs": 1}, visual="none").fit(samples)
    assert len(est.predict(samples[:2])) == 2


def test_input_contracts(fitted, tiny_corpus):
    _, store, samples = tiny_corpus
    with pytest.raises(CompatibilityError):
        fitted.predict(samples[:2], None)
    with pytest.raises(CompatibilityError):
        fitted.predict(samples[:2], FeatureStore(3, {s.video_id: np.zeros(3) for s in samples[:2]}))
    long = VtcSample(["the"] * 100, ["DT"] * 100, [], samples[0].video_id)
    with pytest.raises(LengthError):
        fitted.predict([long], store)
    with pytest.raises(ConfigError):
        fitted.predict(samples[:1], store, k=0)
    with pytest.raises(ContractError):
        fitted.predict(samples[:1], store, k=len(samples[0].tokens) + 1)


def test_training_needs_single_corruptions(tiny_corpus):
    sentences, store, samples = tiny_corpus
    s = sentences[0]
    toks = list(s.tokens)
    toks[s.blanks[0]], toks[s.blanks[1]] = "x", "y"
    double = VtcSample(toks, s.tags, [Corruption(s.blanks[0], s.tokens[s.blanks[0]], "x"), Corruption(s.blanks[1], s.tokens[s.blanks[1]], "y")], s.video_id)
    with pytest.raises(ContractError):
        VisualTextCorrector(**SMALL).fit([double], features=store)


def test_degenerate_candidate_set(tiny_corpus):
    _, store, samples = tiny_corpus
    same = [s for s in samples if s.corruptions[0].original == samples[0].corruptions[0].original]
    with pytest.raises(CorpusError):
        VisualTextCorrector(**SMALL).fit(same, features=store)


@pytest.mark.parametrize("bad", [dict(paths="rnn"), dict(visual="attn"), dict(kernel_size=4), dict(optimizer="lbfgs"), dict(batch_size=0)])
def test_bad_params_raise_config_error(bad, tiny_corpus):
    _, store, samples = tiny_corpus
    with pytest.raises(ConfigError):
        VisualTextCorrector(**{**SMALL, **bad}).fit(samples, features=store)
