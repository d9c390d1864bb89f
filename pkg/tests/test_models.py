import datetime as dt

import numpy as np
import pytest

from causalcalib.errors import InputError
from causalcalib.losses import LossConfig, LossKind
from causalcalib.metrics import brier, reliability
from causalcalib.models import (
    Dan3Config,
    VolLstmConfig,
    VolTable,
    evaluate_classifier,
    predict_vol,
    stratified_split,
    train_dan3,
    train_vol_lstm,
)
from causalcalib.models.dan3 import (
    _build_model,
    build_vocab,
    load_embedding_text,
    save_checkpoint as save_dan3,
    load_checkpoint as load_dan3,
)
from causalcalib.models.vol_lstm import (
    build_supervised,
    checkpoint_to_dict,
    load_checkpoint as load_vol,
    save_checkpoint as save_vol,
)
from causalcalib.ingest import LabeledDoc
from causalcalib.rng import CounterRng
from causalcalib.synth import gen_keyword_corpus


def dates_for(n):
    return [dt.date(2022, 1, 3) + dt.timedelta(days=i) for i in range(n)]


def coupled_vol_table(seed, n=400):
    """Next-day volatility is 0.9 * today's plus 0.1 * today's sentiment."""
    rng = CounterRng(seed)
    sent = rng.normal(n + 100)
    vol = np.zeros(n + 100)
    for t in range(1, n + 100):
        vol[t] = 0.9 * vol[t - 1] + 0.1 * sent[t - 1]
    return VolTable(dates=dates_for(n), target=vol[100:], sentiment=sent[100:])


class TestVolLstm:
    def test_constant_target_is_learned_exactly(self):
        table = VolTable(dates=dates_for(80), target=np.full(80, 3.7))
        cfg = VolLstmConfig(epochs=2, hidden=8, seed=0)
        model, _ = train_vol_lstm(table, cfg)
        _, actual, pred = predict_vol(model, table)
        n_train = model.n_train_samples
        test_mse = float(np.mean((pred[n_train:] - actual[n_train:]) ** 2))
        assert test_mse < 1e-4

    def test_sine_wave_capacity(self):
        t = np.arange(200)
        table = VolTable(dates=dates_for(200), target=np.sin(0.1 * t))
        cfg = VolLstmConfig(epochs=100, seed=1)
        model, log = train_vol_lstm(table, cfg)
        assert log[-1].train_mse < 1e-2

    def test_sentiment_feature_helps_on_coupled_series(self):
        table = coupled_vol_table(seed=0)
        mses = {}
        for dim in (1, 2):
            cfg = VolLstmConfig(input_dim=dim, epochs=15, seed=0)
            model, _ = train_vol_lstm(table, cfg)
            _, actual, pred = predict_vol(model, table)
            k = model.n_train_samples
            mses[dim] = float(np.mean((pred[k:] - actual[k:]) ** 2))
        assert mses[2] < mses[1]

    def test_predict_on_train_window_matches_logged_mse(self):
        table = coupled_vol_table(seed=3, n=150)
        cfg = VolLstmConfig(input_dim=2, epochs=3, hidden=16, seed=3)
        model, log = train_vol_lstm(table, cfg)
        _, actual, pred = predict_vol(model, table)
        k = model.n_train_samples
        train_mse = float(np.mean((pred[:k] - actual[:k]) ** 2))
        assert train_mse == pytest.approx(log[-1].train_mse, abs=1e-9)

    def test_checkpoint_roundtrip_bit_exact(self, tmp_path):
        table = coupled_vol_table(seed=4, n=120)
        cfg = VolLstmConfig(input_dim=2, epochs=2, hidden=12, seed=4)
        model, _ = train_vol_lstm(table, cfg)
        path = tmp_path / "ckpt.json"
        save_vol(path, model)
        loaded = load_vol(path)
        assert checkpoint_to_dict(loaded) == checkpoint_to_dict(model)
        _, _, pred_a = predict_vol(model, table)
        _, _, pred_b = predict_vol(loaded, table)
        assert np.array_equal(pred_a, pred_b)
        # two loads of the same file agree bit for bit
        _, _, pred_c = predict_vol(load_vol(path), table)
        assert np.array_equal(pred_b, pred_c)

    def test_seed_determinism_to_the_last_bit(self):
        table = coupled_vol_table(seed=5, n=120)
        cfg = VolLstmConfig(input_dim=2, epochs=3, hidden=12, seed=11)
        model_a, log_a = train_vol_lstm(table, cfg)
        model_b, log_b = train_vol_lstm(table, cfg)
        assert log_a[-1].train_loss_scaled == log_b[-1].train_loss_scaled
        assert log_a[-1].train_mse == log_b[-1].train_mse
        assert np.array_equal(model_a.head.weight, model_b.head.weight)

    def test_chronological_split(self):
        table = coupled_vol_table(seed=6, n=100)
        cfg = VolLstmConfig(input_dim=2, seed=0, train_fraction=0.8)
        _, y, sample_dates = build_supervised(table, cfg)
        n_train = int(len(y) * 0.8)
        assert max(sample_dates[:n_train]) < min(sample_dates[n_train:])

    def test_scalers_fit_on_train_only(self):
        table = coupled_vol_table(seed=7, n=150)
        cfg = VolLstmConfig(input_dim=2, epochs=1, hidden=8, seed=0)
        model, _ = train_vol_lstm(table, cfg)
        x, y, _ = build_supervised(table, cfg)
        k = model.n_train_samples
        for j, scaler in enumerate(model.feature_scalers):
            assert scaler.lo == x[:k, :, j].min()
            assert scaler.hi == x[:k, :, j].max()
        assert model.target_scaler.lo == y[:k].min()
        assert model.target_scaler.hi == y[:k].max()

    def test_nan_in_table_names_the_date(self):
        target = np.ones(50)
        target[7] = np.nan
        table = VolTable(dates=dates_for(50), target=target)
        with pytest.raises(InputError, match="2022-01-10"):
            train_vol_lstm(table, VolLstmConfig(epochs=1, hidden=4))

    def test_sentiment_config_requires_sentiment_column(self):
        table = VolTable(dates=dates_for(50), target=np.ones(50))
        with pytest.raises(InputError, match="sentiment"):
            train_vol_lstm(table, VolLstmConfig(input_dim=2, epochs=1, hidden=4))

    def test_too_short_table(self):
        table = VolTable(dates=dates_for(8), target=np.arange(8.0))
        with pytest.raises(InputError, match="need more than"):
            train_vol_lstm(table, VolLstmConfig(epochs=1, hidden=4))


@pytest.fixture(scope="module")
def clean_corpus():
    return gen_keyword_corpus(4, 20, 500, 20, 0.0, seed=0)


class TestDan3:
    @pytest.mark.parametrize("kind", [LossKind.CE, LossKind.FL, LossKind.FCL])
    def test_separable_corpus_high_accuracy(self, clean_corpus, kind):
        cfg = Dan3Config(
            epochs=8, seed=0, max_seq_len=32, loss=LossConfig(kind=kind, gamma=2.0, lam=0.1)
        )
        model, _ = train_dan3(clean_corpus, cfg)
        test_docs = [clean_corpus[i] for i in model.split.test_indices]
        ev = evaluate_classifier(model, test_docs)
        assert ev.accuracy >= 0.95

    def test_single_document_corpus_errors(self):
        with pytest.raises(InputError, match="class absent from train split"):
            train_dan3([LabeledDoc(label="only", text="one doc")], Dan3Config(epochs=1))

    def test_single_class_corpus_errors(self):
        docs = [LabeledDoc(label="a", text=f"doc {i}") for i in range(10)]
        with pytest.raises(InputError, match="at least 2 classes"):
            train_dan3(docs, Dan3Config(epochs=1))

    def test_duplicating_tokens_keeps_predictions(self):
        docs = (
            [LabeledDoc("a", f"alpha beta w{i}") for i in range(10)]
            + [LabeledDoc("b", f"gamma delta w{i}") for i in range(10)]
        )
        cfg = Dan3Config(epochs=2, seed=0, max_seq_len=12, embed_dim=8, hidden_dims=(8, 8, 8))
        model, _ = train_dan3(docs, cfg)
        single = model.predict_probs([LabeledDoc("a", "alpha beta w1")])
        doubled = model.predict_probs([LabeledDoc("a", "alpha alpha beta beta w1 w1")])
        assert np.allclose(single, doubled, atol=1e-12)

    def test_seed_determinism(self, clean_corpus):
        cfg = Dan3Config(epochs=2, seed=5, max_seq_len=32)
        _, log_a = train_dan3(clean_corpus[::10], cfg)
        _, log_b = train_dan3(clean_corpus[::10], cfg)
        assert [(r.loss, r.accuracy) for r in log_a] == [(r.loss, r.accuracy) for r in log_b]

    def test_checkpoint_roundtrip(self, tmp_path, clean_corpus):
        cfg = Dan3Config(epochs=2, seed=6, max_seq_len=32, embed_dim=16, hidden_dims=(16, 16, 16))
        model, _ = train_dan3(clean_corpus[::6], cfg)
        path = tmp_path / "dan3.json"
        save_dan3(path, model)
        loaded = load_dan3(path)
        docs = clean_corpus[:20]
        assert np.array_equal(model.predict_probs(docs), loaded.predict_probs(docs))
        assert loaded.labels == model.labels
        assert loaded.split.test_indices.tolist() == model.split.test_indices.tolist()

    def test_evaluate_unknown_label_rejected(self, clean_corpus):
        cfg = Dan3Config(epochs=1, seed=0, max_seq_len=32, embed_dim=8, hidden_dims=(8, 8, 8))
        model, _ = train_dan3(clean_corpus[::10], cfg)
        with pytest.raises(InputError, match="not in the training label set"):
            evaluate_classifier(model, [LabeledDoc("mystery", "whatever")])


class TestEvaluateClassifier:
    def constant_model(self, labels, hot=0, saturate=True):
        """A model that predicts one class with probability one."""
        vocab = build_vocab([LabeledDoc(lab, f"token{i}") for i, lab in enumerate(labels)])
        cfg = Dan3Config(epochs=1, embed_dim=4, hidden_dims=(4, 4, 4), max_seq_len=4)
        model = _build_model(cfg, vocab, list(labels), CounterRng(0))
        model.head.weight[:] = 0.0
        model.head.bias[:] = 0.0
        model.head.bias[hot] = 1000.0 if saturate else 1.0
        return model

    def test_perfect_classifier_scores_zero(self):
        labels = ["a", "b"]
        model = self.constant_model(labels, hot=0)
        docs = [LabeledDoc("a", "token0") for _ in range(10)]
        ev = evaluate_classifier(model, docs)
        assert round(ev.classification_error_pct, 2) == 0.00
        assert round(ev.ece_pct, 2) == 0.00

    def test_majority_constant_on_balanced_four_class(self):
        labels = ["a", "b", "c", "d"]
        model = self.constant_model(labels, hot=0)
        docs = [LabeledDoc(lab, "token0") for lab in labels for _ in range(5)]
        ev = evaluate_classifier(model, docs)
        assert round(ev.classification_error_pct, 2) == 75.00

    def test_metrics_match_recomputation_from_dump(self, tmp_path):
        from causalcalib.cli import _write_predictions_csv, read_predictions_csv

        corpus = gen_keyword_corpus(3, 6, 60, 12, 0.1, seed=9)
        cfg = Dan3Config(epochs=3, seed=2, max_seq_len=16, embed_dim=12, hidden_dims=(12, 12, 12))
        model, _ = train_dan3(corpus, cfg)
        docs = [corpus[i] for i in model.split.test_indices]
        ev = evaluate_classifier(model, docs, m=15)
        path = tmp_path / "preds.csv"
        _write_predictions_csv(path, ev.batch, model.labels)
        reread = read_predictions_csv(path)
        bins = reliability(reread, 15)
        assert bins.ece == pytest.approx(ev.bins.ece, abs=1e-9)
        assert bins.mce == pytest.approx(ev.bins.mce, abs=1e-9)
        assert brier(reread) == pytest.approx(ev.brier, abs=1e-9)


class TestStratifiedSplit:
    def test_every_class_in_both_splits(self):
        labels = ["a"] * 10 + ["b"] * 6 + ["c"] * 4
        split = stratified_split(labels, 0.2, CounterRng(1))
        train_labels = {labels[i] for i in split.train_indices}
        test_labels = {labels[i] for i in split.test_indices}
        assert train_labels == test_labels == {"a", "b", "c"}
        assert set(split.train_indices) & set(split.test_indices) == set()
        assert len(split.train_indices) + len(split.test_indices) == 20

    def test_single_member_class_errors(self):
        with pytest.raises(InputError, match="class absent from train split"):
            stratified_split(["a", "a", "b"], 0.2, CounterRng(0))


class TestEmbeddingFile:
    def test_load_overwrites_known_words(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("alpha 1.0 2.0 3.0\nunknownword 9.0 9.0 9.0\n")
        vocab = {"<pad>": 0, "<unk>": 1, "alpha": 2}
        table = np.zeros((3, 3))
        hits = load_embedding_text(path, vocab, 3, table)
        assert hits == 1
        assert np.array_equal(table[2], [1.0, 2.0, 3.0])

    def test_dim_mismatch_rejected(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("alpha 1.0 2.0\n")
        with pytest.raises(InputError, match="dim mismatch"):
            load_embedding_text(path, {"alpha": 0}, 3, np.zeros((1, 3)))
