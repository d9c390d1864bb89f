"""Deep averaging network text classifier (3 hidden blocks).

Pipeline: lowercase tokenization on non-alphanumeric boundaries, vocabulary
ids with pad/unk built from the train split only, embedding mean-pool,
three dense+batchnorm+ReLU blocks, and a softmax head trained with the
configured loss (cross-entropy, focal, or focal-calibration).

The train/test split is stratified per label and seeded; batch
normalization freezes its running statistics at the end of training.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import InputError, NumericError
from ..ingest import LabeledDoc
from ..losses import LossConfig, LossKind, PredictionBatch
from ..metrics import ReliabilityBins, brier, reliability
from ..nn import BatchNormLayer, DenseLayer, EmbeddingMeanLayer, Tensor2D, adam_step, init_adam, relu, relu_backward, softmax
from ..rng import PRNG_ID, CounterRng

CHECKPOINT_FORMAT = "dan3-v1"

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on everything that is not a letter or digit."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Dan3Config:
    embed_dim: int = 100
    hidden_dims: tuple[int, ...] = (100, 100, 100)
    epochs: int = 20
    batch_size: int = 32
    lr: float = 1e-3
    max_seq_len: int = 64
    test_fraction: float = 0.2
    loss: LossConfig = field(default_factory=LossConfig)
    seed: int = 0
    embedding_path: str | None = None

    def validate(self) -> None:
        if len(self.hidden_dims) != 3:
            raise InputError("the classifier contract is exactly 3 hidden layers")
        if self.max_seq_len < 1:
            raise InputError("max_seq_len must be >= 1")
        if self.epochs < 1 or self.batch_size < 1:
            raise InputError("epochs and batch size must be positive")
        if not (0.0 < self.test_fraction < 1.0):
            raise InputError("test_fraction must be in (0, 1)")
        self.loss.validate()


@dataclass
class SupervisedSplit:
    train_indices: np.ndarray
    test_indices: np.ndarray


@dataclass
class LogRow:
    epoch: int
    split: str
    loss: float
    accuracy: float


def stratified_split(labels: list[str], test_fraction: float, rng: CounterRng) -> SupervisedSplit:
    """Seeded per-label split; every class keeps at least one test document."""
    by_label: dict[str, list[int]] = {}
    for i, lab in enumerate(labels):
        by_label.setdefault(lab, []).append(i)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for lab in sorted(by_label):
        idx = np.array(by_label[lab])
        perm = rng.permutation(len(idx))
        n_test = max(1, int(round(test_fraction * len(idx))))
        test_part = idx[perm[:n_test]]
        train_part = idx[perm[n_test:]]
        if len(train_part) == 0:
            raise InputError(f"class absent from train split: {lab!r}")
        train_idx.extend(train_part.tolist())
        test_idx.extend(test_part.tolist())
    return SupervisedSplit(
        train_indices=np.array(sorted(train_idx)),
        test_indices=np.array(sorted(test_idx)),
    )


def build_vocab(docs: list[LabeledDoc]) -> dict[str, int]:
    words = sorted({tok for doc in docs for tok in tokenize(doc.text)})
    if not words:
        raise InputError("empty vocabulary: no tokens in the training documents")
    vocab = {PAD_TOKEN: 0, UNK_TOKEN: 1}
    for w in words:
        vocab[w] = len(vocab)
    return vocab


def vectorize(docs: list[LabeledDoc], vocab: dict[str, int], max_seq_len: int) -> np.ndarray:
    """Token-id matrix, truncated and padded to max_seq_len."""
    out = np.zeros((len(docs), max_seq_len), dtype=int)
    unk = vocab[UNK_TOKEN]
    for i, doc in enumerate(docs):
        ids = [vocab.get(tok, unk) for tok in tokenize(doc.text)[:max_seq_len]]
        out[i, : len(ids)] = ids
    return out


def load_embedding_text(path: str | Path, vocab: dict[str, int], dim: int, table: np.ndarray) -> int:
    """Overwrite table rows for vocab words found in a GloVe-style text file.

    Each line is a word followed by its vector components. Returns how many
    vocabulary words were initialized from the file.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"embedding file not found: {path}")
    hits = 0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            word = parts[0]
            if word not in vocab:
                continue
            if len(parts) - 1 != dim:
                raise InputError(
                    f"embedding dim mismatch on line {line_no}: got {len(parts) - 1}, need {dim}"
                )
            table[vocab[word]] = np.asarray([float(v) for v in parts[1:]])
            hits += 1
    return hits


@dataclass
class Dan3Model:
    config: Dan3Config
    vocab: dict[str, int]
    labels: list[str]
    embedding: EmbeddingMeanLayer
    blocks: list[tuple[DenseLayer, BatchNormLayer]]
    head: DenseLayer
    split: SupervisedSplit | None = None

    def params(self) -> list[np.ndarray]:
        out = self.embedding.params()
        for dense, bn in self.blocks:
            out.extend(dense.params())
            out.extend(bn.params())
        out.extend(self.head.params())
        return out

    def forward(self, token_ids: np.ndarray, training: bool) -> np.ndarray:
        """Logits for a batch of token-id rows."""
        h = self.embedding.forward(token_ids)
        self._pre_relu: list[np.ndarray] = []
        for dense, bn in self.blocks:
            h = dense.forward(h)
            h = bn.forward(h, training=training)
            self._pre_relu.append(h)
            h = relu(h)
        return self.head.forward(h)

    def backward(self, grad_logits: np.ndarray) -> list[np.ndarray]:
        grad, grad_w_head, grad_b_head = self.head.backward(grad_logits)
        block_grads: list[list[np.ndarray]] = []
        for (dense, bn), pre in zip(reversed(self.blocks), reversed(self._pre_relu)):
            grad = relu_backward(grad, pre)
            grad, grad_scale, grad_shift = bn.backward(grad)
            grad, grad_w, grad_b = dense.backward(grad)
            block_grads.append([grad_w, grad_b, grad_scale, grad_shift])
        grad_table = self.embedding.backward(grad)
        grads: list[np.ndarray] = [grad_table]
        for g in reversed(block_grads):
            grads.extend(g)
        grads.extend([grad_w_head, grad_b_head])
        return grads

    def predict_probs(self, docs: list[LabeledDoc]) -> np.ndarray:
        ids = vectorize(docs, self.vocab, self.config.max_seq_len)
        return softmax(self.forward(ids, training=False))


def _build_model(cfg: Dan3Config, vocab: dict[str, int], labels: list[str], rng: CounterRng) -> Dan3Model:
    embedding = EmbeddingMeanLayer.init(rng, len(vocab), cfg.embed_dim, pad_id=vocab[PAD_TOKEN])
    if cfg.embedding_path is not None:
        load_embedding_text(cfg.embedding_path, vocab, cfg.embed_dim, embedding.table)
    blocks = []
    in_dim = cfg.embed_dim
    for width in cfg.hidden_dims:
        blocks.append((DenseLayer.init(rng, in_dim, width), BatchNormLayer(width)))
        in_dim = width
    head = DenseLayer.init(rng, in_dim, len(labels))
    return Dan3Model(config=cfg, vocab=vocab, labels=labels, embedding=embedding, blocks=blocks, head=head)


def _eval_split(model: Dan3Model, ids: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    probs = softmax(model.forward(ids, training=False))
    batch = PredictionBatch(probs=probs, labels=y)
    loss, _ = model.config.loss.compute(batch)
    accuracy = float((probs.argmax(axis=1) == y).mean())
    return loss, accuracy


def train_dan3(corpus: list[LabeledDoc], cfg: Dan3Config) -> tuple[Dan3Model, list[LogRow]]:
    """Train on a stratified split of the corpus; deterministic per seed."""
    cfg.validate()
    if not corpus:
        raise InputError("empty corpus")
    rng = CounterRng(cfg.seed)
    split = stratified_split([d.label for d in corpus], cfg.test_fraction, rng)
    train_docs = [corpus[i] for i in split.train_indices]
    labels = sorted({d.label for d in train_docs})
    if len(labels) < 2:
        raise InputError("need at least 2 classes in the train split")
    label_to_id = {lab: i for i, lab in enumerate(labels)}
    for d in corpus:
        if d.label not in label_to_id:
            raise InputError(f"class absent from train split: {d.label!r}")

    vocab = build_vocab(train_docs)
    model = _build_model(cfg, vocab, labels, rng)
    model.split = split

    train_ids = vectorize(train_docs, vocab, cfg.max_seq_len)
    train_y = np.array([label_to_id[d.label] for d in train_docs])
    test_docs = [corpus[i] for i in split.test_indices]
    test_ids = vectorize(test_docs, vocab, cfg.max_seq_len)
    test_y = np.array([label_to_id[d.label] for d in test_docs])

    params = model.params()
    adam = init_adam(params, lr=cfg.lr)
    n_train = len(train_docs)
    log: list[LogRow] = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n_train)
        for start in range(0, n_train, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            if len(idx) < 2:
                continue  # batch norm cannot standardize a single row
            logits = model.forward(train_ids[idx], training=True)
            probs = softmax(logits)
            batch = PredictionBatch(probs=probs, labels=train_y[idx])
            loss, grad_logits = cfg.loss.compute(batch)
            if not math.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size}")
            grads = model.backward(grad_logits)
            adam_step(adam, params, grads)
        train_loss, train_acc = _eval_split(model, train_ids, train_y)
        test_loss, test_acc = _eval_split(model, test_ids, test_y)
        log.append(LogRow(epoch=epoch, split="train", loss=train_loss, accuracy=train_acc))
        log.append(LogRow(epoch=epoch, split="test", loss=test_loss, accuracy=test_acc))
    return model, log


@dataclass
class ClassifierEval:
    classification_error_pct: float
    ece_pct: float
    mce_pct: float
    brier: float
    accuracy: float
    bins: ReliabilityBins
    batch: PredictionBatch


def evaluate_classifier(model: Dan3Model, docs: list[LabeledDoc], m: int = 15) -> ClassifierEval:
    """Calibration and error metrics on a labeled corpus."""
    if not docs:
        raise InputError("empty evaluation corpus")
    label_to_id = {lab: i for i, lab in enumerate(model.labels)}
    unknown = [d.label for d in docs if d.label not in label_to_id]
    if unknown:
        raise InputError(f"label {unknown[0]!r} was not in the training label set")
    y = np.array([label_to_id[d.label] for d in docs])
    probs = model.predict_probs(docs)
    batch = PredictionBatch(probs=probs, labels=y)
    bins = reliability(batch, m)
    accuracy = float((probs.argmax(axis=1) == y).mean())
    return ClassifierEval(
        classification_error_pct=100.0 * (1.0 - accuracy),
        ece_pct=100.0 * bins.ece,
        mce_pct=100.0 * bins.mce,
        brier=brier(batch),
        accuracy=accuracy,
        bins=bins,
        batch=batch,
    )


def checkpoint_to_dict(model: Dan3Model) -> dict:
    cfg = model.config
    blocks = []
    for dense, bn in model.blocks:
        blocks.append(
            {
                "weight": Tensor2D.from_array(dense.weight).__dict__,
                "bias": [float(v) for v in dense.bias],
                "bn_scale": [float(v) for v in bn.scale],
                "bn_shift": [float(v) for v in bn.shift],
                "running_mean": [float(v) for v in bn.running_mean],
                "running_var": [float(v) for v in bn.running_var],
            }
        )
    cfg_dict = dict(cfg.__dict__)
    cfg_dict["hidden_dims"] = list(cfg.hidden_dims)
    cfg_dict["loss"] = {"kind": cfg.loss.kind.value, "gamma": cfg.loss.gamma, "lam": cfg.loss.lam}
    return {
        "format": CHECKPOINT_FORMAT,
        "prng": PRNG_ID,
        "seed": cfg.seed,
        "config": cfg_dict,
        "labels": model.labels,
        "vocab": sorted(model.vocab, key=model.vocab.get),
        "embedding": Tensor2D.from_array(model.embedding.table).__dict__,
        "blocks": blocks,
        "head": {
            "weight": Tensor2D.from_array(model.head.weight).__dict__,
            "bias": [float(v) for v in model.head.bias],
        },
        "split": None
        if model.split is None
        else {
            "train_indices": model.split.train_indices.tolist(),
            "test_indices": model.split.test_indices.tolist(),
        },
    }


def save_checkpoint(path: str | Path, model: Dan3Model) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(checkpoint_to_dict(model), fh, indent=1)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> Dan3Model:
    path = Path(path)
    if not path.exists():
        raise InputError(f"checkpoint not found: {path}")
    with open(path, encoding="utf-8") as fh:
        blob = json.load(fh)
    if blob.get("format") != CHECKPOINT_FORMAT:
        raise InputError(f"unexpected checkpoint format {blob.get('format')!r}")
    cfg_dict = dict(blob["config"])
    loss_rec = cfg_dict.pop("loss")
    cfg = Dan3Config(
        loss=LossConfig(kind=LossKind(loss_rec["kind"]), gamma=loss_rec["gamma"], lam=loss_rec["lam"]),
        hidden_dims=tuple(cfg_dict.pop("hidden_dims")),
        **cfg_dict,
    )
    vocab = {w: i for i, w in enumerate(blob["vocab"])}
    embedding = EmbeddingMeanLayer(Tensor2D(**blob["embedding"]).to_array(), pad_id=vocab[PAD_TOKEN])
    blocks = []
    for rec in blob["blocks"]:
        dense = DenseLayer(Tensor2D(**rec["weight"]).to_array(), np.asarray(rec["bias"]))
        bn = BatchNormLayer(len(rec["bn_scale"]))
        bn.scale = np.asarray(rec["bn_scale"])
        bn.shift = np.asarray(rec["bn_shift"])
        bn.running_mean = np.asarray(rec["running_mean"])
        bn.running_var = np.asarray(rec["running_var"])
        blocks.append((dense, bn))
    head = DenseLayer(Tensor2D(**blob["head"]["weight"]).to_array(), np.asarray(blob["head"]["bias"]))
    split = None
    if blob.get("split") is not None:
        split = SupervisedSplit(
            train_indices=np.asarray(blob["split"]["train_indices"]),
            test_indices=np.asarray(blob["split"]["test_indices"]),
        )
    return Dan3Model(
        config=cfg,
        vocab=vocab,
        labels=list(blob["labels"]),
        embedding=embedding,
        blocks=blocks,
        head=head,
        split=split,
    )
