"""Synthesis-paragraph detection: annotation merging, a trainable lexical
baseline, and a pluggable external-classifier contract.

The reference baseline is logistic regression over tf-idf features, trained
by full-batch gradient descent with L2 regularization. External models (e.g.
a fine-tuned transformer served elsewhere) plug in behind the same
``classify`` contract via the subprocess/HTTP adapters.
"""

from __future__ import annotations

import json
import math
import struct
import subprocess
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np
from scipy import sparse

from .corpus import Document, Paragraph
from .textutil import tokenize

MODEL_MAGIC = b"SXDM"
MODEL_VERSION = 1


class DetectorError(Exception):
    pass


@dataclass(frozen=True)
class LabeledParagraph:
    paragraph_id: str
    text: str
    label: bool
    provenance: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.label and not self.provenance:
            raise ValueError("positive samples must record their annotators")


@dataclass(frozen=True)
class FoldMetrics:
    fold_index: int
    accuracy: float
    precision: float
    recall: float
    f1: float


# --- annotation merging -----------------------------------------------------

Span = tuple[int, int]


def merge_dual_annotations(span_a: Span, span_b: Span) -> Span | None:
    """Merge two annotators' paragraph spans over the same document.

    Overlapping spans merge to the larger one (ties keep either, they are
    equal in length so the earlier-starting one is returned). Disjoint spans
    mean each paragraph was effectively marked by a single annotator: reject
    by returning None.
    """
    for span in (span_a, span_b):
        if span[0] >= span[1]:
            raise ValueError(f"invalid span {span}")
    lo = max(span_a[0], span_b[0])
    hi = min(span_a[1], span_b[1])
    if lo >= hi:
        return None  # no overlap
    ordered = sorted((span_a, span_b), key=lambda s: (-(s[1] - s[0]), s[0]))
    return ordered[0]


def derive_negatives(document: Document, valid_spans: Sequence[Span]) -> list[LabeledParagraph]:
    """Every paragraph not intersecting any valid span becomes a negative sample."""
    for start, end in valid_spans:
        if start < 0 or end > len(document.body):
            raise ValueError(f"span ({start}, {end}) outside document body")
    negatives = []
    for p in document.paragraphs:
        ps, pe = p.char_span
        if not any(max(ps, s) < min(pe, e) for s, e in valid_spans):
            negatives.append(LabeledParagraph(p.id, p.text, label=False))
    return negatives


# --- the lexical baseline ---------------------------------------------------


@dataclass
class DetectorModel:
    """Logistic regression over tf-idf features with a fixed vocabulary."""

    vocabulary: dict[str, int]
    idf: np.ndarray
    weights: np.ndarray
    bias: float
    threshold: float = 0.5

    def save(self, path: str) -> None:
        payload = json.dumps(
            {
                "vocabulary": self.vocabulary,
                "idf": self.idf.tolist(),
                "weights": self.weights.tolist(),
                "bias": self.bias,
                "threshold": self.threshold,
            },
            sort_keys=True,
        ).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(MODEL_MAGIC)
            fh.write(struct.pack("<I", MODEL_VERSION))
            fh.write(struct.pack("<I", len(payload)))
            fh.write(payload)

    @classmethod
    def load(cls, path: str) -> "DetectorModel":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != MODEL_MAGIC:
                raise DetectorError(f"not a detector model file: bad magic {magic!r}")
            (version,) = struct.unpack("<I", fh.read(4))
            if version != MODEL_VERSION:
                raise DetectorError(f"unsupported model version {version}")
            (size,) = struct.unpack("<I", fh.read(4))
            data = json.loads(fh.read(size).decode("utf-8"))
        return cls(
            vocabulary=data["vocabulary"],
            idf=np.asarray(data["idf"], dtype=np.float64),
            weights=np.asarray(data["weights"], dtype=np.float64),
            bias=float(data["bias"]),
            threshold=float(data["threshold"]),
        )


def _build_vocabulary(samples: Sequence[LabeledParagraph]) -> tuple[dict[str, int], np.ndarray]:
    df: dict[str, int] = {}
    for s in samples:
        for tok in set(tokenize(s.text)):
            df[tok] = df.get(tok, 0) + 1
    vocab = {tok: i for i, tok in enumerate(sorted(df))}
    n = len(samples)
    idf = np.zeros(len(vocab))
    for tok, i in vocab.items():
        idf[i] = math.log((1 + n) / (1 + df[tok])) + 1.0
    return vocab, idf


def _featurize(
    texts: Sequence[str], vocab: dict[str, int], idf: np.ndarray
) -> sparse.csr_matrix:
    rows, cols, vals = [], [], []
    for r, text in enumerate(texts):
        counts: dict[int, int] = {}
        for tok in tokenize(text):
            i = vocab.get(tok)
            if i is not None:
                counts[i] = counts.get(i, 0) + 1
        norm = math.sqrt(sum((c * idf[i]) ** 2 for i, c in counts.items())) or 1.0
        for i, c in counts.items():
            rows.append(r)
            cols.append(i)
            vals.append(c * idf[i] / norm)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(len(texts), len(vocab)))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -35, 35)))


def _fit_logistic(
    x: sparse.csr_matrix,
    y: np.ndarray,
    l2: float = 1e-4,
    lr: float = 2.0,
    iters: int = 400,
) -> tuple[np.ndarray, float]:
    n, d = x.shape
    w = np.zeros(d)
    b = 0.0
    for _ in range(iters):
        p = _sigmoid(x @ w + b)
        err = p - y
        grad_w = (x.T @ err) / n + l2 * w
        grad_b = float(err.mean())
        w -= lr * grad_w
        b -= lr * grad_b
    return w, b


def stratified_folds(labels: Sequence[bool], folds: int) -> list[list[int]]:
    """Round-robin assignment per class: fold class counts differ by at most 1."""
    if folds < 2:
        raise DetectorError("folds must be >= 2")
    assignment: list[list[int]] = [[] for _ in range(folds)]
    for cls in (True, False):
        members = [i for i, lab in enumerate(labels) if lab == cls]
        for j, idx in enumerate(members):
            assignment[j % folds].append(idx)
    return [sorted(f) for f in assignment]


def _binary_metrics(y_true: np.ndarray, y_pred: np.ndarray, fold: int) -> FoldMetrics:
    tp = int(np.sum((y_pred == 1) & (y_true == 1)))
    fp = int(np.sum((y_pred == 1) & (y_true == 0)))
    tn = int(np.sum((y_pred == 0) & (y_true == 0)))
    fn = int(np.sum((y_pred == 0) & (y_true == 1)))
    acc = (tp + tn) / max(tp + fp + tn + fn, 1)
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return FoldMetrics(fold, acc, precision, recall, f1)


def train_stratified_cv(
    samples: Sequence[LabeledParagraph], folds: int = 5
) -> tuple[DetectorModel, list[FoldMetrics]]:
    """Stratified k-fold cross-validation, then a final fit on all data."""
    labels = [s.label for s in samples]
    if len(set(labels)) < 2:
        raise DetectorError("training requires both positive and negative samples")
    fold_sets = stratified_folds(labels, folds)
    y_all = np.array([1.0 if lab else 0.0 for lab in labels])

    metrics: list[FoldMetrics] = []
    for k, held_out in enumerate(fold_sets):
        held = set(held_out)
        train_idx = [i for i in range(len(samples)) if i not in held]
        train_samples = [samples[i] for i in train_idx]
        vocab, idf = _build_vocabulary(train_samples)
        x_train = _featurize([s.text for s in train_samples], vocab, idf)
        w, b = _fit_logistic(x_train, y_all[train_idx])
        x_test = _featurize([samples[i].text for i in held_out], vocab, idf)
        scores = _sigmoid(x_test @ w + b)
        y_pred = (scores >= 0.5).astype(int)
        metrics.append(_binary_metrics(y_all[held_out].astype(int), y_pred, k))

    vocab, idf = _build_vocabulary(samples)
    x = _featurize([s.text for s in samples], vocab, idf)
    w, b = _fit_logistic(x, y_all)
    model = DetectorModel(vocabulary=vocab, idf=idf, weights=w, bias=float(b))
    return model, metrics


def classify(model: DetectorModel, text: str) -> tuple[float, bool]:
    """Score a paragraph; empty text falls back to the bias term alone."""
    x = _featurize([text], model.vocabulary, model.idf)
    score = float(_sigmoid(x @ model.weights + model.bias)[0])
    return score, score >= model.threshold


def label_corpus(model: DetectorModel, paragraphs: Iterable[Paragraph]) -> dict[str, bool]:
    return {p.id: classify(model, p.text)[1] for p in paragraphs}


# --- external classifier contract -------------------------------------------


class ParagraphClassifier(Protocol):
    def classify(self, text: str) -> tuple[float, bool]: ...


@dataclass
class BaselineClassifier:
    model: DetectorModel

    def classify(self, text: str) -> tuple[float, bool]:
        return classify(self.model, text)


@dataclass
class SubprocessClassifier:
    """Adapter for an external model invoked per batch over stdin/stdout.

    The command receives one JSON line per text ({"text": ...}) and must emit
    one JSON line per input ({"score": float in [0,1]}).
    """

    command: list[str]
    threshold: float = 0.5

    def classify(self, text: str) -> tuple[float, bool]:
        proc = subprocess.run(
            self.command,
            input=json.dumps({"text": text}) + "\n",
            capture_output=True,
            text=True,
            check=False,
        )
        if proc.returncode != 0:
            raise DetectorError(f"classifier subprocess failed: {proc.stderr.strip()}")
        score = float(json.loads(proc.stdout.splitlines()[0])["score"])
        return score, score >= self.threshold


@dataclass
class HttpClassifier:
    """Adapter for an external model behind `POST {url}` with {"texts": [...]}."""

    url: str
    threshold: float = 0.5
    timeout: float = 30.0

    def classify(self, text: str) -> tuple[float, bool]:
        import httpx

        resp = httpx.post(self.url, json={"texts": [text]}, timeout=self.timeout)
        resp.raise_for_status()
        score = float(resp.json()["scores"][0])
        return score, score >= self.threshold
