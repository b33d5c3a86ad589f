"""Dataset ingestion: sparse boolean samples, a bag-of-words booleanizer,
and synthetic generators for tests.

The on-disk dataset format is UTF-8 text.  The first non-comment line is
the feature count ``K``.  Every following non-empty line is

    <label> <idx_1> <idx_2> ...

where ``label`` is a decimal class id and the ``idx_j`` are strictly
increasing true-feature indices (a line with no indices is an all-false
sample).  Lines starting with ``#`` are comments.  The format is stable
byte-for-byte: ``save_dataset`` output is reloadable and diffable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class DatasetFormatError(ValueError):
    """Malformed dataset or corpus file; message carries the line number."""


@dataclass(frozen=True)
class BoolSample:
    """One boolean feature vector, stored as the set of true indices.

    Literal ids run over ``[0, 2K)``: id ``k < K`` is feature ``k`` itself,
    id ``k >= K`` is the negation of feature ``k - K``.
    """

    n_features: int
    true_indices: frozenset[int]
    label: int

    def __post_init__(self):
        if self.n_features < 1:
            raise ValueError(f"n_features must be >= 1, got {self.n_features}")
        if self.label < 0:
            raise ValueError(f"label must be a non-negative integer, got {self.label}")
        for i in self.true_indices:
            if not 0 <= i < self.n_features:
                raise ValueError(f"feature index {i} out of range [0, {self.n_features})")

    def literal(self, literal_id: int) -> bool:
        """Truth value of one literal under this sample."""
        k = self.n_features
        if not 0 <= literal_id < 2 * k:
            raise ValueError(f"literal id {literal_id} out of range for {k} features")
        if literal_id < k:
            return literal_id in self.true_indices
        return (literal_id - k) not in self.true_indices

    def literal_row(self) -> np.ndarray:
        """Dense truth vector over all ``2K`` literals."""
        k = self.n_features
        row = np.zeros(2 * k, dtype=bool)
        idx = list(self.true_indices)
        row[idx] = True
        row[k:] = ~row[:k]
        return row


@dataclass
class Dataset:
    """A list of samples sharing one feature width, plus display names."""

    n_features: int
    samples: list[BoolSample]
    label_names: dict[int, str] = field(default_factory=dict)

    def labels(self) -> list[int]:
        return sorted({s.label for s in self.samples})

    def literal_matrix(self) -> np.ndarray:
        """(n_samples, 2K) boolean literal-truth matrix."""
        k = self.n_features
        mat = np.zeros((len(self.samples), 2 * k), dtype=bool)
        for i, s in enumerate(self.samples):
            mat[i, list(s.true_indices)] = True
        mat[:, k:] = ~mat[:, :k]
        return mat


def _parse_dataset_lines(lines, source: str) -> Dataset:
    n_features = None
    samples = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n_features is None:
            try:
                n_features = int(line)
            except ValueError:
                raise DatasetFormatError(
                    f"{source}:{lineno}: header must be the feature count, got {line!r}"
                ) from None
            if n_features < 1:
                raise DatasetFormatError(f"{source}:{lineno}: feature count must be >= 1")
            continue
        parts = line.split()
        try:
            label = int(parts[0])
            indices = [int(p) for p in parts[1:]]
        except ValueError:
            raise DatasetFormatError(f"{source}:{lineno}: non-integer token in {line!r}") from None
        if label < 0:
            raise DatasetFormatError(f"{source}:{lineno}: negative class id {label}")
        for prev, cur in zip(indices, indices[1:]):
            if cur <= prev:
                raise DatasetFormatError(
                    f"{source}:{lineno}: indices must be strictly increasing"
                )
        for i in indices:
            if i >= n_features:
                raise DatasetFormatError(
                    f"{source}:{lineno}: index {i} out of range for {n_features} features"
                )
            if i < 0:
                raise DatasetFormatError(f"{source}:{lineno}: negative index {i}")
        samples.append(BoolSample(n_features, frozenset(indices), label))
    if n_features is None:
        raise DatasetFormatError(f"{source}: empty file (missing feature-count header)")
    return Dataset(n_features, samples)


def load_dataset(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return _parse_dataset_lines(fh, str(path))


def save_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{dataset.n_features}\n")
        for s in dataset.samples:
            idx = " ".join(str(i) for i in sorted(s.true_indices))
            fh.write(f"{s.label} {idx}\n" if idx else f"{s.label}\n")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs (ASCII, for stability)."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class BooleanizerConfig:
    """Bag-of-words featurization: presence bits over a fixed vocabulary.

    The vocabulary is the top ``vocabulary_size`` tokens by document
    frequency, ties broken lexicographically, fitted on the training
    split only.
    """

    vocabulary_size: int

    def __post_init__(self):
        if self.vocabulary_size < 1:
            raise ValueError("vocabulary_size must be >= 1")


def fit_vocabulary(texts, config: BooleanizerConfig) -> list[str]:
    """Select the vocabulary from a training corpus.

    Feature index order follows the selection order: highest document
    frequency first, ties by lexicographic token order.
    """
    df: dict[str, int] = {}
    for text in texts:
        for tok in set(tokenize(text)):
            df[tok] = df.get(tok, 0) + 1
    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))
    return [tok for tok, _ in ranked[: config.vocabulary_size]]


def texts_to_dataset(texts, labels, vocabulary: list[str]) -> Dataset:
    """Map documents to presence bits over a fixed vocabulary.

    Tokens outside the vocabulary contribute nothing.
    """
    if len(texts) != len(labels):
        raise ValueError(f"{len(texts)} texts but {len(labels)} labels")
    index = {tok: i for i, tok in enumerate(vocabulary)}
    k = len(vocabulary)
    samples = []
    for text, label in zip(texts, labels):
        present = {index[t] for t in tokenize(text) if t in index}
        samples.append(BoolSample(k, frozenset(present), int(label)))
    return Dataset(k, samples)


def booleanize_corpus(
    train_texts,
    train_labels,
    test_texts,
    test_labels,
    config: BooleanizerConfig,
) -> tuple[Dataset, Dataset]:
    """Fit the vocabulary on the training split and featurize both splits."""
    train_texts = list(train_texts)
    if not train_texts:
        raise ValueError("training corpus is empty")
    vocab = fit_vocabulary(train_texts, config)
    return (
        texts_to_dataset(train_texts, list(train_labels), vocab),
        texts_to_dataset(list(test_texts), list(test_labels), vocab),
    )


def synth_noisy_conjunction(n_samples: int, n_features: int, noise_rate: float, seed: int) -> Dataset:
    """Uniform random feature vectors labeled by ``x0 AND NOT x1``,
    with each label flipped independently at ``noise_rate``."""
    if n_features < 2:
        raise ValueError("need at least 2 features for the conjunction concept")
    if not 0.0 <= noise_rate < 0.5:
        raise ValueError(f"noise_rate must lie in [0, 0.5), got {noise_rate}")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    bits = rng.random((n_samples, n_features)) < 0.5
    labels = bits[:, 0] & ~bits[:, 1]
    flips = rng.random(n_samples) < noise_rate
    labels = labels ^ flips
    samples = [
        BoolSample(n_features, frozenset(np.nonzero(bits[i])[0].tolist()), int(labels[i]))
        for i in range(n_samples)
    ]
    return Dataset(n_features, samples, {0: "other", 1: "concept"})


def load_labeled_texts(path) -> tuple[list[str], list[int]]:
    """Read a labeled corpus file: one ``<label>\\t<text>`` line per document."""
    texts, labels = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            label_str, sep, text = line.partition("\t")
            if not sep:
                raise DatasetFormatError(f"{path}:{lineno}: expected '<label>\\t<text>'")
            try:
                label = int(label_str)
            except ValueError:
                raise DatasetFormatError(f"{path}:{lineno}: non-integer label {label_str!r}") from None
            texts.append(text)
            labels.append(label)
    if not texts:
        raise DatasetFormatError(f"{path}: empty corpus")
    return texts, labels


def sample_corpus() -> tuple[list[str], list[int], list[str], list[int]]:
    """The bundled synthetic text corpus (train_texts, train_labels, test_texts, test_labels)."""
    from importlib import resources

    assets = resources.files("ctm") / "assets"
    out = []
    for name in ("sample_train.txt", "sample_test.txt"):
        with resources.as_file(assets / name) as p:
            texts, labels = load_labeled_texts(p)
        out.extend([texts, labels])
    return tuple(out)  # type: ignore[return-value]
