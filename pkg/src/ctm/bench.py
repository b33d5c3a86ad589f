"""Benchmarking and persistence: sweeps, per-epoch CSV metrics, model
files, absorption accounting, and human-readable rule listings.

The metrics CSV schema is fixed so runs can be diffed file-to-file:

    epoch,barrier,sample_fraction,train_wall_time_s,test_accuracy,
    absorbed_exclude,absorbed_include,live_ta,ta_updates

Each trained cell emits one row per epoch plus a ``summary`` row whose
accuracy and wall time are the means over the last 25 epochs (or all of
them for shorter runs); the counter columns of the summary row carry the
final totals.  Wall time is the only column expected to differ between
two otherwise identical runs.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .automata import AutomatonConfig
from .clause import SparseClause
from .data import Dataset
from .learner import ClassBank, EpochMetrics, HyperParams, Model, _predict_row, fit
from .rng import RandomSource

CSV_COLUMNS = (
    "epoch",
    "barrier",
    "sample_fraction",
    "train_wall_time_s",
    "test_accuracy",
    "absorbed_exclude",
    "absorbed_include",
    "live_ta",
    "ta_updates",
)

SUMMARY_WINDOW = 25

_MODEL_HEADER = "CTM v1"


class ModelFormatError(ValueError):
    """Unreadable or version-incompatible model file."""


# ----------------------------------------------------------------------
# evaluation helpers


def evaluate_accuracy(model: Model, dataset: Dataset) -> float:
    """Fraction of samples whose predicted class matches the label."""
    if not dataset.samples:
        raise ValueError("dataset is empty")
    if dataset.n_features != model.n_features:
        raise ValueError(
            f"dataset has {dataset.n_features} features, model expects {model.n_features}"
        )
    rows = dataset.literal_matrix()
    hits = 0
    for i, sample in enumerate(dataset.samples):
        if _predict_row(model, rows[i]) == sample.label:
            hits += 1
    return hits / len(dataset.samples)


def accuracy_observer(test: Dataset):
    """Per-epoch observer that fills ``test_accuracy`` from a held-out set."""

    def observe(model: Model, metrics: EpochMetrics) -> None:
        metrics.test_accuracy = evaluate_accuracy(model, test)

    return observe


def absorption_rate(model: Model) -> float:
    """Fraction of the initial automata that have absorbed (either side)."""
    initial = model.initial_live_ta()
    if initial == 0:
        return 0.0
    absorbed = model.absorbed_exclude_total() + model.absorbed_include_total()
    return absorbed / initial


# ----------------------------------------------------------------------
# metrics CSV


def _fmt_barrier(barrier: int | None) -> str:
    return "none" if barrier is None else str(barrier)


def metrics_rows(
    history: list[EpochMetrics],
    barrier: int | None,
    sample_fraction: float,
) -> list[list[str]]:
    """Epoch rows plus the trailing summary row for one trained cell."""
    rows = []
    for m in history:
        rows.append(
            [
                str(m.epoch),
                _fmt_barrier(barrier),
                repr(float(sample_fraction)),
                f"{m.train_wall_time:.6f}",
                "" if m.test_accuracy is None else f"{m.test_accuracy:.6f}",
                str(m.absorbed_exclude_total),
                str(m.absorbed_include_total),
                str(m.live_ta_count),
                str(m.ta_update_events),
            ]
        )
    if history:
        tail = history[-SUMMARY_WINDOW:]
        mean_time = sum(m.train_wall_time for m in tail) / len(tail)
        accs = [m.test_accuracy for m in tail if m.test_accuracy is not None]
        mean_acc = sum(accs) / len(accs) if accs else None
        last = history[-1]
        rows.append(
            [
                "summary",
                _fmt_barrier(barrier),
                repr(float(sample_fraction)),
                f"{mean_time:.6f}",
                "" if mean_acc is None else f"{mean_acc:.6f}",
                str(last.absorbed_exclude_total),
                str(last.absorbed_include_total),
                str(last.live_ta_count),
                str(last.ta_update_events),
            ]
        )
    return rows


def write_metrics_csv(path, rows: list[list[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        writer.writerows(rows)


# ----------------------------------------------------------------------
# sweeps


@dataclass
class SweepSpec:
    """Grid of (barrier, literal-sample-fraction) training cells."""

    barriers: list[int | None]
    fractions: list[float]
    epochs: int
    seed: int
    clauses_per_class: int
    voting_margin: int
    specificity: float
    max_included_literals: int | None = None
    boost_true_positive: bool = False
    n_states_per_action: int = 128
    include_barrier: int | None = None
    train_path: str | None = None
    test_path: str | None = None

    def __post_init__(self):
        if not self.barriers:
            raise ValueError("sweep needs at least one barrier value")
        if not self.fractions:
            raise ValueError("sweep needs at least one sample-fraction value")


@dataclass
class CellSummary:
    """Last-epochs means and final counters for one sweep cell."""

    barrier: int | None
    sample_fraction: float
    mean_accuracy: float | None
    mean_epoch_time: float
    final_live_ta: int
    absorption: float
    history: list[EpochMetrics] = field(repr=False, default_factory=list)


def run_cell(
    spec: SweepSpec,
    barrier: int | None,
    fraction: float,
    train: Dataset,
    test: Dataset | None,
) -> tuple[Model, list[EpochMetrics]]:
    """Train one fresh model for a single sweep cell."""
    hyper = HyperParams(
        clauses_per_class=spec.clauses_per_class,
        voting_margin=spec.voting_margin,
        specificity=spec.specificity,
        max_included_literals=spec.max_included_literals,
        literal_sample_fraction=fraction,
        boost_true_positive=spec.boost_true_positive,
    )
    config = AutomatonConfig(
        n_states_per_action=spec.n_states_per_action,
        exclude_barrier=barrier,
        include_barrier=spec.include_barrier,
    )
    model = Model(train.n_features, hyper, config)
    observer = accuracy_observer(test) if test is not None else None
    history = fit(model, train, spec.epochs, RandomSource(spec.seed), observer=observer)
    return model, history


def run_sweep(
    spec: SweepSpec,
    train: Dataset,
    test: Dataset | None,
    out_path,
) -> list[CellSummary]:
    """Train every (barrier, fraction) cell and write the combined CSV."""
    if test is not None and test.n_features != train.n_features:
        raise ValueError("train and test datasets have different feature widths")
    summaries: list[CellSummary] = []
    all_rows: list[list[str]] = []
    for barrier in spec.barriers:
        for fraction in spec.fractions:
            model, history = run_cell(spec, barrier, fraction, train, test)
            all_rows.extend(metrics_rows(history, barrier, fraction))
            tail = history[-SUMMARY_WINDOW:]
            accs = [m.test_accuracy for m in tail if m.test_accuracy is not None]
            summaries.append(
                CellSummary(
                    barrier=barrier,
                    sample_fraction=fraction,
                    mean_accuracy=sum(accs) / len(accs) if accs else None,
                    mean_epoch_time=(
                        sum(m.train_wall_time for m in tail) / len(tail) if tail else 0.0
                    ),
                    final_live_ta=history[-1].live_ta_count if history else 0,
                    absorption=absorption_rate(model),
                    history=history,
                )
            )
    write_metrics_csv(out_path, all_rows)
    return summaries


# ----------------------------------------------------------------------
# model persistence (versioned line-oriented text)


def _fmt_opt(value) -> str:
    return "none" if value is None else str(value)


def save_model(model: Model, path) -> None:
    """Write a model as versioned text; the round-trip is lossless,
    including list order inside every clause."""
    buf = io.StringIO()
    buf.write(f"{_MODEL_HEADER}\n")
    buf.write(f"n_features {model.n_features}\n")
    cfg = model.automaton_config
    buf.write(f"n_states_per_action {cfg.n_states_per_action}\n")
    buf.write(f"exclude_barrier {_fmt_opt(cfg.exclude_barrier)}\n")
    buf.write(f"include_barrier {_fmt_opt(cfg.include_barrier)}\n")
    h = model.hyper
    buf.write(f"clauses_per_class {h.clauses_per_class}\n")
    buf.write(f"voting_margin {h.voting_margin}\n")
    buf.write(f"specificity {h.specificity!r}\n")
    buf.write(f"max_included_literals {_fmt_opt(h.max_included_literals)}\n")
    buf.write(f"literal_sample_fraction {h.literal_sample_fraction!r}\n")
    buf.write(f"boost_true_positive {int(h.boost_true_positive)}\n")
    buf.write(f"classes {len(model.classes)}\n")
    for label in sorted(model.classes):
        buf.write(f"class {label}\n")
        bank = model.classes[label]
        for clause in bank.positive + bank.negative:
            sign = "+" if clause.polarity > 0 else "-"
            buf.write(f"clause {sign} {clause.initial_pool_size}\n")
            for tag, body in (
                ("P:", " ".join(str(l) for l in clause.permanent)),
                ("I:", " ".join(f"({l},{s})" for l, s in clause.included)),
                ("E:", " ".join(f"({l},{s})" for l, s in clause.excluded)),
            ):
                buf.write(f"{tag} {body}\n" if body else f"{tag}\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


class _LineReader:
    def __init__(self, lines):
        self.lines = lines
        self.pos = 0

    def next(self, expect: str | None = None) -> str:
        if self.pos >= len(self.lines):
            raise ModelFormatError("unexpected end of model file")
        line = self.lines[self.pos].rstrip("\n")
        self.pos += 1
        if expect is not None and not line.startswith(expect + " ") and line != expect:
            raise ModelFormatError(f"line {self.pos}: expected {expect!r}, got {line!r}")
        return line


def _parse_opt_int(token: str, what: str) -> int | None:
    if token == "none":
        return None
    try:
        return int(token)
    except ValueError:
        raise ModelFormatError(f"bad {what}: {token!r}") from None


def _field(reader: _LineReader, key: str) -> str:
    line = reader.next(key)
    return line[len(key) + 1 :]


def _parse_pairs(body: str, what: str) -> list[tuple[int, int]]:
    pairs = []
    for tok in body.split():
        if not (tok.startswith("(") and tok.endswith(")")) or "," not in tok:
            raise ModelFormatError(f"bad {what} entry {tok!r}")
        a, b = tok[1:-1].split(",", 1)
        try:
            pairs.append((int(a), int(b)))
        except ValueError:
            raise ModelFormatError(f"bad {what} entry {tok!r}") from None
    return pairs


def load_model(path) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    reader = _LineReader(lines)
    header = reader.next()
    if header != _MODEL_HEADER:
        raise ModelFormatError(f"unsupported model version: {header!r}")
    try:
        n_features = int(_field(reader, "n_features"))
        config = AutomatonConfig(
            n_states_per_action=int(_field(reader, "n_states_per_action")),
            exclude_barrier=_parse_opt_int(_field(reader, "exclude_barrier"), "exclude_barrier"),
            include_barrier=_parse_opt_int(_field(reader, "include_barrier"), "include_barrier"),
        )
        hyper = HyperParams(
            clauses_per_class=int(_field(reader, "clauses_per_class")),
            voting_margin=int(_field(reader, "voting_margin")),
            specificity=float(_field(reader, "specificity")),
            max_included_literals=_parse_opt_int(
                _field(reader, "max_included_literals"), "max_included_literals"
            ),
            literal_sample_fraction=float(_field(reader, "literal_sample_fraction")),
            boost_true_positive=bool(int(_field(reader, "boost_true_positive"))),
        )
        n_classes = int(_field(reader, "classes"))
    except (ValueError, ModelFormatError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"corrupt model header: {exc}") from None

    model = Model(n_features, hyper, config)
    half = hyper.clauses_per_class // 2
    for _ in range(n_classes):
        line = reader.next("class")
        try:
            label = int(line.split(" ", 1)[1])
        except (IndexError, ValueError):
            raise ModelFormatError(f"bad class line {line!r}") from None
        positive, negative = [], []
        for _ in range(hyper.clauses_per_class):
            parts = reader.next("clause").split()
            if len(parts) != 3 or parts[1] not in "+-":
                raise ModelFormatError(f"bad clause line {' '.join(parts)!r}")
            polarity = 1 if parts[1] == "+" else -1
            try:
                pool = int(parts[2])
            except ValueError:
                raise ModelFormatError(f"bad pool size {parts[2]!r}") from None
            perm_body = reader.next("P:")[2:].strip()
            inc_body = reader.next("I:")[2:].strip()
            exc_body = reader.next("E:")[2:].strip()
            try:
                permanent = [int(t) for t in perm_body.split()]
            except ValueError:
                raise ModelFormatError(f"bad permanent entry in {perm_body!r}") from None
            included = _parse_pairs(inc_body, "included")
            excluded = _parse_pairs(exc_body, "excluded")
            try:
                clause = SparseClause.from_lists(
                    polarity, 2 * n_features, pool, excluded, included, permanent, config
                )
            except ValueError as exc:
                raise ModelFormatError(f"corrupt clause: {exc}") from None
            (positive if polarity > 0 else negative).append(clause)
        if len(positive) != half or len(negative) != half:
            raise ModelFormatError(
                f"class {label}: expected {half}+{half} clauses by polarity"
            )
        model.classes[label] = ClassBank(positive, negative)
    return model


# ----------------------------------------------------------------------
# rule listing


def explain_model(model: Model, feature_names: list[str] | None = None) -> str:
    """One line per clause: polarity and the conjunction it has learned.

    Permanent literals carry a ``*`` suffix; clauses with nothing included
    render as ``TRUE (empty)``.
    """
    if not model.classes:
        raise ValueError("model has no registered classes")
    k = model.n_features

    def name(feature: int) -> str:
        if feature_names is not None and feature < len(feature_names):
            return feature_names[feature]
        return f"f{feature}"

    def render(literal: int, permanent: bool) -> str:
        text = name(literal) if literal < k else f"NOT {name(literal - k)}"
        return text + "*" if permanent else text

    lines = []
    for label in sorted(model.classes):
        bank = model.classes[label]
        for idx, clause in enumerate(bank.positive + bank.negative):
            sign = "+" if clause.polarity > 0 else "-"
            terms = [render(l, False) for l, _ in clause.included]
            terms += [render(l, True) for l in clause.permanent]
            body = " AND ".join(terms) if terms else "TRUE (empty)"
            lines.append(f"class {label} clause {idx} {sign}: {body}")
    return "\n".join(lines)
