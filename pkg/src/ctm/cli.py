"""Command-line interface.

Subcommands:

* ``train``      -- fit a model on a dataset file, optionally tracking test
                    accuracy per epoch; writes a model file and a metrics CSV.
* ``eval``       -- accuracy of a saved model on a dataset file.
* ``sweep``      -- barrier x sample-fraction grid from a key=value spec file.
* ``booleanize`` -- turn labeled text corpora into dataset files plus a
                    vocabulary file (one token per line).
* ``explain``    -- print the learned rules of a saved model.
* ``synth``      -- generate a synthetic dataset file.

Barrier flags accept ``none`` or ``0`` for "no absorption"; any positive
value is the absorbing Exclude state.  Labeled text corpora are UTF-8
files with one ``<label>\\t<text>`` document per line.
"""

from __future__ import annotations

import argparse
import sys

from . import bench, data
from .automata import AutomatonConfig
from .learner import HyperParams, Model, fit
from .rng import RandomSource


def _parse_barrier(text: str) -> int | None:
    if text.lower() in ("none", "absent", "0"):
        return None
    value = int(text)
    if value < 0:
        raise ValueError(f"barrier must be >= 0, got {value}")
    return value


def _parse_opt_int(text: str) -> int | None:
    return None if text.lower() == "none" else int(text)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctm", description="Contracting Tsetlin Machine trainer and benchmark tools"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model on a dataset file")
    p.add_argument("--data", required=True, help="training dataset file")
    p.add_argument("--test", default=None, help="optional test dataset for per-epoch accuracy")
    p.add_argument("--clauses", type=int, default=10, help="clauses per class (even)")
    p.add_argument("--threshold", type=int, default=15, help="voting margin T")
    p.add_argument("--specificity", type=float, default=3.0, help="specificity s")
    p.add_argument("--barrier", type=_parse_barrier, default=None,
                   help="absorbing Exclude state (none/0 disables)")
    p.add_argument("--include-barrier", type=_parse_barrier, default=None,
                   help="absorbing Include state (none/0 disables)")
    p.add_argument("--budget", type=_parse_opt_int, default=None,
                   help="max included literals per clause")
    p.add_argument("--sample-fraction", type=float, default=1.0,
                   help="fraction of literals each clause starts with")
    p.add_argument("--boost-true-positive", action="store_true",
                   help="always reinforce true literals of firing clauses")
    p.add_argument("--n-states", type=int, default=128, help="states per action (N)")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out-model", default=None, help="path for the trained model file")
    p.add_argument("--metrics-csv", default=None, help="path for the per-epoch metrics CSV")

    p = sub.add_parser("eval", help="evaluate a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)

    p = sub.add_parser("sweep", help="run a barrier/fraction sweep from a spec file")
    p.add_argument("--spec", required=True, help="key=value spec file (see README)")
    p.add_argument("--out-csv", required=True)

    p = sub.add_parser("booleanize", help="featurize labeled text corpora")
    p.add_argument("--train-texts", required=True, help="labeled text file, label<TAB>text")
    p.add_argument("--test-texts", required=True)
    p.add_argument("--vocab-size", type=int, required=True)
    p.add_argument("--out", required=True,
                   help="output prefix; writes <out>.train, <out>.test, <out>.vocab")

    p = sub.add_parser("explain", help="print the learned rules of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--names", default=None, help="optional vocabulary file for feature names")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--kind", choices=["noisy-conjunction"], default="noisy-conjunction")
    p.add_argument("--k", type=int, required=True, help="feature count")
    p.add_argument("--n", type=int, required=True, help="sample count")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    return parser


def _cmd_train(args) -> int:
    train_ds = data.load_dataset(args.data)
    test_ds = data.load_dataset(args.test) if args.test else None
    hyper = HyperParams(
        clauses_per_class=args.clauses,
        voting_margin=args.threshold,
        specificity=args.specificity,
        max_included_literals=args.budget,
        literal_sample_fraction=args.sample_fraction,
        boost_true_positive=args.boost_true_positive,
    )
    config = AutomatonConfig(
        n_states_per_action=args.n_states,
        exclude_barrier=args.barrier,
        include_barrier=args.include_barrier,
    )
    model = Model(train_ds.n_features, hyper, config)
    observer = bench.accuracy_observer(test_ds) if test_ds is not None else None
    history = fit(model, train_ds, args.epochs, RandomSource(args.seed), observer=observer)
    if args.metrics_csv:
        rows = bench.metrics_rows(history, args.barrier, args.sample_fraction)
        bench.write_metrics_csv(args.metrics_csv, rows)
    if args.out_model:
        bench.save_model(model, args.out_model)
    if history:
        last = history[-1]
        acc = "" if last.test_accuracy is None else f" test_accuracy={last.test_accuracy:.6f}"
        print(
            f"trained {args.epochs} epochs: live_ta={last.live_ta_count}"
            f" absorption={bench.absorption_rate(model):.4f}{acc}"
        )
    else:
        print("trained 0 epochs")
    return 0


def _cmd_eval(args) -> int:
    model = bench.load_model(args.model)
    dataset = data.load_dataset(args.data)
    print(f"accuracy {bench.evaluate_accuracy(model, dataset):.6f}")
    return 0


def _parse_sweep_spec(path) -> bench.SweepSpec:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            values[key.strip()] = value.strip()

    def need(key: str) -> str:
        if key not in values:
            raise ValueError(f"sweep spec is missing {key!r}")
        return values[key]

    return bench.SweepSpec(
        barriers=[_parse_barrier(tok) for tok in need("barriers").split(",")],
        fractions=[float(tok) for tok in need("fractions").split(",")],
        epochs=int(need("epochs")),
        seed=int(values.get("seed", "42")),
        clauses_per_class=int(need("clauses")),
        voting_margin=int(need("threshold")),
        specificity=float(need("specificity")),
        max_included_literals=_parse_opt_int(values.get("budget", "none")),
        boost_true_positive=values.get("boost", "0") in ("1", "true", "yes"),
        n_states_per_action=int(values.get("n_states", "128")),
        include_barrier=_parse_barrier(values.get("include_barrier", "none")),
        train_path=need("train"),
        test_path=values.get("test"),
    )


def _cmd_sweep(args) -> int:
    spec = _parse_sweep_spec(args.spec)
    train_ds = data.load_dataset(spec.train_path)
    test_ds = data.load_dataset(spec.test_path) if spec.test_path else None
    summaries = bench.run_sweep(spec, train_ds, test_ds, args.out_csv)
    for cell in summaries:
        barrier = "none" if cell.barrier is None else cell.barrier
        acc = "n/a" if cell.mean_accuracy is None else f"{cell.mean_accuracy:.4f}"
        print(
            f"barrier={barrier} fraction={cell.sample_fraction}"
            f" mean_acc={acc} mean_epoch_s={cell.mean_epoch_time:.4f}"
            f" live_ta={cell.final_live_ta} absorption={cell.absorption:.4f}"
        )
    return 0


def _cmd_booleanize(args) -> int:
    train_texts, train_labels = data.load_labeled_texts(args.train_texts)
    test_texts, test_labels = data.load_labeled_texts(args.test_texts)
    config = data.BooleanizerConfig(vocabulary_size=args.vocab_size)
    vocab = data.fit_vocabulary(train_texts, config)
    train_ds = data.texts_to_dataset(train_texts, train_labels, vocab)
    test_ds = data.texts_to_dataset(test_texts, test_labels, vocab)
    data.save_dataset(train_ds, args.out + ".train")
    data.save_dataset(test_ds, args.out + ".test")
    with open(args.out + ".vocab", "w", encoding="utf-8") as fh:
        fh.write("\n".join(vocab) + "\n")
    print(
        f"vocabulary {len(vocab)} tokens; wrote {args.out}.train"
        f" ({len(train_ds.samples)} docs), {args.out}.test ({len(test_ds.samples)} docs)"
    )
    return 0


def _cmd_explain(args) -> int:
    model = bench.load_model(args.model)
    names = None
    if args.names:
        with open(args.names, "r", encoding="utf-8") as fh:
            names = [line.rstrip("\n") for line in fh if line.strip()]
    print(bench.explain_model(model, names))
    return 0


def _cmd_synth(args) -> int:
    dataset = data.synth_noisy_conjunction(args.n, args.k, args.noise, args.seed)
    data.save_dataset(dataset, args.out)
    print(f"wrote {args.out}: {len(dataset.samples)} samples, {dataset.n_features} features")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "booleanize": _cmd_booleanize,
    "explain": _cmd_explain,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
