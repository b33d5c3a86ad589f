"""Learner semantics: voting, routing, feedback rules, determinism."""

import numpy as np
import pytest

import ctm._kernels as _kernels
from conftest import structure_of
from ctm.automata import AutomatonConfig
from ctm.clause import EvalMode, SparseClause, UpdateEffect
from ctm.data import BoolSample, Dataset, synth_noisy_conjunction
from ctm.learner import (
    ClassBank,
    HyperParams,
    Model,
    class_sum,
    fit,
    predict,
    train_step,
    type_i_feedback,
    type_ii_feedback,
)
from ctm.rng import RandomSource


def bank_from_rules(n_features, positive_rules, negative_rules, config=None):
    """Build a bank whose clauses have fixed permanent literal sets."""
    config = config or AutomatonConfig()
    n_lit = 2 * n_features

    def clause(polarity, lits):
        return SparseClause.from_lists(polarity, n_lit, n_lit, [], [], lits, config)

    return ClassBank(
        positive=[clause(1, lits) for lits in positive_rules],
        negative=[clause(-1, lits) for lits in negative_rules],
    )


class TestClassSum:
    def test_empty_bank_sums_to_zero_in_both_modes(self):
        bank = bank_from_rules(4, [[], []], [[], []])
        x = BoolSample(4, frozenset({1}), 0)
        assert class_sum(bank, x, EvalMode.INFERENCE) == 0
        assert class_sum(bank, x, EvalMode.TRAINING) == 0  # 2 - 2

    def test_vote_arithmetic(self):
        # three positive firing, one negative firing -> 2
        bank = bank_from_rules(4, [[0], [0], [0]], [[0], [1], [2]])
        x = BoolSample(4, frozenset({0}), 0)
        assert class_sum(bank, x, EvalMode.INFERENCE) == 3 - 1


class TestPredict:
    def test_argmax_and_tiebreak(self):
        hyper = HyperParams(clauses_per_class=2, voting_margin=2, specificity=2.0)
        model = Model(4, hyper)
        model.classes[5] = bank_from_rules(4, [[0]], [[1]])
        model.classes[2] = bank_from_rules(4, [[0]], [[1]])
        model.classes[9] = bank_from_rules(4, [[1]], [[0]])
        x = BoolSample(4, frozenset({0}), 0)
        # classes 2 and 5 both sum to +1, class 9 to -1: smallest label wins
        assert predict(model, x) == 2

    def test_no_classes_is_an_error(self):
        model = Model(4, HyperParams(clauses_per_class=2, voting_margin=1, specificity=1.5))
        with pytest.raises(ValueError):
            predict(model, BoolSample(4, frozenset(), 0))

    def test_binary_decision_matches_step_function(self):
        hyper = HyperParams(clauses_per_class=2, voting_margin=2, specificity=2.0)
        model = Model(4, hyper)
        model.classes[0] = bank_from_rules(4, [[4]], [[]])  # fires on NOT f0
        model.classes[1] = bank_from_rules(4, [[0]], [[]])  # fires on f0
        assert predict(model, BoolSample(4, frozenset({0}), 0)) == 1
        assert predict(model, BoolSample(4, frozenset(), 0)) == 0


class TestTypeIFeedback:
    def test_boost_applies_increase_with_probability_one(self):
        cfg = AutomatonConfig()
        hyper = HyperParams(
            clauses_per_class=2, voting_margin=1, specificity=10.0, boost_true_positive=True
        )
        clause = SparseClause.from_lists(1, 8, 8, [(0, 50), (1, 50)], [], [], cfg)
        x = BoolSample(4, frozenset({0, 1}), 0)  # both literals true, clause fires (empty)
        effects = type_i_feedback(clause, x, hyper, RandomSource(0))
        # every true literal stepped toward Include regardless of the draw
        assert dict(clause.excluded) == {0: 51, 1: 51}
        assert len(effects) == 2

    def test_forget_fraction_within_binomial_bounds(self):
        # clause output 0: every live automaton steps down w.p. 1/s
        cfg = AutomatonConfig()
        hyper = HyperParams(clauses_per_class=2, voting_margin=1, specificity=2.0)
        clause = SparseClause.from_lists(
            1, 1000, 1000, [(l, 64) for l in range(999)], [(999, 200)], [], cfg
        )
        x = BoolSample(500, frozenset(), 0)
        # included literal 999 is false under x, so the clause outputs 0
        effects = type_i_feedback(clause, x, hyper, RandomSource(42))
        # Binomial(1000, 0.5): 4 sigma is ~ +/- 63
        assert 430 <= len(effects) <= 570
        assert all(e in (UpdateEffect.STATE_CHANGED, UpdateEffect.MOVED_TO_EXCLUDE) for e in effects)

    def test_budget_suppresses_new_inclusions_only(self):
        cfg = AutomatonConfig()
        hyper = HyperParams(
            clauses_per_class=2,
            voting_margin=1,
            specificity=1.0,  # p_forget = 1, p_include = 0 unless boosted
            max_included_literals=2,
            boost_true_positive=True,
        )
        clause = SparseClause.from_lists(
            1, 8, 8, [(0, 127)], [(1, 130), (2, 140)], [], cfg
        )
        x = BoolSample(4, frozenset({0, 1, 2}), 0)  # everything true, clause fires
        type_i_feedback(clause, x, hyper, RandomSource(1))
        # at budget: excluded literal 0 must not be included, included ones still deepen
        assert dict(clause.excluded) == {0: 127}
        assert dict(clause.included) == {1: 131, 2: 141}

    def test_no_feedback_to_permanent_literals(self):
        cfg = AutomatonConfig(include_barrier=200)
        hyper = HyperParams(
            clauses_per_class=2, voting_margin=1, specificity=1.5, boost_true_positive=True
        )
        clause = SparseClause.from_lists(1, 8, 8, [], [], [0, 1], cfg)
        x = BoolSample(4, frozenset({0, 1}), 0)
        effects = type_i_feedback(clause, x, hyper, RandomSource(3))
        assert effects == []
        assert clause.permanent == [0, 1]


class TestTypeIIFeedback:
    def test_silent_when_clause_output_zero(self):
        cfg = AutomatonConfig()
        clause = SparseClause.from_lists(1, 8, 8, [(0, 100)], [], [2], cfg)
        x = BoolSample(4, frozenset(), 0)  # f2=0 kills the clause
        assert type_ii_feedback(clause, x) == []
        assert structure_of(clause) == (((0, 100),), (), (2,))

    def test_false_excluded_literals_pushed_toward_include(self):
        cfg = AutomatonConfig()
        # literal 6 = NOT f2; with f2=1 it is false and gets pushed
        clause = SparseClause.from_lists(1, 8, 8, [(6, 100), (2, 100)], [], [], cfg)
        x = BoolSample(4, frozenset({2}), 0)
        effects = type_ii_feedback(clause, x)
        assert effects == [UpdateEffect.STATE_CHANGED]
        assert dict(clause.excluded) == {6: 101, 2: 100}

    def test_nothing_to_do_when_all_literals_true(self):
        cfg = AutomatonConfig()
        clause = SparseClause.from_lists(1, 8, 8, [(0, 100), (1, 100)], [], [], cfg)
        x = BoolSample(4, frozenset({0, 1}), 0)
        assert type_ii_feedback(clause, x) == []


def _tiny_model(n_classes=1, t=1):
    hyper = HyperParams(clauses_per_class=2, voting_margin=t, specificity=2.0)
    model = Model(4, hyper)
    return model


class TestTrainStep:
    def test_margin_satisfied_means_no_target_updates(self):
        model = _tiny_model(t=1)
        model.classes[0] = bank_from_rules(4, [[0]], [[1]])  # v=+1=T on f0-only sample
        x = BoolSample(4, frozenset({0}), 0)
        step = train_step(model, x, 0, 1, 0, RandomSource(0))
        assert step.ta_updates == 0

    def test_maximal_correction_updates_every_clause(self):
        hyper = HyperParams(clauses_per_class=2, voting_margin=1, specificity=1.0)
        model = Model(4, hyper)
        cfg = model.automaton_config
        # positive misses (included f1 false), negative fires with one false
        # excluded literal: v=-1=-T, update probability 1, s=1 forgets surely
        model.classes[0] = ClassBank(
            positive=[SparseClause.from_lists(1, 8, 8, [], [(1, 130)], [], cfg)],
            negative=[SparseClause.from_lists(-1, 8, 8, [(4, 100)], [], [0], cfg)],
        )
        x = BoolSample(4, frozenset({0}), 0)
        step = train_step(model, x, 0, 1, 0, RandomSource(0))
        assert step.ta_updates == 2

    def test_single_class_model_skips_negative_phase(self):
        model = _tiny_model()
        rng = RandomSource(5)
        x = BoolSample(4, frozenset({0}), 0)
        train_step(model, x, 0, 1, 0, rng)
        assert list(model.classes) == [0]

    def test_auto_registration_on_new_label(self):
        model = _tiny_model()
        rng = RandomSource(5)
        train_step(model, BoolSample(4, frozenset({0}), 7), 7, 1, 0, rng)
        assert 7 in model.classes
        half = model.hyper.clauses_per_class // 2
        assert len(model.classes[7].positive) == half
        assert len(model.classes[7].negative) == half

    def test_touches_at_most_two_banks(self):
        hyper = HyperParams(clauses_per_class=4, voting_margin=2, specificity=2.0)
        model = Model(6, hyper)
        rng = RandomSource(9)
        for label in (0, 1, 2):
            model.register_class(label, rng)
        snapshots = {
            label: [structure_of(c) for c in model.classes[label].clauses()]
            for label in (0, 1, 2)
        }
        x = BoolSample(6, frozenset({0, 3}), 0)
        train_step(model, x, 0, 1, 0, rng)
        untouched = [
            label
            for label in (1, 2)
            if [structure_of(c) for c in model.classes[label].clauses()] == snapshots[label]
        ]
        assert len(untouched) >= 1

    def test_feature_width_mismatch_rejected(self):
        model = _tiny_model()
        with pytest.raises(ValueError):
            train_step(model, BoolSample(9, frozenset(), 0), 0, 1, 0, RandomSource(0))


class TestFit:
    def test_zero_epochs_is_a_no_op(self):
        model = _tiny_model()
        ds = synth_noisy_conjunction(50, 4, 0.0, 1)
        assert fit(model, ds, 0, RandomSource(0)) == []
        assert model.classes == {}

    def test_empty_dataset_rejected(self):
        model = _tiny_model()
        with pytest.raises(ValueError):
            fit(model, Dataset(4, []), 1, RandomSource(0))

    def test_width_mismatch_rejected_before_any_mutation(self):
        model = _tiny_model()
        ds = synth_noisy_conjunction(10, 6, 0.0, 1)
        with pytest.raises(ValueError):
            fit(model, ds, 1, RandomSource(0))
        assert model.classes == {}

    def test_live_count_constant_without_barriers(self):
        ds = synth_noisy_conjunction(300, 8, 0.1, 2)
        hyper = HyperParams(clauses_per_class=4, voting_margin=2, specificity=3.0)
        model = Model(8, hyper)
        history = fit(model, ds, 3, RandomSource(0))
        assert len({m.live_ta_count for m in history}) == 1
        assert all(m.absorbed_exclude_total == 0 for m in history)

    def test_deterministic_given_seed(self):
        ds = synth_noisy_conjunction(200, 8, 0.2, 5)

        def run():
            hyper = HyperParams(clauses_per_class=6, voting_margin=3, specificity=2.5)
            model = Model(8, hyper, AutomatonConfig(exclude_barrier=100))
            hist = fit(model, ds, 4, RandomSource(17))
            return (
                [structure_of(c) for c in model.all_clauses()],
                [
                    (m.epoch, m.absorbed_exclude_total, m.live_ta_count, m.ta_update_events)
                    for m in hist
                ],
            )

        assert run() == run()

    def test_shuffle_is_deterministic_and_reorders(self):
        ds = synth_noisy_conjunction(100, 8, 0.2, 5)

        def run(shuffle):
            hyper = HyperParams(clauses_per_class=4, voting_margin=2, specificity=2.5)
            model = Model(8, hyper)
            fit(model, ds, 2, RandomSource(3), shuffle=shuffle)
            return [structure_of(c) for c in model.all_clauses()]

        assert run(True) == run(True)
        assert run(True) != run(False)

    def test_absorption_accounting_identity(self):
        ds = synth_noisy_conjunction(500, 10, 0.1, 7)
        hyper = HyperParams(clauses_per_class=6, voting_margin=3, specificity=3.0)
        model = Model(10, hyper, AutomatonConfig(exclude_barrier=110, include_barrier=250))
        rng = RandomSource(1)
        rows = ds.literal_matrix()
        total_disc = total_perm = 0
        for i, sample in enumerate(ds.samples):
            step = train_step(model, sample, sample.label, 1, i, rng)
            total_disc += step.absorbed_exclude
            total_perm += step.absorbed_include
        assert total_disc == model.absorbed_exclude_total()
        assert total_perm == model.absorbed_include_total()
        assert (
            model.initial_live_ta() - model.live_ta_count()
            == total_disc + total_perm
        )
        assert total_disc > 0

    def test_fused_and_fallback_paths_produce_identical_models(self):
        if not _kernels.HAVE_NUMBA:
            pytest.skip("numba unavailable")
        ds = synth_noisy_conjunction(300, 10, 0.2, 3)

        def run():
            hyper = HyperParams(
                clauses_per_class=6,
                voting_margin=4,
                specificity=2.5,
                max_included_literals=8,
                literal_sample_fraction=0.7,
            )
            cfg = AutomatonConfig(exclude_barrier=100, include_barrier=200)
            model = Model(10, hyper, cfg)
            hist = fit(model, ds, 3, RandomSource(11))
            return (
                [structure_of(c) for c in model.all_clauses()],
                [(m.ta_update_events, m.live_ta_count) for m in hist],
            )

        fused = run()
        _kernels.HAVE_NUMBA = False
        try:
            fallback = run()
        finally:
            _kernels.HAVE_NUMBA = True
        assert fused == fallback
