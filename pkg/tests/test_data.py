"""Dataset format, booleanizer, and synthetic generators."""

import numpy as np
import pytest

from ctm.data import (
    BooleanizerConfig,
    BoolSample,
    Dataset,
    DatasetFormatError,
    booleanize_corpus,
    fit_vocabulary,
    load_dataset,
    load_labeled_texts,
    sample_corpus,
    save_dataset,
    synth_noisy_conjunction,
    texts_to_dataset,
    tokenize,
)


class TestBoolSample:
    def test_literal_duality(self):
        rnd = np.random.default_rng(0)
        for _ in range(50):
            k = int(rnd.integers(1, 30))
            bits = frozenset(np.nonzero(rnd.random(k) < 0.5)[0].tolist())
            x = BoolSample(k, bits, 0)
            for lit in range(k):
                assert x.literal(lit) != x.literal(lit + k)

    def test_literal_row_matches_literal(self):
        x = BoolSample(3, frozenset({0, 2}), 1)
        row = x.literal_row()
        assert row.tolist() == [True, False, True, False, True, False]

    def test_validation(self):
        with pytest.raises(ValueError):
            BoolSample(3, frozenset({3}), 0)
        with pytest.raises(ValueError):
            BoolSample(0, frozenset(), 0)
        with pytest.raises(ValueError):
            BoolSample(3, frozenset(), -1)
        with pytest.raises(ValueError):
            BoolSample(3, frozenset({0}), 0).literal(6)


class TestDatasetFormat:
    def test_basic_parse(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("2\n0 0\n1 1\n", encoding="utf-8")
        ds = load_dataset(path)
        assert ds.n_features == 2
        assert len(ds.samples) == 2
        assert ds.samples[0].label == 0 and ds.samples[0].true_indices == {0}
        assert ds.samples[1].label == 1 and ds.samples[1].true_indices == {1}

    def test_comments_and_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("# header comment\n3\n\n0 1 2\n# trailing\n", encoding="utf-8")
        ds = load_dataset(path)
        assert ds.n_features == 3
        assert ds.samples[0].true_indices == {1, 2}

    def test_label_only_line_is_an_all_false_sample(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("4\n2\n", encoding="utf-8")
        ds = load_dataset(path)
        assert ds.samples[0].true_indices == frozenset()
        assert ds.samples[0].label == 2

    @pytest.mark.parametrize(
        "content,fragment",
        [
            ("0\n", "feature count"),
            ("x\n", "header"),
            ("2\n0 0 0\n", "strictly increasing"),
            ("2\n0 1 0\n", "strictly increasing"),
            ("2\n0 5\n", "out of range"),
            ("2\n0 a\n", "non-integer"),
            ("2\n-1 0\n", "negative class"),
            ("", "empty file"),
        ],
    )
    def test_malformed_inputs_error_with_context(self, tmp_path, content, fragment):
        path = tmp_path / "bad.txt"
        path.write_text(content, encoding="utf-8")
        with pytest.raises(DatasetFormatError) as err:
            load_dataset(path)
        assert fragment in str(err.value)

    def test_error_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("3\n0 1\n1 9\n", encoding="utf-8")
        with pytest.raises(DatasetFormatError) as err:
            load_dataset(path)
        assert ":3:" in str(err.value)

    def test_save_load_round_trip(self, tmp_path):
        ds = synth_noisy_conjunction(100, 7, 0.2, 3)
        p1 = tmp_path / "a.txt"
        p2 = tmp_path / "b.txt"
        save_dataset(ds, p1)
        loaded = load_dataset(p1)
        assert loaded.n_features == ds.n_features
        assert loaded.samples == ds.samples
        save_dataset(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestBooleanizer:
    def test_tokenizer_lowercases_and_splits_on_nonalnum(self):
        assert tokenize("Foo-bar, baz42! (qux)") == ["foo", "bar", "baz42", "qux"]

    def test_document_frequency_selection_with_ties(self):
        # df: a=1, b=2, c=1 -> b first, then tie broken lexicographically
        vocab = fit_vocabulary(["a b", "b c"], BooleanizerConfig(2))
        assert vocab == ["b", "a"]

    def test_df_counts_each_document_once(self):
        vocab = fit_vocabulary(["a a a", "b a"], BooleanizerConfig(3))
        assert vocab == ["a", "b"]

    def test_vocab_larger_than_distinct_tokens(self):
        vocab = fit_vocabulary(["a b", "b c"], BooleanizerConfig(50))
        assert sorted(vocab) == ["a", "b", "c"]

    def test_unseen_test_tokens_contribute_nothing(self):
        train, test = booleanize_corpus(
            ["apple banana", "banana cherry"],
            [0, 1],
            ["durian banana"],
            [1],
            BooleanizerConfig(3),
        )
        assert train.n_features == 3
        assert test.samples[0].true_indices == {train.n_features - test.n_features + 0}

    def test_fit_on_train_only_and_presence_bits(self):
        train, test = booleanize_corpus(
            ["red red blue", "blue green"],
            [0, 1],
            ["green purple red"],
            [1],
            BooleanizerConfig(10),
        )
        vocab = fit_vocabulary(["red red blue", "blue green"], BooleanizerConfig(10))
        assert vocab == ["blue", "green", "red"]
        assert train.samples[0].true_indices == {0, 2}
        assert train.samples[1].true_indices == {0, 1}
        assert test.samples[0].true_indices == {1, 2}  # purple ignored

    def test_empty_training_corpus_rejected(self):
        with pytest.raises(ValueError):
            booleanize_corpus([], [], ["x"], [0], BooleanizerConfig(2))

    def test_label_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            texts_to_dataset(["a"], [0, 1], ["a"])

    def test_determinism(self):
        texts = [f"tok{i} tok{i % 7} shared" for i in range(50)]
        a = fit_vocabulary(texts, BooleanizerConfig(20))
        b = fit_vocabulary(list(texts), BooleanizerConfig(20))
        assert a == b


class TestSynthNoisyConjunction:
    def test_noiseless_labels_match_concept(self):
        ds = synth_noisy_conjunction(500, 5, 0.0, 9)
        for s in ds.samples:
            expect = int(0 in s.true_indices and 1 not in s.true_indices)
            assert s.label == expect

    def test_flip_fraction_within_binomial_bounds(self):
        clean = synth_noisy_conjunction(10_000, 6, 0.0, 42)
        noisy = synth_noisy_conjunction(10_000, 6, 0.1, 42)
        flipped = sum(
            a.label != b.label for a, b in zip(clean.samples, noisy.samples)
        )
        # Binomial(10000, 0.1): 4 sigma is +/- 120
        assert 0.088 <= flipped / 10_000 <= 0.112

    def test_seed_determinism(self):
        a = synth_noisy_conjunction(200, 8, 0.2, 5)
        b = synth_noisy_conjunction(200, 8, 0.2, 5)
        assert a.samples == b.samples

    def test_bounds_validated(self):
        with pytest.raises(ValueError):
            synth_noisy_conjunction(10, 1, 0.1, 0)
        with pytest.raises(ValueError):
            synth_noisy_conjunction(10, 4, 0.5, 0)
        with pytest.raises(ValueError):
            synth_noisy_conjunction(0, 4, 0.1, 0)


class TestLabeledTexts:
    def test_load(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("0\tsome doc\n1\tanother doc\n", encoding="utf-8")
        texts, labels = load_labeled_texts(path)
        assert texts == ["some doc", "another doc"]
        assert labels == [0, 1]

    def test_malformed(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("no tab here\n", encoding="utf-8")
        with pytest.raises(DatasetFormatError):
            load_labeled_texts(path)
        path.write_text("x\tdoc\n", encoding="utf-8")
        with pytest.raises(DatasetFormatError):
            load_labeled_texts(path)


class TestSampleCorpus:
    def test_shape_and_vocabulary_size(self):
        tr_texts, tr_labels, te_texts, te_labels = sample_corpus()
        assert len(tr_texts) >= 2000
        assert len(te_texts) >= 400
        assert sorted(set(tr_labels)) == [0, 1, 2, 3]
        assert sorted(set(te_labels)) == [0, 1, 2, 3]
        distinct = {tok for text in tr_texts for tok in tokenize(text)}
        assert len(distinct) >= 2000
