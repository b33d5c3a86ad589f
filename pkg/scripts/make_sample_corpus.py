#!/usr/bin/env python3
"""Regenerate the bundled synthetic text corpus.

Four topics, each marked by its own keyword vocabulary on top of a shared
Zipf-distributed background vocabulary of pseudo-words.  The output is
deterministic for a fixed seed, so the committed corpus files are
reproducible with:

    python3 scripts/make_sample_corpus.py
"""

from __future__ import annotations

import pathlib

import numpy as np

SEED = 20240601
N_CLASSES = 4
TRAIN_PER_CLASS = 600
TEST_PER_CLASS = 160
N_BACKGROUND = 2500
KEYWORDS_PER_CLASS = 60
KEYWORD_RATE = 0.32

_SYLLABLES = [
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du",
    "fa", "fe", "fi", "fo", "fu", "ga", "ge", "gi", "go", "gu",
    "ka", "ke", "ki", "ko", "ku", "la", "le", "li", "lo", "lu",
    "ma", "me", "mi", "mo", "mu", "na", "ne", "ni", "no", "nu",
    "pa", "pe", "pi", "po", "pu", "ra", "re", "ri", "ro", "ru",
    "sa", "se", "si", "so", "su", "ta", "te", "ti", "to", "tu",
    "va", "ve", "vi", "vo", "vu", "za", "ze", "zi", "zo", "zu",
]


def make_words(count: int, rng: np.random.Generator) -> list[str]:
    words: list[str] = []
    seen = set()
    while len(words) < count:
        n_syl = int(rng.integers(2, 5))
        word = "".join(rng.choice(_SYLLABLES) for _ in range(n_syl))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def zipf_weights(n: int) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1)
    return w / w.sum()


def make_corpus():
    rng = np.random.default_rng(SEED)
    words = make_words(N_BACKGROUND + N_CLASSES * KEYWORDS_PER_CLASS, rng)
    background = words[:N_BACKGROUND]
    keywords = [
        words[N_BACKGROUND + c * KEYWORDS_PER_CLASS : N_BACKGROUND + (c + 1) * KEYWORDS_PER_CLASS]
        for c in range(N_CLASSES)
    ]
    bg_weights = zipf_weights(N_BACKGROUND)
    kw_weights = zipf_weights(KEYWORDS_PER_CLASS)

    def make_doc(label: int) -> str:
        length = 10 + int(rng.poisson(16))
        toks = []
        for _ in range(length):
            if rng.random() < KEYWORD_RATE:
                toks.append(keywords[label][int(rng.choice(KEYWORDS_PER_CLASS, p=kw_weights))])
            else:
                toks.append(background[int(rng.choice(N_BACKGROUND, p=bg_weights))])
        return " ".join(toks)

    def make_split(per_class: int) -> list[str]:
        lines = []
        for label in range(N_CLASSES):
            for _ in range(per_class):
                lines.append(f"{label}\t{make_doc(label)}")
        order = rng.permutation(len(lines))
        return [lines[i] for i in order]

    return make_split(TRAIN_PER_CLASS), make_split(TEST_PER_CLASS)


def main():
    assets = pathlib.Path(__file__).resolve().parent.parent / "src" / "ctm" / "assets"
    assets.mkdir(parents=True, exist_ok=True)
    train, test = make_corpus()
    (assets / "sample_train.txt").write_text("\n".join(train) + "\n", encoding="utf-8")
    (assets / "sample_test.txt").write_text("\n".join(test) + "\n", encoding="utf-8")
    distinct = {tok for line in train for tok in line.split("\t")[1].split()}
    print(f"train docs: {len(train)}, test docs: {len(test)}, distinct train tokens: {len(distinct)}")


if __name__ == "__main__":
    main()
