"""Synthetic planted-preference corpus for end-to-end testing.

Each category owns a disjoint pseudo-word vocabulary (disjoint consonant
inventories, so even stemmed forms cannot collide across categories), and
each user clicks news from exactly one category.  A working pipeline must
therefore rank the preferred-category candidate above the others, which
gives a known learnable signal with a known ceiling.

Writers emit standard news/behaviors TSV files plus an 80/20
train/test split of the impressions (per user: the chronologically last
fifth of their impressions are held out).
"""

from __future__ import annotations

import datetime as dt
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .mind import ImpressionLog, NewsArticle, format_behavior_line, format_news_line, write_text_atomic

_CONSONANT_SETS = ("bdg", "klm", "prs", "tvz", "fjn", "cqw", "xhy")
_VOWELS = "aeiou"
_CATEGORY_NAMES = ("health", "sports", "finance", "travel", "movies", "weather", "gaming")
_FILLER = ("the", "to", "of", "a", "in", "for")


@dataclass(frozen=True, slots=True)
class FixturePaths:
    root: str
    news: str
    behaviors_train: str
    behaviors_test: str


def _category_vocab(rng: np.random.Generator, consonants: str, size: int) -> list[str]:
    words: list[str] = []
    seen = set()
    while len(words) < size:
        word = "".join(
            consonants[rng.integers(len(consonants))] + _VOWELS[rng.integers(len(_VOWELS))]
            for _ in range(3)
        )
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def _timestamp(index: int) -> str:
    t = dt.datetime(2019, 11, 1, 6, 0, 0) + dt.timedelta(seconds=37 * index)
    hour12 = t.hour % 12 or 12
    ampm = "AM" if t.hour < 12 else "PM"
    return f"{t.month}/{t.day}/{t.year} {hour12}:{t.minute:02d}:{t.second:02d} {ampm}"


def _phrase(rng: np.random.Generator, vocab: list[str], length: int) -> list[str]:
    words = [vocab[rng.integers(len(vocab))] for _ in range(length)]
    # sprinkle stopwords so preprocessing has something to remove
    if rng.random() < 0.7:
        pos = int(rng.integers(len(words) + 1))
        words.insert(pos, _FILLER[rng.integers(len(_FILLER))])
    return words


def generate_corpus(
    out_dir: str,
    n_news: int = 500,
    n_categories: int = 5,
    n_users: int = 200,
    n_impressions: int = 2000,
    words_per_category: int = 30,
    title_words: int = 6,
    abstract_words: int = 15,
    history_min: int = 8,
    history_max: int = 12,
    negatives_per_impression: int = 4,
    train_fraction: float = 0.8,
    seed: int = 7,
) -> FixturePaths:
    """Write news.tsv plus behaviors_train.tsv / behaviors_test.tsv.

    Deterministic for a fixed seed.  Users are assigned categories round
    robin; every impression shows one preferred-category candidate (the
    click) and ``negatives_per_impression`` candidates from other
    categories, in shuffled order.
    """
    if not 2 <= n_categories <= len(_CONSONANT_SETS):
        raise ConfigError(f"n_categories must be in [2, {len(_CONSONANT_SETS)}], got {n_categories}")
    if n_news % n_categories:
        raise ConfigError(f"n_news={n_news} must divide evenly into {n_categories} categories")
    if n_impressions % n_users:
        raise ConfigError(f"n_impressions={n_impressions} must divide evenly over {n_users} users")
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must be in (0,1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    per_category = n_news // n_categories
    vocabs = [
        _category_vocab(rng, _CONSONANT_SETS[c], words_per_category)
        for c in range(n_categories)
    ]

    articles: list[NewsArticle] = []
    ids_by_category: list[list[str]] = [[] for _ in range(n_categories)]
    for i in range(n_news):
        cat = i % n_categories
        news_id = f"N{i + 1}"
        title = " ".join(_phrase(rng, vocabs[cat], title_words))
        abstract = " ".join(_phrase(rng, vocabs[cat], abstract_words)) + "."
        articles.append(NewsArticle(
            news_id=news_id,
            category=_CATEGORY_NAMES[cat],
            subcategory=f"{_CATEGORY_NAMES[cat]}-{i % 3}",
            title=title[0].upper() + title[1:],
            abstract=abstract,
            url=f"https://example.invalid/{news_id}",
            title_entities="[]",
            abstract_entities="[]",
        ))
        ids_by_category[cat].append(news_id)

    per_user = n_impressions // n_users
    n_test = max(1, per_user - int(round(train_fraction * per_user)))
    histories: list[list[str]] = []
    for u in range(n_users):
        cat = u % n_categories
        size = int(rng.integers(history_min, history_max + 1))
        picks = rng.choice(per_category, size=size, replace=False)
        histories.append([ids_by_category[cat][int(p)] for p in picks])

    train_logs: list[ImpressionLog] = []
    test_logs: list[ImpressionLog] = []
    impression_id = 0
    for round_no in range(per_user):
        for u in range(n_users):
            impression_id += 1
            cat = u % n_categories
            positive = ids_by_category[cat][int(rng.integers(per_category))]
            candidates = [(positive, 1)]
            for _ in range(negatives_per_impression):
                other = int(rng.integers(n_categories - 1))
                if other >= cat:
                    other += 1
                neg = ids_by_category[other][int(rng.integers(per_category))]
                candidates.append((neg, 0))
            order = rng.permutation(len(candidates))
            log = ImpressionLog(
                impression_id=str(impression_id),
                user_id=f"U{u + 1}",
                timestamp=_timestamp(impression_id),
                history=tuple(histories[u]),
                candidates=tuple(candidates[int(k)] for k in order),
            )
            if round_no < per_user - n_test:
                train_logs.append(log)
            else:
                test_logs.append(log)

    os.makedirs(out_dir, exist_ok=True)
    paths = FixturePaths(
        root=out_dir,
        news=os.path.join(out_dir, "news.tsv"),
        behaviors_train=os.path.join(out_dir, "behaviors_train.tsv"),
        behaviors_test=os.path.join(out_dir, "behaviors_test.tsv"),
    )
    write_text_atomic(paths.news, "\n".join(format_news_line(a) for a in articles) + "\n")
    write_text_atomic(
        paths.behaviors_train, "\n".join(format_behavior_line(b) for b in train_logs) + "\n"
    )
    write_text_atomic(
        paths.behaviors_test, "\n".join(format_behavior_line(b) for b in test_logs) + "\n"
    )
    return paths
