"""MIND-format corpus and behavior-log I/O.

Readers are streaming and line-tolerant: malformed lines are reported as
:class:`ParseError` records (with the 1-based line number) instead of
aborting, and well-formed records come back in input order.  File layouts
follow the public MIND distribution:

``news.tsv``       8 tab-separated columns
                   news_id, category, subcategory, title, abstract, url,
                   title_entities, abstract_entities
``behaviors.tsv``  5 tab-separated columns
                   impression_id, user_id, time, history, impressions
                   (history: space-separated news ids, may be empty;
                   impressions: space-separated ``<news_id>-<0|1>`` tokens)

Neither file carries a header row.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import MissingInput, NotAPermutation

NEWS_COLUMNS = 8
BEHAVIOR_COLUMNS = 5


@dataclass(frozen=True, slots=True)
class NewsArticle:
    news_id: str
    category: str
    subcategory: str
    title: str
    abstract: str
    url: str = ""
    title_entities: str = "[]"
    abstract_entities: str = "[]"


@dataclass(frozen=True, slots=True)
class ImpressionLog:
    impression_id: str
    user_id: str
    timestamp: str
    history: tuple[str, ...]
    candidates: tuple[tuple[str, int], ...]

    def clicked(self) -> tuple[str, ...]:
        return tuple(nid for nid, label in self.candidates if label == 1)


@dataclass(frozen=True, slots=True)
class UserSplit:
    user_id: str
    history_news: tuple[str, ...]
    recent_news: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class DatasetStats:
    users: int
    news: int
    impressions: int
    click_behaviors: int
    words: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "users": self.users,
                "news": self.news,
                "impressions": self.impressions,
                "click_behaviors": self.click_behaviors,
                "words": self.words,
            },
            indent=2,
            sort_keys=True,
        )


@dataclass(frozen=True, slots=True)
class ParseError:
    line_no: int
    reason: str
    detail: str = ""


def _decode(line: str | bytes, line_no: int) -> tuple[str | None, ParseError | None]:
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            return None, ParseError(line_no, "NonUtf8Line", str(exc))
    return line.rstrip("\r\n"), None


def _parse_news_line(line: str | bytes, line_no: int):
    text, err = _decode(line, line_no)
    if err is not None:
        return None, err
    fields = text.split("\t")
    if len(fields) != NEWS_COLUMNS:
        return None, ParseError(line_no, "WrongColumnCount", f"got {len(fields)} columns")
    news_id, category, subcategory, title, abstract, url, t_ent, a_ent = fields
    if not news_id.strip():
        return None, ParseError(line_no, "EmptyNewsId")
    if not category.strip() or not subcategory.strip():
        return None, ParseError(line_no, "EmptyCategory", f"news_id={news_id}")
    article = NewsArticle(news_id, category, subcategory, title, abstract, url, t_ent, a_ent)
    return article, None


def _parse_behavior_line(line: str | bytes, line_no: int):
    text, err = _decode(line, line_no)
    if err is not None:
        return None, err
    fields = text.split("\t")
    if len(fields) != BEHAVIOR_COLUMNS:
        return None, ParseError(line_no, "WrongColumnCount", f"got {len(fields)} columns")
    impression_id, user_id, timestamp, history_field, impressions_field = fields
    history = tuple(tok for tok in history_field.split(" ") if tok)
    candidates: list[tuple[str, int]] = []
    for tok in impressions_field.split(" "):
        if not tok:
            continue
        news_id, sep, suffix = tok.rpartition("-")
        if not sep or suffix not in ("0", "1") or not news_id:
            return None, ParseError(line_no, "BadLabelSuffix", f"token={tok!r}")
        candidates.append((news_id, int(suffix)))
    if not candidates:
        return None, ParseError(line_no, "EmptyCandidates")
    return ImpressionLog(impression_id, user_id, timestamp, history, tuple(candidates)), None


def _parse_lines(lines, line_parser, threads: int):
    """Apply a per-line parser, merging results in input order.

    ``threads > 1`` splits the input into contiguous chunks; the merged
    output is identical to the single-threaded result by construction.
    """
    records, errors = [], []
    if threads <= 1:
        for line_no, line in enumerate(lines, start=1):
            rec, err = line_parser(line, line_no)
            if err is not None:
                errors.append(err)
            else:
                records.append(rec)
        return records, errors

    all_lines = list(lines)
    chunk = max(1, math.ceil(len(all_lines) / threads))
    spans = [(i, all_lines[i : i + chunk]) for i in range(0, len(all_lines), chunk)]

    def work(span):
        offset, part = span
        out = []
        for k, line in enumerate(part):
            out.append(line_parser(line, offset + k + 1))
        return out

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for part in pool.map(work, spans):
            for rec, err in part:
                if err is not None:
                    errors.append(err)
                else:
                    records.append(rec)
    return records, errors


def parse_news(lines: Iterable[str | bytes], threads: int = 1):
    """Parse news.tsv lines into (articles, parse errors)."""
    return _parse_lines(lines, _parse_news_line, threads)


def parse_behaviors(lines: Iterable[str | bytes], threads: int = 1):
    """Parse behaviors.tsv lines into (impression logs, parse errors)."""
    return _parse_lines(lines, _parse_behavior_line, threads)


def _read_binary_lines(path: str):
    with open(path, "rb") as fh:
        for line in fh:
            yield line


def load_news(path: str, threads: int = 1):
    if not os.path.isfile(path):
        raise MissingInput(f"news file not found: {path}")
    return parse_news(_read_binary_lines(path), threads=threads)


def load_behaviors(path: str, threads: int = 1):
    if not os.path.isfile(path):
        raise MissingInput(f"behaviors file not found: {path}")
    return parse_behaviors(_read_binary_lines(path), threads=threads)


def format_behavior_line(log: ImpressionLog) -> str:
    """Inverse of the behaviors.tsv line parser (round-trip safe)."""
    history = " ".join(log.history)
    impressions = " ".join(f"{nid}-{label}" for nid, label in log.candidates)
    return "\t".join([log.impression_id, log.user_id, log.timestamp, history, impressions])


def format_news_line(article: NewsArticle) -> str:
    return "\t".join(
        [
            article.news_id,
            article.category,
            article.subcategory,
            article.title,
            article.abstract,
            article.url,
            article.title_entities,
            article.abstract_entities,
        ]
    )


def user_click_sequences(logs: Sequence[ImpressionLog]) -> dict[str, list[str]]:
    """Chronological clicked-news sequence per user.

    The sequence is the user's first known click history followed by the
    clicked candidates of each of their impressions in file order (the
    history field of later impressions restates earlier clicks and is not
    re-counted).
    """
    sequences: dict[str, list[str]] = {}
    for log in logs:
        seq = sequences.get(log.user_id)
        if seq is None:
            seq = list(log.history)
            sequences[log.user_id] = seq
        seq.extend(log.clicked())
    return sequences


def split_user_data(logs: Sequence[ImpressionLog], recent_fraction: float = 0.2) -> list[UserSplit]:
    """Split each user's clicked news into history (older) and recent (newer).

    The chronologically last ``ceil(recent_fraction * n)`` clicks become
    the recent list; a single-click user therefore has an empty history.
    """
    if not 0.0 < recent_fraction < 1.0:
        raise ValueError(f"recent_fraction must be in (0,1), got {recent_fraction}")
    splits = []
    for user_id, clicks in user_click_sequences(logs).items():
        if not clicks:
            splits.append(UserSplit(user_id, (), ()))
            continue
        n_recent = math.ceil(recent_fraction * len(clicks))
        cut = len(clicks) - n_recent
        splits.append(UserSplit(user_id, tuple(clicks[:cut]), tuple(clicks[cut:])))
    return splits


def compute_stats(news: Sequence[NewsArticle], logs: Sequence[ImpressionLog]) -> DatasetStats:
    """Corpus-level counters: users, news, impressions, clicks, words."""
    users = len({log.user_id for log in logs})
    clicks = sum(len(log.history) + sum(label for _, label in log.candidates) for log in logs)
    words = sum(len(a.title.split()) + len(a.abstract.split()) for a in news)
    return DatasetStats(
        users=users,
        news=len(news),
        impressions=len(logs),
        click_behaviors=clicks,
        words=words,
    )


def ranks_from_scores(scores: Sequence[float]) -> list[int]:
    """1-based rank of each candidate under descending score.

    Ties keep original candidate order, so [0.9, 0.1, 0.5] -> [1, 3, 2].
    """
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    ranks = [0] * len(scores)
    for position, idx in enumerate(order, start=1):
        ranks[idx] = position
    return ranks


def _check_permutation(impression_id: str, ranks: Sequence[int]) -> None:
    if sorted(ranks) != list(range(1, len(ranks) + 1)):
        raise NotAPermutation(f"{impression_id}: ranks {list(ranks)} are not a permutation of 1..{len(ranks)}")


def _impression_sort_key(impression_id: str) -> tuple[int, int, str]:
    # numeric ids sort numerically ("9" before "10"), others lexically after
    if impression_id.isdigit():
        return (0, int(impression_id), "")
    return (1, 0, impression_id)


def write_predictions(ranked: Iterable[tuple[str, Sequence[int]]], sink) -> None:
    """Write leaderboard-format lines ``impression_id [r1,r2,...]``.

    Lines are sorted by impression id (numerically when ids are numeric);
    every rank list must be a permutation of 1..k.
    """
    rows = sorted(ranked, key=lambda item: _impression_sort_key(item[0]))
    for impression_id, ranks in rows:
        _check_permutation(impression_id, ranks)
        sink.write(f"{impression_id} [{','.join(str(r) for r in ranks)}]\n")


def read_predictions(lines: Iterable[str]) -> list[tuple[str, list[int]]]:
    out = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        impression_id, _, rest = line.partition(" ")
        ranks = [int(tok) for tok in rest.strip("[]").split(",") if tok]
        out.append((impression_id, ranks))
    return out


def write_text_atomic(path: str, text: str) -> None:
    """Write a whole text file atomically (tmp file + rename)."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
