"""Rank-and-take subsampling of a scored corpus under an English-side token
budget, as used to cut mined corpora down to fixed training sizes."""

from __future__ import annotations

from .margin import Bitext, ScoredBitext


def count_tokens_en(sentence: str) -> int:
    """Number of maximal non-whitespace runs."""
    return len(sentence.split())


def subsample(
    scored: ScoredBitext,
    budget: int,
    en_side: str = "src",
    skip_overflow: bool = False,
) -> Bitext:
    """Take the highest-scoring pairs whose cumulative English-side tokens
    stay within the budget; output restored to original corpus order.

    Selection walks the score-descending order (ties to the earlier pair)
    and, by default, stops at the first pair that would overflow, so the
    result is a prefix of the ranking. ``skip_overflow`` instead skips
    overflowing pairs and keeps scanning.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    if en_side not in ("src", "tgt"):
        raise ValueError(f"en_side must be 'src' or 'tgt', got {en_side!r}")
    order = sorted(range(len(scored)), key=lambda i: (-scored[i][2], i))
    taken: list[int] = []
    used = 0
    for i in order:
        text = scored[i][0] if en_side == "src" else scored[i][1]
        t = count_tokens_en(text)
        if used + t > budget:
            if skip_overflow:
                continue
            break
        used += t
        taken.append(i)
    taken.sort()
    return [(scored[i][0], scored[i][1]) for i in taken]
