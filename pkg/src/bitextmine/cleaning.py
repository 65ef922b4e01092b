"""Corpus cleaning applied between alignment and filtering: exact
deduplication, source/target overlap removal, and language-ID screening.

Each filter keeps surviving pairs in order and never edits sentence text;
dedup compares whitespace-normalized text but emits the originals. All
three are idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass

Bitext = list[tuple[str, str]]

DEFAULT_OVERLAP_THRESHOLD = 0.9

_KHMER = (0x1780, 0x17FF)
_ARABIC = ((0x0600, 0x06FF), (0x0750, 0x077F), (0xFB50, 0xFDFF))


@dataclass(frozen=True)
class LidPrediction:
    """External language-ID prediction for one pair; confidences optional."""

    src_lang: str
    src_conf: float | None
    tgt_lang: str
    tgt_conf: float | None

    def __post_init__(self):
        if not self.src_lang or not self.tgt_lang:
            raise ValueError("language codes must be non-empty")


def _collapse_ws(text: str) -> str:
    return " ".join(text.split())


def deduplicate(bitext: Bitext) -> Bitext:
    """Keep the first occurrence of each pair, comparing trimmed,
    whitespace-collapsed text; originals are emitted unchanged."""
    seen: set[tuple[str, str]] = set()
    out: Bitext = []
    for src, tgt in bitext:
        key = (_collapse_ws(src), _collapse_ws(tgt))
        if key in seen:
            continue
        seen.add(key)
        out.append((src, tgt))
    return out


def lcs_length(a: str, b: str) -> int:
    """Longest common subsequence over Unicode scalar values."""
    if not a or not b:
        return 0
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for ca in a:
        cur = [0]
        for j, cb in enumerate(b, start=1):
            if ca == cb:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def overlap_ratio(src: str, tgt: str) -> float:
    """LCS(src, tgt) / max(len): 1.0 for two empty strings, 0.0 when exactly
    one side is empty. Character-level, so it needs no tokenizer."""
    if not src and not tgt:
        return 1.0
    if not src or not tgt:
        return 0.0
    return lcs_length(src, tgt) / max(len(src), len(tgt))


def filter_overlap(bitext: Bitext, threshold: float = DEFAULT_OVERLAP_THRESHOLD) -> Bitext:
    """Drop pairs whose overlap_ratio strictly exceeds the threshold."""
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"overlap threshold must be in (0, 1], got {threshold}")
    return [(s, t) for s, t in bitext if overlap_ratio(s, t) <= threshold]


def detect_script(text: str) -> str:
    """Majority vote over letters by Unicode block: km (Khmer), ps (Arabic
    script), en (basic Latin); no letters or a tied vote gives 'unk'."""
    counts = {"km": 0, "ps": 0, "en": 0}
    for ch in text:
        cp = ord(ch)
        if _KHMER[0] <= cp <= _KHMER[1]:
            counts["km"] += 1
        elif any(lo <= cp <= hi for lo, hi in _ARABIC):
            counts["ps"] += 1
        elif ("a" <= ch <= "z") or ("A" <= ch <= "Z"):
            counts["en"] += 1
    top = max(counts.values())
    if top == 0:
        return "unk"
    winners = [lang for lang, c in counts.items() if c == top]
    return winners[0] if len(winners) == 1 else "unk"


def filter_lang(
    bitext: Bitext,
    en_side: str = "src",
    predictions: list[LidPrediction] | None = None,
    strict: bool = False,
    other_lang: str | None = None,
    min_confidence: float = 0.0,
) -> Bitext:
    """Keep pairs whose English side is identified as 'en'.

    External predictions take priority; the script heuristic is the
    fallback. Confidence is ignored unless min_confidence is raised. Strict
    mode additionally requires the non-English side to match other_lang.
    """
    if en_side not in ("src", "tgt"):
        raise ValueError(f"en_side must be 'src' or 'tgt', got {en_side!r}")
    if predictions is not None and len(predictions) != len(bitext):
        raise ValueError(
            f"predictions length {len(predictions)} != bitext length {len(bitext)}"
        )
    if strict and other_lang is None:
        raise ValueError("strict language filtering needs other_lang")

    out: Bitext = []
    for idx, (src, tgt) in enumerate(bitext):
        if predictions is not None:
            p = predictions[idx]
            en_lang, en_conf = (p.src_lang, p.src_conf) if en_side == "src" else (p.tgt_lang, p.tgt_conf)
            ot_lang, ot_conf = (p.tgt_lang, p.tgt_conf) if en_side == "src" else (p.src_lang, p.src_conf)
        else:
            en_lang = detect_script(src if en_side == "src" else tgt)
            ot_lang = detect_script(tgt if en_side == "src" else src)
            en_conf = ot_conf = None
        if en_lang != "en":
            continue
        if en_conf is not None and en_conf < min_confidence:
            continue
        if strict:
            if ot_lang != other_lang:
                continue
            if ot_conf is not None and ot_conf < min_confidence:
                continue
        out.append((src, tgt))
    return out


def clean_corpus(
    bitext: Bitext,
    overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD,
    en_side: str = "src",
    predictions: list[LidPrediction] | None = None,
    strict: bool = False,
    other_lang: str | None = None,
    min_confidence: float = 0.0,
) -> tuple[Bitext, dict[str, int], list[int]]:
    """Fixed pipeline dedup -> overlap -> language ID.

    Returns (cleaned pairs, per-stage removal counts, surviving input
    indices) so callers can subset row-parallel artifacts like embeddings.
    """
    if not (0.0 < overlap_threshold <= 1.0):
        raise ValueError(f"overlap threshold must be in (0, 1], got {overlap_threshold}")
    if predictions is not None and len(predictions) != len(bitext):
        raise ValueError(
            f"predictions length {len(predictions)} != bitext length {len(bitext)}"
        )

    seen: set[tuple[str, str]] = set()
    deduped: list[int] = []
    for i, (s, t) in enumerate(bitext):
        key = (_collapse_ws(s), _collapse_ws(t))
        if key in seen:
            continue
        seen.add(key)
        deduped.append(i)
    n_dedup = len(bitext) - len(deduped)

    overlapped = [
        i for i in deduped if overlap_ratio(*bitext[i]) <= overlap_threshold
    ]
    n_overlap = len(deduped) - len(overlapped)

    survivors = [
        i
        for i in overlapped
        if filter_lang(
            [bitext[i]],
            en_side=en_side,
            predictions=[predictions[i]] if predictions is not None else None,
            strict=strict,
            other_lang=other_lang,
            min_confidence=min_confidence,
        )
    ]
    n_lang = len(overlapped) - len(survivors)

    stats = {
        "removed_duplicates": n_dedup,
        "removed_overlap": n_overlap,
        "removed_lang": n_lang,
    }
    return [bitext[i] for i in survivors], stats, survivors
