"""Text-side I/O: sentence files, bitext and scored-bitext TSV, alignment
stanzas, LID sidecars, manifests, flat config files, and run reports.

All text I/O is UTF-8 with LF line endings. The tab is the field separator
everywhere, so sentence text has embedded tabs replaced by a space when
written.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .align import Alignment, Link
from .cleaning import LidPrediction
from .embeddings import load_embeddings
from .margin import Bitext, ScoredBitext


class ParseError(ValueError):
    """A text input violated its format; carries the 1-based line number."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


def _clean_field(text: str) -> str:
    return text.replace("\t", " ").replace("\n", " ").replace("\r", " ")


def read_sentences(path: str | Path) -> list[str]:
    with open(path, encoding="utf-8", newline="\n") as f:
        return [line.rstrip("\n") for line in f]


def write_sentences(lines: list[str], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(_clean_field(line) + "\n")


def read_bitext(path: str | Path) -> Bitext:
    out: Bitext = []
    with open(path, encoding="utf-8", newline="\n") as f:
        for no, line in enumerate(f, start=1):
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 2:
                raise ParseError(path, no, f"expected 2 tab-separated fields, got {len(fields)}")
            out.append((fields[0], fields[1]))
    return out


def write_bitext(pairs: Bitext, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for src, tgt in pairs:
            f.write(f"{_clean_field(src)}\t{_clean_field(tgt)}\n")


def read_scored(path: str | Path) -> ScoredBitext:
    out: ScoredBitext = []
    with open(path, encoding="utf-8", newline="\n") as f:
        for no, line in enumerate(f, start=1):
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 3:
                raise ParseError(path, no, f"expected 3 tab-separated fields, got {len(fields)}")
            try:
                score = float(fields[0])
            except ValueError:
                raise ParseError(path, no, f"bad score {fields[0]!r}") from None
            out.append((fields[1], fields[2], score))
    return out


def write_scored(scored: ScoredBitext, path: str | Path) -> None:
    """Scored corpus TSV: score with six decimal places, then src, then tgt."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for src, tgt, score in scored:
            f.write(f"{score:.6f}\t{_clean_field(src)}\t{_clean_field(tgt)}\n")


def read_labels(path: str | Path) -> list[int]:
    out = []
    with open(path, encoding="utf-8", newline="\n") as f:
        for no, line in enumerate(f, start=1):
            v = line.strip()
            if v not in ("0", "1"):
                raise ParseError(path, no, f"labels must be 0 or 1, got {v!r}")
            out.append(int(v))
    return out


def write_labels(labels: list[int], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for v in labels:
            f.write(f"{int(v)}\n")


# --- alignment stanzas -----------------------------------------------------

def _format_side(indices: tuple[int, ...]) -> str:
    return ",".join(str(i) for i in indices) if indices else "-"


def _parse_side(text: str, path, no: int) -> tuple[int, ...]:
    if text == "-":
        return ()
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise ParseError(path, no, f"bad index list {text!r}") from None


def write_alignments(entries: list[tuple[str, Alignment]], path: str | Path) -> None:
    """One stanza per document: a `# doc: <id>` header, then one link per
    line as src_indices<TAB>tgt_indices<TAB>cost with `-` for an empty side;
    stanzas separated by blank lines."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for pos, (doc_id, alignment) in enumerate(entries):
            if pos:
                f.write("\n")
            f.write(f"# doc: {doc_id}\n")
            for l in alignment.links:
                f.write(f"{_format_side(l.src)}\t{_format_side(l.tgt)}\t{l.cost!r}\n")


def read_alignments(path: str | Path) -> list[tuple[str, Alignment]]:
    entries: list[tuple[str, Alignment]] = []
    doc_id: str | None = None
    links: list[Link] = []
    started = False

    def flush():
        nonlocal doc_id, links, started
        if started:
            entries.append((doc_id if doc_id is not None else str(len(entries)), Alignment(links)))
        doc_id, links, started = None, [], False

    with open(path, encoding="utf-8", newline="\n") as f:
        for no, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                flush()
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("doc:"):
                    doc_id = body[len("doc:") :].strip()
                    started = True
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(path, no, f"expected 3 tab-separated fields, got {len(fields)}")
            src = _parse_side(fields[0], path, no)
            tgt = _parse_side(fields[1], path, no)
            try:
                cost = float(fields[2])
            except ValueError:
                raise ParseError(path, no, f"bad cost {fields[2]!r}") from None
            links.append(Link(src, tgt, cost))
            started = True
    flush()
    return entries


def write_matrix_tsv(matrix: np.ndarray, path: str | Path) -> None:
    """Similarity matrix as TSV of reals, for external heatmap plotting."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in np.asarray(matrix):
            f.write("\t".join(repr(float(v)) for v in row) + "\n")


# --- LID sidecar -----------------------------------------------------------

def _format_conf(conf: float | None) -> str:
    return "-" if conf is None else repr(float(conf))


def read_lid_predictions(path: str | Path) -> list[LidPrediction]:
    """Sidecar TSV: src_lang, src_conf, tgt_lang, tgt_conf; `-` = no confidence."""
    out = []
    with open(path, encoding="utf-8", newline="\n") as f:
        for no, line in enumerate(f, start=1):
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 4:
                raise ParseError(path, no, f"expected 4 tab-separated fields, got {len(fields)}")
            try:
                src_conf = None if fields[1] == "-" else float(fields[1])
                tgt_conf = None if fields[3] == "-" else float(fields[3])
            except ValueError:
                raise ParseError(path, no, "bad confidence value") from None
            try:
                out.append(LidPrediction(fields[0], src_conf, fields[2], tgt_conf))
            except ValueError as e:
                raise ParseError(path, no, str(e)) from None
    return out


def write_lid_predictions(preds: list[LidPrediction], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for p in preds:
            f.write(
                f"{p.src_lang}\t{_format_conf(p.src_conf)}\t{p.tgt_lang}\t{_format_conf(p.tgt_conf)}\n"
            )


# --- manifest --------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    doc_id: str
    src_sentences: Path
    tgt_sentences: Path
    src_embeddings: Path
    tgt_embeddings: Path


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    """TSV of (doc_id, src sentences, tgt sentences, src embeddings, tgt
    embeddings); `#` comment lines allowed; relative paths resolve against
    the manifest's directory. Duplicate doc_ids are rejected."""
    base = Path(path).parent
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8", newline="\n") as f:
        for no, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 5:
                raise ParseError(path, no, f"expected 5 tab-separated fields, got {len(fields)}")
            doc_id = fields[0]
            if doc_id in seen:
                raise ParseError(path, no, f"duplicate doc_id {doc_id!r}")
            seen.add(doc_id)
            paths = [base / p if not Path(p).is_absolute() else Path(p) for p in fields[1:]]
            entries.append(ManifestEntry(doc_id, *paths))
    return entries


def validate_manifest_entry(entry: ManifestEntry) -> list[str]:
    """Problems with one entry: missing files or sentence/embedding count
    mismatches. Empty list means the entry is usable."""
    problems = []
    for label, p in (
        ("src_sentences", entry.src_sentences),
        ("tgt_sentences", entry.tgt_sentences),
        ("src_embeddings", entry.src_embeddings),
        ("tgt_embeddings", entry.tgt_embeddings),
    ):
        if not Path(p).is_file():
            problems.append(f"{entry.doc_id}: {label} missing: {p}")
    if problems:
        return problems
    for side in ("src", "tgt"):
        sents = read_sentences(getattr(entry, f"{side}_sentences"))
        embs = load_embeddings(getattr(entry, f"{side}_embeddings"))
        if len(sents) != embs.count:
            problems.append(
                f"{entry.doc_id}: {side} has {len(sents)} sentences but "
                f"{embs.count} embedding rows"
            )
    return problems


# --- config and reports ----------------------------------------------------

def read_config(path: str | Path) -> dict[str, str]:
    """Flat key=value config; blank lines and `#` comments ignored."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="\n") as f:
        for no, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(path, no, f"expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if not key:
                raise ParseError(path, no, "empty key")
            out[key] = value.strip()
    return out


def write_report(items: list[tuple[str, object]], path: str | Path) -> None:
    """Line-oriented key<TAB>value report, in insertion order."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for key, value in items:
            f.write(f"{key}\t{value}\n")


def read_report(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="\n") as f:
        for no, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            key, sep, value = line.partition("\t")
            if not sep:
                raise ParseError(path, no, f"expected key<TAB>value, got {line!r}")
            out[key] = value
    return out
