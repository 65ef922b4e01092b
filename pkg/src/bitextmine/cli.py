"""Command-line pipeline over a manifest of document pairs.

Subcommands: align, preprocess, train, score, subsample, heatmap, eval,
gen-synthetic. Every command takes --config (flat key=value file), --seed,
--jobs, --strict and --out; explicit flags override config values, which
override defaults. Reports are key<TAB>value lines and runs are
byte-reproducible apart from the wall_time_s line.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import align as al
from . import budget as bu
from . import corpusio as cio
from . import margin as mg
from . import projection as pj
from . import synthetic as syn
from .cleaning import clean_corpus
from .embeddings import (
    EmbeddingMatrix,
    block_embed,
    l2_normalize,
    load_embeddings,
    save_embeddings,
)

PROG = "bitextmine"


def _parse_bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# Per-command tunables: name -> (parser, default). CLI flags are registered
# with default=None so "explicit flag beats config beats default" resolves
# after parsing.
_COMMON = {
    "seed": (int, 0),
    "jobs": (int, 1),
}

_OPTIONS: dict[str, dict[str, tuple]] = {
    "align": {
        **_COMMON,
        "method": (str, "coarse"),
        "max_block": (int, 3),
        "skip_penalty": (float, 1.0),
        "baseline_samples": (int, 128),
        "band_width": (int, 10),
        "full_dp_threshold": (int, 64),
        "projection": (str, ""),
    },
    "preprocess": {
        **_COMMON,
        "overlap_threshold": (float, 0.9),
        "en_side": (str, "src"),
        "strict_lang": (_parse_bool, False),
        "other_lang": (str, ""),
        "min_confidence": (float, 0.0),
    },
    "score": {
        **_COMMON,
        "k": (int, mg.DEFAULT_K),
        "knn_side": (str, "cross"),
        "projection": (str, ""),
    },
    "train": {
        **_COMMON,
        "out_dim": (int, 256),
        "scale": (float, 1.0),
        "include_positive": (_parse_bool, False),
        "window": (int, 2),
        "random_negatives": (int, 2),
        "batch_size": (int, 32),
        "lr": (float, 0.1),
        "epochs": (int, 5),
        "momentum": (float, 0.9),
    },
    "subsample": {
        **_COMMON,
        "budget": (int, 5_000_000),
        "en_side": (str, "src"),
        "skip_overflow": (_parse_bool, False),
    },
    "heatmap": {**_COMMON},
    "eval": {**_COMMON},
    "gen-synthetic": {
        **_COMMON,
        "pairs": (int, 100),
        "dim": (int, 512),
        "clean_cos_min": (float, 0.9),
        "noise_cos_max": (float, 0.3),
        "insert_rate": (float, 0.0),
        "merge_rate": (float, 0.0),
    },
}


class Settings(dict):
    __getattr__ = dict.__getitem__


def _resolve(command: str, args: argparse.Namespace) -> Settings:
    """defaults < config file < explicit CLI flags."""
    spec = _OPTIONS[command]
    config: dict[str, str] = {}
    if args.config:
        config = cio.read_config(args.config)
        unknown = set(config) - set(spec)
        if unknown:
            raise ValueError(
                f"unknown config keys for {command}: {', '.join(sorted(unknown))}"
            )
    out = Settings()
    for name, (parse, default) in spec.items():
        cli_value = getattr(args, name, None)
        if cli_value is not None:
            out[name] = cli_value
        elif name in config:
            out[name] = parse(config[name])
        else:
            out[name] = default
    return out


def _config_echo(settings: Settings) -> list[tuple[str, object]]:
    return [(f"config.{k}", settings[k]) for k in sorted(settings)]


def _load_normalized(path) -> tuple[EmbeddingMatrix, int]:
    m, zeros = l2_normalize(load_embeddings(path))
    return m, zeros


def _maybe_project(m: EmbeddingMatrix, checkpoint: str) -> EmbeddingMatrix:
    if not checkpoint:
        return m
    model = pj.load_projection(checkpoint)
    return pj.forward_project(m, model)


def _write_report(out_dir: Path, rows: list[tuple[str, object]], started: float) -> None:
    rows = rows + [("wall_time_s", f"{time.perf_counter() - started:.3f}")]
    cio.write_report(rows, out_dir / "report.tsv")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- align -------------------------------------------------------------------

def _align_one(entry: cio.ManifestEntry, s: Settings):
    src_sents = cio.read_sentences(entry.src_sentences)
    tgt_sents = cio.read_sentences(entry.tgt_sentences)
    src_m, src_zeros = _load_normalized(entry.src_embeddings)
    tgt_m, tgt_zeros = _load_normalized(entry.tgt_embeddings)
    src_m = _maybe_project(src_m, s.projection)
    tgt_m = _maybe_project(tgt_m, s.projection)
    params = al.AlignParams(
        max_block=s.max_block,
        skip_penalty=s.skip_penalty,
        baseline_samples=s.baseline_samples,
        band_width=s.band_width,
        full_dp_threshold=s.full_dp_threshold,
        seed=s.seed,
    )
    counters = al.AlignCounters()
    if s.method == "full":
        alignment = al.align_full_dp(src_m, tgt_m, params, counters)
    elif s.method == "coarse":
        alignment = al.align_coarse_to_fine(src_m, tgt_m, params, counters)
    else:
        raise ValueError(f"unknown align method {s.method!r}")

    pairs: list[tuple[str, str]] = []
    src_vecs: list[np.ndarray] = []
    tgt_vecs: list[np.ndarray] = []
    for link in alignment.non_null():
        pairs.append(
            (
                " ".join(src_sents[i] for i in link.src),
                " ".join(tgt_sents[j] for j in link.tgt),
            )
        )
        src_vecs.append(block_embed(src_m, link.src))
        tgt_vecs.append(block_embed(tgt_m, link.tgt))
    return alignment, pairs, src_vecs, tgt_vecs, counters.cells, src_zeros + tgt_zeros


def cmd_align(args) -> int:
    started = time.perf_counter()
    s = _resolve("align", args)
    out = _out_dir(args)
    entries = cio.read_manifest(args.manifest)

    valid: list[cio.ManifestEntry] = []
    problems: list[str] = []
    for entry in entries:
        entry_problems = cio.validate_manifest_entry(entry)
        if entry_problems:
            problems.extend(entry_problems)
        else:
            valid.append(entry)
    if problems and args.strict:
        for p in problems:
            print(f"{PROG} align: {p}", file=sys.stderr)
        return 1

    if s.jobs > 1 and valid:
        with ThreadPoolExecutor(max_workers=s.jobs) as pool:
            results = list(pool.map(lambda e: _align_one(e, s), valid))
    else:
        results = [_align_one(e, s) for e in valid]

    all_pairs: list[tuple[str, str]] = []
    all_src_vecs: list[np.ndarray] = []
    all_tgt_vecs: list[np.ndarray] = []
    stanzas: list[tuple[str, al.Alignment]] = []
    links = null_links = cells = zero_rows = 0
    for entry, (alignment, pairs, sv, tv, doc_cells, doc_zeros) in zip(valid, results):
        stanzas.append((entry.doc_id, alignment))
        all_pairs.extend(pairs)
        all_src_vecs.extend(sv)
        all_tgt_vecs.extend(tv)
        links += len(alignment.links)
        null_links += sum(1 for l in alignment.links if l.is_null)
        cells += doc_cells
        zero_rows += doc_zeros

    cio.write_alignments(stanzas, out / "alignments.aln")
    cio.write_bitext(all_pairs, out / "bitext.tsv")
    dim = all_src_vecs[0].shape[0] if all_src_vecs else 1
    save_embeddings(
        EmbeddingMatrix(np.array(all_src_vecs) if all_src_vecs else np.zeros((0, dim))),
        out / "pairs.src.btx",
    )
    save_embeddings(
        EmbeddingMatrix(np.array(all_tgt_vecs) if all_tgt_vecs else np.zeros((0, dim))),
        out / "pairs.tgt.btx",
    )

    rows: list[tuple[str, object]] = [
        ("command", "align"),
        ("documents_total", len(entries)),
        ("documents_aligned", len(valid)),
        ("documents_rejected", len(entries) - len(valid)),
        ("links", links),
        ("null_links", null_links),
        ("null_link_rate", f"{(null_links / links) if links else 0.0:.6f}"),
        ("pairs_out", len(all_pairs)),
        ("cells_evaluated", cells),
        ("zero_embedding_rows", zero_rows),
    ]
    rows += [("rejected", p) for p in problems]
    rows += _config_echo(s)
    _write_report(out, rows, started)
    return 0


# --- preprocess ----------------------------------------------------------------

def cmd_preprocess(args) -> int:
    started = time.perf_counter()
    s = _resolve("preprocess", args)
    out = _out_dir(args)
    pairs = cio.read_bitext(args.bitext)
    predictions = cio.read_lid_predictions(args.lid) if args.lid else None

    cleaned, stats, kept = clean_corpus(
        pairs,
        overlap_threshold=s.overlap_threshold,
        en_side=s.en_side,
        predictions=predictions,
        strict=s.strict_lang,
        other_lang=s.other_lang or None,
        min_confidence=s.min_confidence,
    )
    cio.write_bitext(cleaned, out / "cleaned.tsv")
    with open(out / "kept_indices.txt", "w", encoding="utf-8", newline="\n") as f:
        for i in kept:
            f.write(f"{i}\n")

    for side, path in (("src", args.src_embeddings), ("tgt", args.tgt_embeddings)):
        if not path:
            continue
        m = load_embeddings(path)
        if m.count != len(pairs):
            raise ValueError(
                f"{side} embeddings have {m.count} rows but bitext has {len(pairs)} pairs"
            )
        subset = m.data[kept] if kept else np.zeros((0, m.dim), dtype=np.float32)
        save_embeddings(EmbeddingMatrix(subset), out / f"pairs.{side}.btx")

    rows: list[tuple[str, object]] = [
        ("command", "preprocess"),
        ("pairs_in", len(pairs)),
        ("pairs_out", len(cleaned)),
        ("removed_duplicates", stats["removed_duplicates"]),
        ("removed_overlap", stats["removed_overlap"]),
        ("removed_lang", stats["removed_lang"]),
    ]
    rows += _config_echo(s)
    _write_report(out, rows, started)
    return 0


# --- score ---------------------------------------------------------------------

def cmd_score(args) -> int:
    started = time.perf_counter()
    s = _resolve("score", args)
    out = _out_dir(args)
    pairs = cio.read_bitext(args.bitext)
    src_m, _ = _load_normalized(args.src_embeddings)
    tgt_m, _ = _load_normalized(args.tgt_embeddings)
    src_m = _maybe_project(src_m, s.projection)
    tgt_m = _maybe_project(tgt_m, s.projection)
    scored = mg.score_corpus(pairs, src_m, tgt_m, k=s.k, knn_side=s.knn_side)
    cio.write_scored(scored, out / "scored.tsv")
    rows: list[tuple[str, object]] = [
        ("command", "score"),
        ("pairs_in", len(pairs)),
        ("pairs_out", len(scored)),
    ]
    rows += _config_echo(s)
    _write_report(out, rows, started)
    return 0


# --- train ---------------------------------------------------------------------

def cmd_train(args) -> int:
    started = time.perf_counter()
    s = _resolve("train", args)
    out = _out_dir(args)
    src_m, _ = _load_normalized(args.src_embeddings)
    tgt_m, _ = _load_normalized(args.tgt_embeddings)
    cfg = pj.TrainConfig(
        window=s.window,
        random_negatives=s.random_negatives,
        batch_size=s.batch_size,
        lr=s.lr,
        epochs=s.epochs,
        seed=s.seed,
        momentum=s.momentum,
    )
    init = pj.init_model(
        in_dim=src_m.dim,
        out_dim=s.out_dim,
        seed=s.seed,
        scale=s.scale,
        include_positive=s.include_positive,
    )
    pairs = [("", "")] * src_m.count
    model, trace = pj.train_projection(pairs, src_m, tgt_m, cfg, init)
    pj.save_projection(model, out / "projection.btxproj")
    with open(out / "loss_trace.tsv", "w", encoding="utf-8", newline="\n") as f:
        for epoch, loss in enumerate(trace, start=1):
            f.write(f"{epoch}\t{loss!r}\n")
    rows: list[tuple[str, object]] = [
        ("command", "train"),
        ("pairs_in", src_m.count),
        ("epochs_run", len(trace)),
        ("first_epoch_loss", repr(trace[0])),
        ("final_epoch_loss", repr(trace[-1])),
    ]
    rows += _config_echo(s)
    _write_report(out, rows, started)
    return 0


# --- subsample -------------------------------------------------------------------

def cmd_subsample(args) -> int:
    started = time.perf_counter()
    s = _resolve("subsample", args)
    out = _out_dir(args)
    scored = cio.read_scored(args.scored)
    selected = bu.subsample(scored, s.budget, en_side=s.en_side, skip_overflow=s.skip_overflow)
    cio.write_sentences([p[0] for p in selected], out / "selected.src.txt")
    cio.write_sentences([p[1] for p in selected], out / "selected.tgt.txt")
    tokens = sum(bu.count_tokens_en(p[0] if s.en_side == "src" else p[1]) for p in selected)
    rows: list[tuple[str, object]] = [
        ("command", "subsample"),
        ("pairs_in", len(scored)),
        ("pairs_out", len(selected)),
        ("tokens_selected", tokens),
    ]
    rows += _config_echo(s)
    _write_report(out, rows, started)
    return 0


# --- heatmap -------------------------------------------------------------------

def cmd_heatmap(args) -> int:
    started = time.perf_counter()
    s = _resolve("heatmap", args)
    out = _out_dir(args)
    src_m, _ = _load_normalized(args.src_embeddings)
    tgt_m, _ = _load_normalized(args.tgt_embeddings)
    sims = al.similarity_matrix(src_m, tgt_m)
    cio.write_matrix_tsv(sims, out / "similarity.tsv")
    rows: list[tuple[str, object]] = [
        ("command", "heatmap"),
        ("rows", sims.shape[0]),
        ("cols", sims.shape[1]),
    ]
    rows += _config_echo(s)
    _write_report(out, rows, started)
    return 0


# --- eval ----------------------------------------------------------------------

def cmd_eval(args) -> int:
    started = time.perf_counter()
    s = _resolve("eval", args)
    out = _out_dir(args)
    rows: list[tuple[str, object]] = [("command", "eval")]

    if args.pred or args.gold:
        if not (args.pred and args.gold):
            print(f"{PROG} eval: --pred and --gold go together", file=sys.stderr)
            return 1
        pred = dict(cio.read_alignments(args.pred))
        gold = dict(cio.read_alignments(args.gold))
        common = [doc for doc in gold if doc in pred]
        if not common:
            print(f"{PROG} eval: no common doc ids between pred and gold", file=sys.stderr)
            return 1
        correct = n_pred = n_gold = 0
        for doc in common:
            pred_set = {(l.src, l.tgt) for l in pred[doc].non_null()}
            gold_set = {(l.src, l.tgt) for l in gold[doc].non_null()}
            correct += len(pred_set & gold_set)
            n_pred += len(pred_set)
            n_gold += len(gold_set)
        precision = correct / n_pred if n_pred else 0.0
        recall = correct / n_gold if n_gold else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        rows += [
            ("documents", len(common)),
            ("precision", f"{precision:.6f}"),
            ("recall", f"{recall:.6f}"),
            ("f1", f"{f1:.6f}"),
        ]

    if args.scores or args.labels:
        if not (args.scores and args.labels):
            print(f"{PROG} eval: --scores and --labels go together", file=sys.stderr)
            return 1
        scored = cio.read_scored(args.scores)
        labels = cio.read_labels(args.labels)
        auc = syn.ranking_auc([sc for _, _, sc in scored], labels)
        rows += [("auc", f"{auc:.6f}")]

    rows += _config_echo(s)
    _write_report(out, rows, started)
    return 0


# --- gen-synthetic ---------------------------------------------------------------

def cmd_gen_synthetic(args) -> int:
    started = time.perf_counter()
    s = _resolve("gen-synthetic", args)
    out = _out_dir(args)
    spec = syn.SyntheticSpec(
        n_pairs=s.pairs,
        dim=s.dim,
        clean_cos_min=s.clean_cos_min,
        noise_cos_max=s.noise_cos_max,
        insert_rate=s.insert_rate,
        merge_rate=s.merge_rate,
        seed=s.seed,
    )
    corpus = syn.gen_synthetic(spec)
    cio.write_sentences(corpus.src_sentences, out / "src.txt")
    cio.write_sentences(corpus.tgt_sentences, out / "tgt.txt")
    save_embeddings(corpus.src_embs, out / "src.btx")
    save_embeddings(corpus.tgt_embs, out / "tgt.btx")
    cio.write_alignments([("synthetic", corpus.gold)], out / "gold.aln")
    cio.write_labels(corpus.labels, out / "labels.txt")
    with open(out / "manifest.tsv", "w", encoding="utf-8", newline="\n") as f:
        f.write("# doc_id\tsrc_sentences\ttgt_sentences\tsrc_embeddings\ttgt_embeddings\n")
        f.write("synthetic\tsrc.txt\ttgt.txt\tsrc.btx\ttgt.btx\n")
    rows: list[tuple[str, object]] = [
        ("command", "gen-synthetic"),
        ("src_sentences", len(corpus.src_sentences)),
        ("tgt_sentences", len(corpus.tgt_sentences)),
        ("gold_links", len(corpus.gold.links)),
        ("gold_non_null_links", len(corpus.gold.non_null())),
    ]
    rows += _config_echo(s)
    _write_report(out, rows, started)
    return 0


# --- parser ---------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, command: str) -> None:
    p.add_argument("--config", default="", help="flat key=value config file")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--strict", action="store_true", help="fail on validation problems")
    for name, (parse, default) in _OPTIONS[command].items():
        flag = "--" + name.replace("_", "-")
        if parse is _parse_bool:
            p.add_argument(flag, action="store_const", const=True, default=None,
                           help=f"(default {default})")
        else:
            p.add_argument(flag, type=parse, default=None, metavar="V",
                           help=f"(default {default})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="align document pairs from a manifest")
    p.add_argument("--manifest", required=True)
    _add_common(p, "align")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("preprocess", help="dedup/overlap/LID cleaning of a bitext")
    p.add_argument("--bitext", required=True)
    p.add_argument("--lid", default="", metavar="TSV", help="LID sidecar predictions")
    p.add_argument("--src-embeddings", default="")
    p.add_argument("--tgt-embeddings", default="")
    _add_common(p, "preprocess")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("score", help="margin-score a bitext")
    p.add_argument("--bitext", required=True)
    p.add_argument("--src-embeddings", required=True)
    p.add_argument("--tgt-embeddings", required=True)
    _add_common(p, "score")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("train", help="train the projection head on aligned embeddings")
    p.add_argument("--src-embeddings", required=True)
    p.add_argument("--tgt-embeddings", required=True)
    _add_common(p, "train")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("subsample", help="token-budget selection from a scored corpus")
    p.add_argument("--scored", required=True)
    _add_common(p, "subsample")
    p.set_defaults(func=cmd_subsample)

    p = sub.add_parser("heatmap", help="similarity matrix TSV for two documents")
    p.add_argument("--src-embeddings", required=True)
    p.add_argument("--tgt-embeddings", required=True)
    _add_common(p, "heatmap")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("eval", help="alignment F1 and/or ranking AUC")
    p.add_argument("--pred", default="")
    p.add_argument("--gold", default="")
    p.add_argument("--scores", default="")
    p.add_argument("--labels", default="")
    _add_common(p, "eval")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen-synthetic", help="synthetic corpus with planted gold")
    _add_common(p, "gen-synthetic")
    p.set_defaults(func=cmd_gen_synthetic)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as e:
        print(f"{PROG} {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
