"""Acceptance suite: each test enforces one release criterion end to end at
its stated tolerance and prints a PASS line with the measured numbers."""

import shutil
import subprocess
import time
from pathlib import Path

import numpy as np
import pytest

from bitextmine import (
    AlignCounters,
    AlignParams,
    EmbeddingMatrix,
    ProjectionModel,
    SyntheticSpec,
    TrainConfig,
    align_coarse_to_fine,
    align_full_dp,
    alignment_f1,
    brute_force_align,
    build_negative_sets,
    clean_corpus,
    count_tokens_en,
    deduplicate,
    detect_script,
    filter_lang,
    filter_overlap,
    forward_project,
    gen_synthetic,
    init_model,
    knn_cosine,
    l2_normalize,
    load_embeddings,
    loss_and_gradient,
    mnr_loss,
    overlap_ratio,
    ranking_auc,
    score_corpus,
    subsample,
    train_projection,
)
from bitextmine import corpusio as cio
from bitextmine.cli import main as cli_main
from bitextmine.synthetic import labeled_pair_corpus

from conftest import unit_matrix
from test_cleaning import oracle_lcs, random_corpus
from test_margin import naive_knn


def test_acceptance_1_dp_matches_oracle_on_200_random_documents():
    """align_full_dp total cost == brute_force_align within 1e-9, under 60s."""
    rng = np.random.default_rng(20_240_001)
    started = time.perf_counter()
    worst = 0.0
    for case in range(200):
        n, m = int(rng.integers(0, 9)), int(rng.integers(0, 9))
        params = AlignParams(
            max_block=int(rng.integers(1, 4)),
            skip_penalty=float(rng.uniform(0.2, 2.0)),
            baseline_samples=int(rng.integers(8, 64)),
            seed=int(rng.integers(0, 100_000)),
        )
        dim = int(rng.integers(4, 17))
        src, tgt = unit_matrix(rng, n, dim), unit_matrix(rng, m, dim)
        dp = align_full_dp(src, tgt, params)
        bf = brute_force_align(src, tgt, params)
        dp.validate(n, m)
        bf.validate(n, m)
        diff = abs(dp.total_cost - bf.total_cost)
        worst = max(worst, diff)
        assert diff <= 1e-9, f"case {case}: DP {dp.total_cost} vs oracle {bf.total_cost}"
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    print(f"ACCEPTANCE 1 PASS: 200 DP-vs-oracle cases, worst cost diff {worst:.2e}, {elapsed:.1f}s")


def test_acceptance_2_alignment_recovery_and_subquadratic_search():
    """Strict F1 >= 0.95 on the 500-pair insert/merge corpus; the 2000-pair
    variant evaluates fewer than 0.2 * N * M DP cells."""
    spec = SyntheticSpec(
        n_pairs=500, dim=2048, clean_cos_min=0.9, noise_cos_max=0.3,
        insert_rate=0.1, merge_rate=0.05, seed=11,
    )
    corpus = gen_synthetic(spec)
    # skip_penalty 0.3: under this cost model a skip must undercut absorbing
    # a noise sentence into a neighbour block (~0.45); see the README.
    params = AlignParams(skip_penalty=0.3, seed=5)
    pred = align_coarse_to_fine(corpus.src_embs, corpus.tgt_embs, params)
    pred.validate(corpus.src_embs.count, corpus.tgt_embs.count)
    precision, recall, f1 = alignment_f1(pred, corpus.gold)
    assert f1 >= 0.95, f"strict F1 {f1:.4f} < 0.95"

    big = gen_synthetic(
        SyntheticSpec(n_pairs=2000, dim=1024, insert_rate=0.1, merge_rate=0.05, seed=11)
    )
    counters = AlignCounters()
    pred_big = align_coarse_to_fine(big.src_embs, big.tgt_embs, params, counters)
    pred_big.validate(big.src_embs.count, big.tgt_embs.count)
    nm = big.src_embs.count * big.tgt_embs.count
    assert counters.cells < 0.2 * nm, f"{counters.cells} cells >= 0.2 * {nm}"
    print(
        f"ACCEPTANCE 2 PASS: strict F1 {f1:.4f} (P {precision:.4f} R {recall:.4f}); "
        f"2000-pair search evaluated {counters.cells} cells = {counters.cells / nm:.4f} * N*M"
    )


def test_acceptance_3_margin_filter_separation_and_hubness():
    """Margin AUC >= 0.99 on 1000 clean + 1000 noise pairs; with an injected
    hub the margin AUC is no worse than raw cosine AUC."""
    pairs, src, tgt, labels = labeled_pair_corpus(1000, 1000, dim=1024, seed=17)
    scored = score_corpus(pairs, src, tgt, k=4)
    auc = ranking_auc([s for _, _, s in scored], labels)
    assert auc >= 0.99, f"margin AUC {auc:.5f} < 0.99"

    # Hub variant: every source shares a component with one injected target
    # vector (cosine 0.7 >= 0.6 to all sources).
    rng = np.random.default_rng(18)
    n, dim = 400, 4096
    hub = np.zeros(dim)
    hub[0] = 1.0
    src_rows, tgt_rows, hub_labels = [], [], []
    axis = 1
    for i in range(n):
        e = np.zeros(dim)
        e[axis] = 1.0
        axis += 1
        x = 0.7 * hub + np.sqrt(1 - 0.49) * e
        clean = i % 2 == 0
        if clean:
            w = np.zeros(dim)
            w[axis] = 1.0
            axis += 1
            rho = rng.uniform(0.9, 0.98)
            y = rho * x + np.sqrt(1 - rho * rho) * w
        else:
            y = np.zeros(dim)
            y[axis] = 1.0
            axis += 1
        src_rows.append(x)
        tgt_rows.append(y / np.linalg.norm(y))
        hub_labels.append(int(clean))
    src_m = EmbeddingMatrix(np.array(src_rows), normalized=True)
    tgt_with_hub = EmbeddingMatrix(np.array(tgt_rows + [hub]), normalized=True)
    assert float(np.min(src_m.as_float64() @ hub)) >= 0.6

    sims = src_m.as_float64() @ tgt_with_hub.as_float64().T
    raw = [float(sims[i, i]) for i in range(n)]
    nn_x = knn_cosine(src_m, tgt_with_hub, 4)
    nn_y = knn_cosine(
        EmbeddingMatrix(tgt_with_hub.data[:n], normalized=True), src_m, 4
    )
    denom = (nn_x.cosines.sum(axis=1) + nn_y.cosines.sum(axis=1)) / 8.0
    margin = [r / d for r, d in zip(raw, denom)]
    margin_auc = ranking_auc(margin, hub_labels)
    raw_auc = ranking_auc(raw, hub_labels)
    assert margin_auc >= raw_auc, f"margin {margin_auc:.5f} < raw {raw_auc:.5f} under hub"
    print(
        f"ACCEPTANCE 3 PASS: margin AUC {auc:.5f}; hub margin AUC {margin_auc:.5f} "
        f">= raw AUC {raw_auc:.5f}"
    )


def test_acceptance_4_blocked_knn_equals_naive():
    """Blocked kNN: identical indices, cosines within 1e-7, on 50 instances."""
    rng = np.random.default_rng(40)
    worst = 0.0
    for _ in range(50):
        nq, nd = int(rng.integers(1, 60)), int(rng.integers(1, 80))
        dim = int(rng.integers(2, 12))
        k = int(rng.integers(1, 9))
        q, db = unit_matrix(rng, nq, dim), unit_matrix(rng, nd, dim)
        blocked = knn_cosine(q, db, k, block_size=int(rng.integers(1, 16)))
        idx, cos = naive_knn(q, db, k)
        np.testing.assert_array_equal(blocked.indices, idx)
        worst = max(worst, float(np.max(np.abs(blocked.cosines - cos))))
        assert worst <= 1e-7
    print(f"ACCEPTANCE 4 PASS: 50 blocked-vs-naive kNN instances, worst cosine diff {worst:.2e}")


def test_acceptance_5_gradients_match_finite_differences():
    """Analytic gradient vs central differences: max relative error < 1e-4
    over 20 random instances, plus the scalar loss spot check."""
    assert abs(mnr_loss([0.9], [[0.1, -0.2]]) - (-0.2457)) <= 1e-4

    rng = np.random.default_rng(50)
    worst = 0.0
    for _ in range(20):
        n, in_dim, out_dim = 6, 5, 4
        src, tgt = unit_matrix(rng, n, in_dim), unit_matrix(rng, n, in_dim)
        model = init_model(
            in_dim, out_dim,
            seed=int(rng.integers(1 << 31)),
            scale=float(rng.uniform(0.5, 2.0)),
            include_positive=bool(rng.integers(2)),
        )
        cfg = TrainConfig(
            window=int(rng.integers(0, 3)) or 1,
            random_negatives=2,
            batch_size=4,
            seed=int(rng.integers(1 << 31)),
        )
        batch = build_negative_sets(n, cfg)[0]
        _, grad = loss_and_gradient(batch, src, tgt, model)
        eps = 1e-4
        fd = np.zeros_like(model.weight)
        for pos in np.ndindex(model.weight.shape):
            wp, wm = model.weight.copy(), model.weight.copy()
            wp[pos] += eps
            wm[pos] -= eps
            lp, _ = loss_and_gradient(
                batch, src, tgt, ProjectionModel(wp, model.scale, model.include_positive)
            )
            lm, _ = loss_and_gradient(
                batch, src, tgt, ProjectionModel(wm, model.scale, model.include_positive)
            )
            fd[pos] = (lp - lm) / (2 * eps)
        rel = np.max(np.abs(grad - fd)) / max(1e-8, np.max(np.abs(fd)))
        worst = max(worst, rel)
        assert rel < 1e-4
    print(f"ACCEPTANCE 5 PASS: 20 gradient checks, worst relative error {worst:.2e}")


def test_acceptance_6_trainer_converges_deterministically():
    """Separable corpus, window=2, 2 random negatives, batch 32: held-out
    precision@1 of 100%, epoch-5 loss below epoch-1, bit-identical reruns."""
    n, dim, n_train = 200, 512, 160
    _, src, tgt, _ = labeled_pair_corpus(n, 0, dim=dim, clean_cos_min=0.9, seed=1)
    src_train = EmbeddingMatrix(src.data[:n_train], normalized=True)
    tgt_train = EmbeddingMatrix(tgt.data[:n_train], normalized=True)
    cfg = TrainConfig(window=2, random_negatives=2, batch_size=32, lr=0.5, epochs=5, seed=7)
    pairs = [("", "")] * n_train

    model, trace = train_projection(pairs, src_train, tgt_train, cfg, init_model(dim, 64, seed=7))
    assert trace[4] < trace[0], f"epoch-5 loss {trace[4]} !< epoch-1 loss {trace[0]}"

    proj_src = forward_project(src, model).as_float64()
    proj_tgt = forward_project(tgt, model).as_float64()
    held_out = np.arange(n_train, n)
    hits = (proj_src[held_out] @ proj_tgt.T).argmax(axis=1) == held_out
    p_at_1 = float(np.mean(hits))
    assert p_at_1 == 1.0, f"held-out precision@1 {p_at_1:.3f} != 1.0"

    rerun, trace2 = train_projection(pairs, src_train, tgt_train, cfg, init_model(dim, 64, seed=7))
    assert np.array_equal(model.weight, rerun.weight)
    assert trace == trace2
    print(
        f"ACCEPTANCE 6 PASS: held-out p@1 {p_at_1:.2f}, loss {trace[0]:.4f} -> {trace[4]:.4f}, "
        f"rerun bit-identical"
    )


def test_acceptance_7_preprocess_unit_suite():
    """Spec examples, idempotence on 100 random corpora, LCS oracle on 200
    random short-string pairs."""
    assert deduplicate([("a", "b"), ("a", "b")]) == [("a", "b")]
    assert deduplicate([("a  b", "x"), ("a b", "x")]) == [("a  b", "x")]
    assert abs(overlap_ratio("hello world", "hello there") - 7 / 11) < 1e-12
    assert overlap_ratio("abc", "abc") == 1.0
    assert overlap_ratio("abcd", "wxyz") == 0.0
    assert filter_overlap([("same", "same")]) == []
    assert filter_overlap([("abcdefghij", "abcdefghi")], threshold=0.9)  # exactly 0.9 kept
    assert detect_script("hello") == "en"
    assert detect_script("សួស្តី") == "km"
    assert detect_script("1234 !!") == "unk"
    assert filter_lang([("hello world", "x")]) == [("hello world", "x")]
    assert filter_lang([("សួស្តី", "x")]) == []

    rng = np.random.default_rng(70)
    for _ in range(100):
        corpus = random_corpus(rng, int(rng.integers(0, 12)))
        for f in (deduplicate, filter_overlap, filter_lang):
            once = f(corpus)
            assert f(once) == once
        cleaned, _, _ = clean_corpus(corpus)
        it = iter(corpus)
        assert all(p in it for p in cleaned)

    from bitextmine.cleaning import lcs_length

    alphabet = list("abcd")
    for _ in range(200):
        a = "".join(rng.choice(alphabet, size=rng.integers(0, 10)))
        b = "".join(rng.choice(alphabet, size=rng.integers(0, 10)))
        assert lcs_length(a, b) == oracle_lcs(a, b)
    print("ACCEPTANCE 7 PASS: preprocess examples, 100 idempotence corpora, 200 LCS oracle pairs")


def test_acceptance_8_subsampler_properties():
    """Budget never exceeded, prefix property, million-scale budget values
    accepted, and the hand-worked greedy example."""
    corpus = [("w w w", "a", 0.9), ("w w", "b", 0.8), ("w w", "c", 0.7)]
    assert subsample(corpus, 5) == [("w w w", "a"), ("w w", "b")]

    rng = np.random.default_rng(80)
    for _ in range(200):
        n = int(rng.integers(0, 40))
        scored = [
            (" ".join(["w"] * int(rng.integers(0, 10))), f"t{i}", float(rng.normal()))
            for i in range(n)
        ]
        budget = int(rng.integers(0, 60))
        out = subsample(scored, budget)
        used = sum(count_tokens_en(s) for s, _ in out)
        assert used <= budget
        order = sorted(range(n), key=lambda i: (-scored[i][2], i))
        ranked = [(scored[i][0], scored[i][1]) for i in order]
        assert set(out) == set(ranked[: len(out)])
        if len(out) < n:
            assert used + count_tokens_en(ranked[len(out)][0]) > budget

    for budget in (2_000_000, 3_000_000, 5_000_000, 7_000_000):
        assert subsample(corpus, budget) == [(s, t) for s, t, _ in corpus]
    print("ACCEPTANCE 8 PASS: greedy example, 200 property cases, budgets {2,3,5,7}M accepted")


def test_acceptance_9_end_to_end_pipeline_improves_clean_fraction(tmp_path):
    """gen-synthetic -> align -> preprocess -> score -> subsample at a 50%
    token budget: the output's clean-pair fraction strictly exceeds the
    aligned corpus's, in under 5 minutes."""
    started = time.perf_counter()
    gen, aligned, cleaned, scored_dir, sel = (
        tmp_path / "gen", tmp_path / "aligned", tmp_path / "cleaned",
        tmp_path / "scored", tmp_path / "sel",
    )
    assert cli_main([
        "gen-synthetic", "--pairs", "400", "--dim", "512", "--insert-rate", "0.15",
        "--merge-rate", "0.05", "--seed", "11", "--out", str(gen),
    ]) == 0
    assert cli_main([
        "align", "--manifest", str(gen / "manifest.tsv"), "--seed", "5", "--out", str(aligned),
    ]) == 0
    assert cli_main([
        "preprocess", "--bitext", str(aligned / "bitext.tsv"),
        "--src-embeddings", str(aligned / "pairs.src.btx"),
        "--tgt-embeddings", str(aligned / "pairs.tgt.btx"),
        "--out", str(cleaned),
    ]) == 0
    assert cli_main([
        "score", "--bitext", str(cleaned / "cleaned.tsv"),
        "--src-embeddings", str(cleaned / "pairs.src.btx"),
        "--tgt-embeddings", str(cleaned / "pairs.tgt.btx"),
        "--out", str(scored_dir),
    ]) == 0
    scored = cio.read_scored(scored_dir / "scored.tsv")
    budget = sum(count_tokens_en(s) for s, _, _ in scored) // 2
    assert cli_main([
        "subsample", "--scored", str(scored_dir / "scored.tsv"),
        "--budget", str(budget), "--out", str(sel),
    ]) == 0

    gold = cio.read_alignments(gen / "gold.aln")[0][1]
    src_sents = cio.read_sentences(gen / "src.txt")
    tgt_sents = cio.read_sentences(gen / "tgt.txt")
    gold_set = {
        (" ".join(src_sents[i] for i in l.src), " ".join(tgt_sents[j] for j in l.tgt))
        for l in gold.non_null()
    }

    def clean_fraction(pairs):
        return sum(1 for p in pairs if p in gold_set) / len(pairs)

    mined = cio.read_bitext(aligned / "bitext.tsv")
    selected = list(zip(
        cio.read_sentences(sel / "selected.src.txt"),
        cio.read_sentences(sel / "selected.tgt.txt"),
    ))
    assert mined and selected
    before, after = clean_fraction(mined), clean_fraction(selected)
    elapsed = time.perf_counter() - started
    assert after > before, f"clean fraction {after:.4f} !> {before:.4f}"
    assert elapsed < 300.0
    print(
        f"ACCEPTANCE 9 PASS: clean fraction {before:.4f} -> {after:.4f} "
        f"({len(mined)} -> {len(selected)} pairs), {elapsed:.1f}s end to end"
    )


_EMBED_EXPORT = Path(__file__).resolve().parent.parent / "frontend" / "dist" / "cli.js"


@pytest.mark.skipif(
    shutil.which("node") is None or not _EMBED_EXPORT.is_file(),
    reason="embed-export frontend not built (cd frontend && npm run build)",
)
def test_acceptance_10_embed_export_round_trip(tmp_path):
    """Files exported by the embed-export frontend load here with matching
    counts; random mode is byte-identical across reruns and batch sizes."""
    sentences = tmp_path / "sentences.txt"
    sentences.write_text("hello world\n\nthird line\nfourth\n", encoding="utf-8")

    def export(out, batch_size):
        subprocess.run(
            [
                "node", str(_EMBED_EXPORT),
                "--in", str(sentences), "--out", str(out),
                "--mode", "random", "--dim", "16", "--seed", "9",
                "--batch-size", str(batch_size),
            ],
            check=True,
            capture_output=True,
        )

    out1, out2, out3 = tmp_path / "a.btx", tmp_path / "b.btx", tmp_path / "c.btx"
    export(out1, 64)
    export(out2, 64)
    export(out3, 1)
    matrix = load_embeddings(out1)
    assert matrix.count == 4  # the empty line is a row, not skipped
    assert matrix.dim == 16
    assert out1.read_bytes() == out2.read_bytes()
    assert out1.read_bytes() == out3.read_bytes()
    print("ACCEPTANCE 10 PASS: embed-export round trip, rerun and batch-size invariant")
