import numpy as np
import pytest

from bitextmine import (
    Alignment,
    AlignParams,
    InfeasibleSpecError,
    Link,
    SyntheticSpec,
    align_full_dp,
    alignment_f1,
    gen_synthetic,
    gold_pair_set,
    ranking_auc,
)
from bitextmine.synthetic import labeled_pair_corpus


class TestSpecValidation:
    def test_gap_required(self):
        with pytest.raises(ValueError, match="exceed"):
            SyntheticSpec(n_pairs=5, dim=32, clean_cos_min=0.2, noise_cos_max=0.3)

    def test_rates_below_one(self):
        with pytest.raises(ValueError, match="below 1"):
            SyntheticSpec(n_pairs=5, dim=32, insert_rate=0.6, merge_rate=0.5)

    def test_negative_pairs(self):
        with pytest.raises(ValueError):
            SyntheticSpec(n_pairs=-1, dim=32)


class TestGenSynthetic:
    def test_pure_diagonal_gold(self):
        c = gen_synthetic(SyntheticSpec(n_pairs=6, dim=32, seed=1))
        assert [(l.src, l.tgt) for l in c.gold.links] == [((i,), (i,)) for i in range(6)]
        assert c.labels == [1] * 6
        assert len(c.src_sentences) == len(c.tgt_sentences) == 6

    def test_empty(self):
        c = gen_synthetic(SyntheticSpec(n_pairs=0, dim=8, seed=1))
        assert c.src_sentences == [] and c.tgt_sentences == []
        assert c.gold.links == []

    def test_deterministic(self):
        spec = SyntheticSpec(n_pairs=12, dim=64, insert_rate=0.2, merge_rate=0.1, seed=5)
        a, b = gen_synthetic(spec), gen_synthetic(spec)
        assert np.array_equal(a.src_embs.data, b.src_embs.data)
        assert np.array_equal(a.tgt_embs.data, b.tgt_embs.data)
        assert [(l.src, l.tgt) for l in a.gold.links] == [(l.src, l.tgt) for l in b.gold.links]

    def test_gold_is_valid_cover(self):
        c = gen_synthetic(SyntheticSpec(n_pairs=25, dim=128, insert_rate=0.2, merge_rate=0.2, seed=7))
        c.gold.validate(c.src_embs.count, c.tgt_embs.count)

    def _self_check(self, c, spec):
        src = c.src_embs.as_float64()
        tgt = c.tgt_embs.as_float64()
        noise_src = set()
        noise_tgt = set()
        for link, label in zip(c.gold.links, c.labels):
            if label == 1:
                block = src[list(link.src)].mean(axis=0)
                block = block / np.linalg.norm(block)
                pair_cos = float(block @ tgt[link.tgt[0]] / np.linalg.norm(tgt[link.tgt[0]]))
                assert pair_cos >= spec.clean_cos_min - 1e-6
            elif link.src:
                noise_src.update(link.src)
            else:
                noise_tgt.update(link.tgt)
        for i in noise_src:
            sims = np.abs(src[i] @ tgt.T)
            assert float(sims.max()) <= spec.noise_cos_max + 1e-6
            others = np.abs(src[i] @ np.delete(src, i, axis=0).T)
            assert float(others.max()) <= spec.noise_cos_max + 1e-6
        for j in noise_tgt:
            sims = np.abs(tgt[j] @ src.T)
            assert float(sims.max()) <= spec.noise_cos_max + 1e-6

    def test_embeddings_verify_their_own_spec_axis_mode(self):
        spec = SyntheticSpec(n_pairs=20, dim=128, insert_rate=0.3, merge_rate=0.1, seed=3)
        c = gen_synthetic(spec)
        assert c.src_embs.count * c.tgt_embs.count > 0
        self._self_check(c, spec)

    def test_embeddings_verify_their_own_spec_gaussian_mode(self):
        # dim below the axis budget forces the Gaussian construction, but must
        # stay large enough for the noise-rejection concentration bound
        spec = SyntheticSpec(n_pairs=400, dim=768, insert_rate=0.15, merge_rate=0.1, seed=3)
        assert spec.dim < 2 * spec.n_pairs
        c = gen_synthetic(spec)
        self._self_check(c, spec)

    def test_merge_target_is_normalized_mean(self):
        c = gen_synthetic(SyntheticSpec(n_pairs=30, dim=256, merge_rate=0.5, seed=9))
        merges = [l for l in c.gold.non_null() if len(l.src) == 2]
        assert merges
        src = c.src_embs.as_float64()
        tgt = c.tgt_embs.as_float64()
        for l in merges:
            mean = src[list(l.src)].mean(axis=0)
            mean /= np.linalg.norm(mean)
            np.testing.assert_allclose(mean, tgt[l.tgt[0]], atol=1e-6)

    def test_infeasible_dim_raises(self):
        with pytest.raises(InfeasibleSpecError, match="too small"):
            gen_synthetic(SyntheticSpec(n_pairs=100, dim=4, insert_rate=0.5, seed=1))

    def test_aligner_recovers_inserts_and_merges(self):
        spec = SyntheticSpec(n_pairs=25, dim=128, insert_rate=0.2, merge_rate=0.1, seed=13)
        c = gen_synthetic(spec)
        pred = align_full_dp(c.src_embs, c.tgt_embs, AlignParams(skip_penalty=0.3, seed=2))
        assert alignment_f1(pred, c.gold)[2] == 1.0


class TestLabeledPairs:
    def test_counts_and_labels(self):
        pairs, se, te, labels = labeled_pair_corpus(30, 20, dim=128, seed=4)
        assert len(pairs) == se.count == te.count == len(labels) == 50
        assert sum(labels) == 30

    def test_construction_cosines(self):
        pairs, se, te, labels = labeled_pair_corpus(25, 25, dim=128, seed=4)
        cos = np.einsum("ij,ij->i", se.as_float64(), te.as_float64())
        for c, lab in zip(cos, labels):
            if lab == 1:
                assert c >= 0.9 - 1e-6
            else:
                assert abs(c) <= 0.3 + 1e-6

    def test_deterministic(self):
        a = labeled_pair_corpus(10, 10, dim=64, seed=6)
        b = labeled_pair_corpus(10, 10, dim=64, seed=6)
        assert np.array_equal(a[1].data, b[1].data)
        assert a[3] == b[3]


class TestAlignmentF1:
    def _aln(self, links):
        return Alignment([Link(s, t, 0.0) for s, t in links])

    def test_identity(self):
        gold = self._aln([((0,), (0,)), ((1,), (1,))])
        assert alignment_f1(gold, gold) == (1.0, 1.0, 1.0)

    def test_no_non_null_prediction(self):
        pred = self._aln([((0,), ()), ((), (0,))])
        gold = self._aln([((0,), (0,))])
        assert alignment_f1(pred, gold) == (0.0, 0.0, 0.0)

    def test_half_match(self):
        gold = self._aln([((0,), (0,)), ((1,), (1,))])
        pred = self._aln([((0,), (0,)), ((1,), ())])
        p, r, f1 = alignment_f1(pred, gold)
        assert (p, r) == (1.0, 0.5)
        pred2 = self._aln([((0,), (0,)), ((1,), (1, 2))])
        p, r, f1 = alignment_f1(pred2, gold)
        assert (p, r, f1) == (0.5, 0.5, 0.5)

    def test_symmetric(self):
        a = self._aln([((0,), (0, 1)), ((1,), (2,))])
        b = self._aln([((0,), (0,)), ((1,), (1, 2))])
        assert alignment_f1(a, b)[2] == alignment_f1(b, a)[2]


class TestRankingAuc:
    def test_perfect_separation(self):
        assert ranking_auc([3.0, 2.0, 1.0, 0.0], [1, 1, 0, 0]) == 1.0

    def test_all_equal_half(self):
        assert ranking_auc([1.0, 1.0, 1.0], [1, 0, 1]) == 0.5

    def test_hand_enumeration(self):
        # clean {2, 1}, noise {1.5}: one favorable of two comparisons
        assert ranking_auc([2.0, 1.0, 1.5], [1, 1, 0]) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="both classes"):
            ranking_auc([1.0, 2.0], [1, 1])

    def test_monotone_transform_invariant(self):
        rng = np.random.default_rng(15)
        scores = list(rng.normal(size=60))
        labels = list((rng.random(60) > 0.5).astype(int))
        if not (0 < sum(labels) < 60):
            labels[0], labels[1] = 0, 1
        base = ranking_auc(scores, labels)
        assert ranking_auc([2 * s + 3 for s in scores], labels) == pytest.approx(base, abs=1e-12)
        assert ranking_auc(list(np.exp(scores)), labels) == pytest.approx(base, abs=1e-12)

    def test_matches_quadratic_oracle(self):
        rng = np.random.default_rng(16)
        for _ in range(20):
            n = int(rng.integers(2, 30))
            scores = list(np.round(rng.normal(size=n), 1))  # rounding forces ties
            labels = list((rng.random(n) > 0.4).astype(int))
            if not (0 < sum(labels) < n):
                continue
            wins = ties = 0
            pos = [s for s, l in zip(scores, labels) if l == 1]
            neg = [s for s, l in zip(scores, labels) if l == 0]
            for p in pos:
                for q in neg:
                    wins += p > q
                    ties += p == q
            oracle = (wins + 0.5 * ties) / (len(pos) * len(neg))
            assert ranking_auc(scores, labels) == pytest.approx(oracle, abs=1e-12)


class TestGoldPairSet:
    def test_block_texts_joined_by_space(self):
        c = gen_synthetic(SyntheticSpec(n_pairs=10, dim=64, merge_rate=0.5, seed=2))
        pairs = gold_pair_set(c)
        merges = [l for l in c.gold.non_null() if len(l.src) == 2]
        l = merges[0]
        expected = (" ".join(f"s{i}" for i in l.src), f"t{l.tgt[0]}")
        assert expected in pairs
