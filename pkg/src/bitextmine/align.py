"""Monotonic sentence alignment of a document pair by dynamic programming
over block-level embedding similarity.

Three entry points share one cost model:

- ``align_full_dp``      exact DP over every (i, j) cell, O(N*M) cells.
- ``align_coarse_to_fine`` recursive 2x downsampling, then the same DP ran
  inside a band around the upsampled coarse path; sub-quadratic in evaluated
  cells for long documents.
- ``brute_force_align``  exhaustive enumeration over all monotonic complete
  covers; the test oracle for small documents.

A link matches a contiguous source block (m sentences) to a contiguous target
block (n sentences), 0 <= m, n <= max_block, m + n >= 1. Substitution links
(m, n >= 1) cost ``(1 - cos) * (m + n) / (2 * baseline)``; null links cost
``skip_penalty`` per skipped sentence. The baseline is the mean of (1 - cos)
over seeded random cross-document sentence pairs, flooring at 1e-3 so
pathological near-identical documents cannot blow the division up.

The per-sentence normalization makes the cost of a merged block exactly the
sum of the links it absorbs whenever the cross terms vanish, so tie handling
decides block granularity. Ties are broken by preferring MORE links (the
finest-grained cover: a 1-1 reading of two sentences beats an evidence-free
2-2 merge), then the lexicographically smallest link sequence, where links
compare as (src_lo, src_hi, tgt_lo, tgt_hi) and an empty side sorts last.
Both DPs and the oracle apply the identical order, so results are
deterministic and comparable; in particular a lone sentence pair is linked
only when its cost is strictly below two skips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingMatrix, validate_block

_BASELINE_FLOOR = 1e-3
_EMPTY_LO = 1 << 60  # sentinel: an empty block side sorts after any real index

# Two covers made of the same link costs in a different order (skip-run
# rearrangements, say) sum to floats a few ulps apart; treat totals this close
# as equal so the link-count / lexicographic tie-breaks actually engage.
_COST_TIE_EPS = 1e-9


@dataclass
class AlignParams:
    """Knobs of the alignment cost model and the coarse-to-fine search."""

    max_block: int = 3
    skip_penalty: float = 1.0
    baseline_samples: int = 128
    band_width: int = 10
    full_dp_threshold: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.max_block < 1:
            raise ValueError("max_block must be >= 1")
        if self.band_width < 1:
            raise ValueError("band_width must be >= 1")
        if self.skip_penalty <= 0:
            raise ValueError("skip_penalty must be positive")
        if self.baseline_samples < 1:
            raise ValueError("baseline_samples must be >= 1")


@dataclass
class AlignCounters:
    """Mutable tally of DP work, for the sub-quadratic runtime checks."""

    cells: int = 0


@dataclass(frozen=True)
class Link:
    """One alignment unit: src block <-> tgt block; either side may be empty."""

    src: tuple[int, ...]
    tgt: tuple[int, ...]
    cost: float

    def key(self) -> tuple[int, int, int, int]:
        s = (self.src[0], self.src[-1]) if self.src else (_EMPTY_LO, _EMPTY_LO)
        t = (self.tgt[0], self.tgt[-1]) if self.tgt else (_EMPTY_LO, _EMPTY_LO)
        return s + t

    @property
    def is_null(self) -> bool:
        return not self.src or not self.tgt


@dataclass
class Alignment:
    """Monotonic complete cover of a document pair."""

    links: list[Link] = field(default_factory=list)

    @property
    def total_cost(self) -> float:
        return float(sum(l.cost for l in self.links))

    def non_null(self) -> list[Link]:
        return [l for l in self.links if not l.is_null]

    def transpose(self) -> "Alignment":
        return Alignment([Link(l.tgt, l.src, l.cost) for l in self.links])

    def validate(self, n_src: int, n_tgt: int) -> None:
        """Raise unless this is a monotonic, non-overlapping, complete cover."""
        next_s, next_t = 0, 0
        for l in self.links:
            if not l.src and not l.tgt:
                raise ValueError("link with both sides empty")
            if l.cost < 0:
                raise ValueError(f"negative link cost {l.cost}")
            if l.src:
                validate_block(l.src, n_src)
                if l.src[0] != next_s:
                    raise ValueError(f"source cover broken at {l.src}, expected {next_s}")
                next_s = l.src[-1] + 1
            if l.tgt:
                validate_block(l.tgt, n_tgt)
                if l.tgt[0] != next_t:
                    raise ValueError(f"target cover broken at {l.tgt}, expected {next_t}")
                next_t = l.tgt[-1] + 1
        if next_s != n_src or next_t != n_tgt:
            raise ValueError(
                f"cover incomplete: consumed {next_s}/{n_src} src, {next_t}/{n_tgt} tgt"
            )


def _require_normalized(m: EmbeddingMatrix, name: str) -> None:
    if not m.normalized:
        raise ValueError(f"{name} must be l2-normalized before alignment")


def _check_pair(src: EmbeddingMatrix, tgt: EmbeddingMatrix) -> None:
    _require_normalized(src, "src")
    _require_normalized(tgt, "tgt")
    if src.dim != tgt.dim:
        raise ValueError(f"dimension mismatch: src dim {src.dim}, tgt dim {tgt.dim}")


def substitution_cost(
    srcb: np.ndarray, tgtb: np.ndarray, baseline: float, nsrc: int, ntgt: int
) -> float:
    """Cost of linking a source block vector to a target block vector.

    A zero block vector is treated as cosine 0 (maximally uninformative), not
    an error, so empty-line embeddings flow through.
    """
    if baseline <= 0:
        raise ValueError("baseline must be positive")
    u = np.asarray(srcb, dtype=np.float64)
    v = np.asarray(tgtb, dtype=np.float64)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        cos = 0.0
    else:
        cos = float(np.clip(u @ v / (nu * nv), -1.0, 1.0))
    return max(0.0, (1.0 - cos) * (nsrc + ntgt) / (2.0 * baseline))


def _baseline_one_way(
    a: EmbeddingMatrix, b: EmbeddingMatrix, params: AlignParams
) -> float:
    rng = np.random.default_rng(params.seed)
    i = rng.integers(0, a.count, size=params.baseline_samples)
    j = rng.integers(0, b.count, size=params.baseline_samples)
    av = _unit_rows(a.data[i].astype(np.float64))
    bv = _unit_rows(b.data[j].astype(np.float64))
    sims = np.clip(np.einsum("ij,ij->i", av, bv), -1.0, 1.0)
    return float(np.mean(1.0 - sims))


def estimate_baseline(
    src: EmbeddingMatrix, tgt: EmbeddingMatrix, params: AlignParams
) -> float:
    """Mean (1 - cos) over seeded random cross-document pairs, floored at 1e-3.

    Averaged over both sampling directions so the estimate (and with it every
    link cost) is invariant under swapping the documents.
    """
    if src.count == 0 or tgt.count == 0:
        return 1.0
    mean = (_baseline_one_way(src, tgt, params) + _baseline_one_way(tgt, src, params)) / 2.0
    return max(mean, _BASELINE_FLOOR)


def similarity_matrix(src: EmbeddingMatrix, tgt: EmbeddingMatrix) -> np.ndarray:
    """Entry (i, j) = cosine of src row i and tgt row j (both normalized)."""
    _check_pair(src, tgt)
    sims = src.as_float64() @ tgt.as_float64().T
    return np.clip(sims, -1.0, 1.0)


def _unit_rows(v: np.ndarray) -> np.ndarray:
    """Rows rescaled to exactly unit norm in float64 (zero rows stay zero).

    The cost model is a cosine, so the float32-storage drift of "already
    normalized" rows (norm 1 +/- 1e-7) must not leak into block means and
    cost ties."""
    norms = np.linalg.norm(v, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    return v / safe[:, None]


def _block_table(v: np.ndarray, max_block: int) -> dict[int, np.ndarray]:
    """T[m][a] = unit-renormalized mean of unit rows a..a+m-1 (zero mean
    stays zero); T[1] is the unit rows themselves."""
    n, dim = v.shape
    unit = _unit_rows(v)
    table = {1: unit}
    if max_block > 1:
        prefix = np.vstack([np.zeros((1, dim)), np.cumsum(unit, axis=0)])
        for m in range(2, max_block + 1):
            if n - m + 1 <= 0:
                table[m] = np.zeros((0, dim))
                continue
            mean = (prefix[m:] - prefix[: n - m + 1]) / m
            norms = np.linalg.norm(mean, axis=1)
            safe = np.where(norms == 0.0, 1.0, norms)
            table[m] = mean / safe[:, None]
    return table


def _transition_order(max_block: int) -> list[tuple[int, int]]:
    """Transitions in canonical tie-break order (matches Link.key ordering)."""
    order = []
    for m in range(1, max_block + 1):
        order.extend((m, n) for n in range(1, max_block + 1))
        order.append((m, 0))
    order.extend((0, n) for n in range(1, max_block + 1))
    return order


def _link_cost(
    S: dict[int, np.ndarray],
    T: dict[int, np.ndarray],
    i: int,
    j: int,
    m: int,
    n: int,
    baseline: float,
    skip_penalty: float,
) -> float:
    if m == 0 or n == 0:
        return skip_penalty * (m + n)
    sim = float(np.clip(S[m][i] @ T[n][j], -1.0, 1.0))
    return max(0.0, (1.0 - sim) * (m + n) / (2.0 * baseline))


def _solve_dp(
    srcv: np.ndarray,
    tgtv: np.ndarray,
    params: AlignParams,
    baseline: float,
    lo: list[int],
    hi: list[int],
    counters: AlignCounters | None,
) -> Alignment:
    """Backward DP over states (i, j) = sentences consumed, within j-windows.

    Stores, per state, the suffix (cost, link count, move); cost ties prefer
    more links, and transitions are tried in canonical order so first-wins on
    full ties yields the lexicographically smallest link sequence.
    """
    N, M = srcv.shape[0], tgtv.shape[0]
    B = params.max_block
    skip = params.skip_penalty
    S = _block_table(srcv, B)
    T = _block_table(tgtv, B)
    trans = _transition_order(B)
    inf = math.inf

    cost_rows: list[list[float]] = [None] * (N + 1)  # type: ignore[list-item]
    nlink_rows: list[list[int]] = [None] * (N + 1)  # type: ignore[list-item]
    move_rows: list[list[tuple[int, int] | None]] = [None] * (N + 1)  # type: ignore[list-item]

    cells = 0
    for i in range(N, -1, -1):
        wlo, whi = lo[i], hi[i]
        width = whi - wlo + 1
        crow = [inf] * width
        lrow = [0] * width
        mrow: list[tuple[int, int] | None] = [None] * width

        # Vectorized substitution costs for links starting at src index i.
        subc: dict[tuple[int, int], list[float]] = {}
        for m in range(1, B + 1):
            if i + m > N:
                break
            svec = S[m][i]
            for n in range(1, B + 1):
                jmax = min(whi, M - n)
                if jmax < wlo:
                    continue
                sims = np.clip(T[n][wlo : jmax + 1] @ svec, -1.0, 1.0)
                costs = np.maximum(0.0, (1.0 - sims) * ((m + n) / (2.0 * baseline)))
                subc[(m, n)] = costs.tolist()

        for j in range(whi, wlo - 1, -1):
            cells += 1
            if i == N and j == M:
                crow[j - wlo] = 0.0
                continue
            best_c = inf
            best_l = -1
            best_mv: tuple[int, int] | None = None
            for m, n in trans:
                ni, nj = i + m, j + n
                if ni > N or nj > M:
                    continue
                if m == 0:
                    succ_c = crow[nj - wlo] if nj <= whi else inf
                    succ_l = lrow[nj - wlo] if nj <= whi else 0
                else:
                    nwlo, nwhi = lo[ni], hi[ni]
                    if nj < nwlo or nj > nwhi:
                        continue
                    succ_c = cost_rows[ni][nj - nwlo]
                    succ_l = nlink_rows[ni][nj - nwlo]
                if succ_c == inf:
                    continue
                if m > 0 and n > 0:
                    arr = subc.get((m, n))
                    if arr is None or j - wlo >= len(arr):
                        continue
                    c = arr[j - wlo]
                else:
                    c = skip * (m + n)
                tot = c + succ_c
                tl = succ_l + 1
                # Strictly cheaper wins; a tie prefers more links; a full tie
                # keeps the first candidate, which the canonical enumeration
                # order makes the lexicographically smallest.
                if tot < best_c - _COST_TIE_EPS or (
                    tot <= best_c + _COST_TIE_EPS and tl > best_l
                ):
                    best_c, best_l, best_mv = tot, tl, (m, n)
            crow[j - wlo] = best_c
            lrow[j - wlo] = best_l
            mrow[j - wlo] = best_mv

        cost_rows[i] = crow
        nlink_rows[i] = lrow
        move_rows[i] = mrow

    if counters is not None:
        counters.cells += cells
    if not (lo[0] <= 0 <= hi[0]) or cost_rows[0][0 - lo[0]] == math.inf:
        raise RuntimeError("alignment DP found no feasible path (band too narrow)")

    links: list[Link] = []
    i, j = 0, 0
    while not (i == N and j == M):
        mv = move_rows[i][j - lo[i]]
        assert mv is not None
        m, n = mv
        c = _link_cost(S, T, i, j, m, n, baseline, skip)
        links.append(Link(tuple(range(i, i + m)), tuple(range(j, j + n)), c))
        i, j = i + m, j + n
    return Alignment(links)


def align_full_dp(
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    params: AlignParams | None = None,
    counters: AlignCounters | None = None,
) -> Alignment:
    """Minimum-cost monotonic complete cover by exact DP over all cells."""
    params = params or AlignParams()
    _check_pair(src, tgt)
    baseline = estimate_baseline(src, tgt, params)
    lo = [0] * (src.count + 1)
    hi = [tgt.count] * (src.count + 1)
    return _solve_dp(
        src.as_float64(), tgt.as_float64(), params, baseline, lo, hi, counters
    )


def downsample_half(m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Average adjacent row pairs (renormalized); an odd trailing row passes through."""
    _require_normalized(m, "matrix")
    v = m.as_float64()
    n = v.shape[0]
    half = (v[0 : n - 1 : 2] + v[1:n:2]) / 2.0
    norms = np.linalg.norm(half, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    half = half / safe[:, None]
    if n % 2 == 1:
        half = np.vstack([half, v[-1:]])
    return EmbeddingMatrix(data=half, normalized=True)


def _state_path(alignment: Alignment) -> list[tuple[int, int]]:
    pts = [(0, 0)]
    i, j = 0, 0
    for l in alignment.links:
        i += len(l.src)
        j += len(l.tgt)
        pts.append((i, j))
    return pts


def _band_windows(
    pts: list[tuple[int, int]], n: int, m: int, band: int
) -> tuple[list[int], list[int]]:
    """Monotone j-windows around a coarse path upsampled to fine coordinates."""
    min_j = [m] * (n + 1)
    max_j = [0] * (n + 1)
    prev = (0, 0)
    for pt in pts:
        i0, i1 = prev[0], pt[0]
        j0, j1 = prev[1], pt[1]
        for i in range(i0, i1 + 1):
            if j0 < min_j[i]:
                min_j[i] = j0
            if j1 > max_j[i]:
                max_j[i] = j1
        prev = pt
    lo = [max(0, v - band) for v in min_j]
    hi = [min(m, v + band) for v in max_j]
    # Monotone envelope keeps the corridor connected.
    for i in range(1, n + 1):
        lo[i] = max(lo[i], lo[i - 1])
    for i in range(n - 1, -1, -1):
        hi[i] = min(hi[i], hi[i + 1])
    return lo, hi


def align_coarse_to_fine(
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    params: AlignParams | None = None,
    counters: AlignCounters | None = None,
) -> Alignment:
    """Full DP below the size threshold; otherwise recursive downsampling
    followed by the DP restricted to a band around the upsampled coarse path.
    """
    params = params or AlignParams()
    _check_pair(src, tgt)
    if min(src.count, tgt.count) <= params.full_dp_threshold:
        return align_full_dp(src, tgt, params, counters)

    coarse = align_coarse_to_fine(
        downsample_half(src), downsample_half(tgt), params, counters
    )
    n, m = src.count, tgt.count
    pts = [(min(2 * ci, n), min(2 * cj, m)) for ci, cj in _state_path(coarse)]
    band = max(params.band_width, params.max_block)
    lo, hi = _band_windows(pts, n, m, band)
    baseline = estimate_baseline(src, tgt, params)
    return _solve_dp(src.as_float64(), tgt.as_float64(), params, baseline, lo, hi, counters)


def brute_force_align(
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    params: AlignParams | None = None,
) -> Alignment:
    """Exhaustive-enumeration oracle over all monotonic complete covers.

    Minimizes total cost, breaking ties toward more links and then the
    lexicographically smallest key sequence (the same order as the DP).
    Branches whose partial cost already exceeds the best total are pruned,
    which is sound because link costs are non-negative. Limited to 8
    sentences a side.
    """
    params = params or AlignParams()
    _check_pair(src, tgt)
    if src.count > 8 or tgt.count > 8:
        raise ValueError("brute_force_align is limited to documents of <= 8 sentences")
    baseline = estimate_baseline(src, tgt, params)
    srcv, tgtv = src.as_float64(), tgt.as_float64()
    N, M = src.count, tgt.count
    B = params.max_block
    S = _block_table(srcv, B)
    T = _block_table(tgtv, B)
    trans = _transition_order(B)

    best: list = [math.inf, -1, None, None]  # cost, nlinks, keyseq, links

    def rec(i: int, j: int, acc: float, links: list[Link]) -> None:
        if acc > best[0] + _COST_TIE_EPS:
            return
        if i == N and j == M:
            nlinks = len(links)
            keyseq = tuple(l.key() for l in links)
            if acc < best[0] - _COST_TIE_EPS:
                best[0], best[1], best[2], best[3] = acc, nlinks, keyseq, list(links)
            elif acc <= best[0] + _COST_TIE_EPS and (
                nlinks > best[1] or (nlinks == best[1] and keyseq < best[2])
            ):
                best[0] = min(acc, best[0])
                best[1], best[2], best[3] = nlinks, keyseq, list(links)
            return
        for m, n in trans:
            if i + m > N or j + n > M:
                continue
            c = _link_cost(S, T, i, j, m, n, baseline, params.skip_penalty)
            links.append(Link(tuple(range(i, i + m)), tuple(range(j, j + n)), c))
            rec(i + m, j + n, acc + c, links)
            links.pop()

    rec(0, 0, 0.0, [])
    assert best[3] is not None
    return Alignment(best[3])
