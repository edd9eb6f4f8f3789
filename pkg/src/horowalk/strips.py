"""Bounded-geometry elements for a pair of ends, and strip growth.

Everything is exact on the tree of F_k.  An element g has
(K, R, v)-bounded geometry for the pair (alpha, beta) when

    d(g, gv) >= R,
    alpha lies in the boundary of the shadow S_{gv}(g, K),
    beta  lies in the boundary of the shadow S_{g}(gv, K).

With Busemann functions B_xi(z) = |z| - 2 lcp(z, xi) the two shadow
conditions read

    B_alpha(gv) - B_alpha(g) >= |v| - 2K,
    B_beta(g)  - B_beta(gv)  >= |v| - 2K.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .oracles import acylindricity_bound
from .spaces import InsufficientDepth, TreeEnd, end_lcp, translate_end, word_end_lcp
from .walks import (
    BACKWARD,
    FORWARD,
    BatchWalk,
    PrefixTracker,
    StepDistribution,
    map_trials,
    reflected,
)
from .words import GroupElement, ball, mul, reduce_letters, words_of_length

ENUMERATION_BUDGET = 2_000_000
TAIL_KEEP = 8


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class BGParams:
    K: Fraction
    R: Fraction
    v: GroupElement

    def __post_init__(self):
        object.__setattr__(self, "K", Fraction(self.K))
        object.__setattr__(self, "R", Fraction(self.R))
        if self.K <= 0 or self.R <= 0:
            raise ValueError("K and R must be positive")
        if len(self.v) < self.R:
            raise ValueError(f"|v| = {len(self.v)} is below R = {self.R}")


@dataclass(frozen=True)
class BoundaryPair:
    alpha: TreeEnd
    beta: TreeEnd

    def __post_init__(self):
        if end_lcp(self.alpha, self.beta) == math.inf:
            raise ValueError("a boundary pair needs two distinct ends")

    @property
    def branch(self) -> int:
        """Length of the common prefix of the two ends."""
        return int(end_lcp(self.alpha, self.beta))


def _busemann(xi: TreeEnd, z: tuple[int, ...]) -> int:
    return len(z) - 2 * word_end_lcp(z, xi)


def is_bounded_geometry(g: GroupElement, pair: BoundaryPair, params: BGParams) -> bool:
    z, zv = g.letters, mul(g, params.v).letters
    if len(params.v) < params.R:
        return False
    need = len(params.v) - 2 * params.K
    a, b = pair.alpha, pair.beta
    return (_busemann(a, zv) - _busemann(a, z) >= need
            and _busemann(b, z) - _busemann(b, zv) >= need)


def translate_pair(g: GroupElement, pair: BoundaryPair) -> BoundaryPair:
    return BoundaryPair(translate_end(g, pair.alpha), translate_end(g, pair.beta))


# ------------------------------------------------------------ enumeration


def enumerate_bg_brute(pair: BoundaryPair, params: BGParams, r: int, rank: int = 2,
                       budget: int = ENUMERATION_BUDGET) -> list[GroupElement]:
    """Every word of length <= r tested directly."""
    q = 2 * rank - 1
    size = 1 + 2 * rank * (q**r - 1) // (q - 1) if r > 0 else 1
    if size > budget:
        raise BudgetExceeded(f"ball of radius {r} has {size} words, budget {budget}")
    return [g for g in ball(rank, r) if is_bounded_geometry(g, pair, params)]


class _Ray:
    """Letters of an end, read lazily."""

    def __init__(self, end: TreeEnd):
        self.end = end

    def __getitem__(self, i: int) -> int:
        return self.end.letter(i)


def _lcp_from(s: Sequence[int], ray: _Ray, start: int) -> int:
    """lcp(s, xi[start:])."""
    i = 0
    while i < len(s) and s[i] == ray[start + i]:
        i += 1
    return i


class _Line:
    """Exact arithmetic for words E[:i] s written against the ends alpha, beta."""

    def __init__(self, pair: BoundaryPair):
        self.rays = (_Ray(pair.alpha), _Ray(pair.beta))
        self.c = pair.branch

    def lcps(self, side: int, i: int, s: Sequence[int]) -> tuple[int, int]:
        """(lcp with alpha, lcp with beta) of the reduced word E_side[:i] s."""
        out = [0, 0]
        for other in (0, 1):
            if other == side or i <= self.c:
                out[other] = i + _lcp_from(s, self.rays[other], i)
            else:
                out[other] = self.c
        return out[0], out[1]

    def times(self, side: int, i: int, s: tuple[int, ...], v: tuple[int, ...]):
        """The word (E[:i] s) v in the same form."""
        u = reduce_letters(s + v)
        ray = self.rays[side]
        t = 0
        while t < len(u) and t < i and ray[i - 1 - t] == -u[t]:
            t += 1
        return i - t, u[t:]

    def bg(self, side: int, i: int, s: tuple[int, ...], params: BGParams) -> bool:
        v = params.v.letters
        need = len(v) - 2 * params.K
        la, lb = self.lcps(side, i, s)
        j, u = self.times(side, i, s, v)
        la2, lb2 = self.lcps(side, j, u)
        n1, n2 = i + len(s), j + len(u)
        ba, ba2 = n1 - 2 * la, n2 - 2 * la2
        bb, bb2 = n1 - 2 * lb, n2 - 2 * lb2
        return ba2 - ba >= need and bb - bb2 >= need

    def word(self, side: int, i: int, s: tuple[int, ...]) -> GroupElement:
        ray = self.rays[side]
        return GroupElement(tuple(ray[t] for t in range(i)) + tuple(s))


def _tails(rank: int, K: int, banned: set[int], prev: Optional[int]):
    """Reduced words s with |s| <= K, s[0] not in banned, s[0] != -prev."""
    yield ()
    for n in range(1, K + 1):
        for w in words_of_length(rank, n):
            if w[0] in banned or (prev is not None and w[0] == -prev):
                continue
            yield w


@dataclass(frozen=True)
class StripCount:
    lengths: np.ndarray  # sorted word lengths of the bounded-geometry elements

    def count(self, r: int) -> int:
        return int(np.searchsorted(self.lengths, r, side="right"))


def enumerate_bg_near_line(pair: BoundaryPair, params: BGParams, r: int, rank: int = 2,
                           with_words: bool = False):
    """Bounded-geometry elements of length <= r, enumerated near the line.

    Needs |v| > 2K: then every such g lies within K of the bi-infinite
    geodesic from alpha to beta, so it is E[:i] s with E one of the two
    ends, i >= the branch point (or s climbing back from it) and |s| <= K.
    Returns sorted lengths, or (lengths, words) with ``with_words``.
    """
    if len(params.v) <= 2 * params.K:
        raise ValueError("the near-line enumeration needs |v| > 2K")
    K = int(math.floor(params.K))
    line = _Line(pair)
    c = line.c
    lengths, words = [], []

    def take(side, i, s):
        if i + len(s) <= r and line.bg(side, i, s, params):
            lengths.append(i + len(s))
            if with_words:
                words.append(line.word(side, i, s))

    a, b = line.rays
    for side in (0, 1):
        ray = line.rays[side]
        for i in range(c + 1, r + 1):
            banned = {ray[i]}
            for s in _tails(rank, K, banned, ray[i - 1]):
                take(side, i, s)
    # the branch vertex and words hanging off it, or reached by climbing back up
    banned = {a[c], b[c]}
    for s in _tails(rank, K, banned, a[c - 1] if c else None):
        take(0, c, s)
    for up in range(1, min(K, c) + 1):
        base = c - up
        for s in _tails(rank, K - up, {a[base]}, a[base - 1] if base else None):
            take(0, base, s)
    order = np.argsort(lengths, kind="stable")
    lens = np.array(lengths, dtype=np.int64)[order]
    if with_words:
        return lens, [words[k] for k in order]
    return lens


def enumerate_bg_in_ball(pair: BoundaryPair, params: BGParams, r: int, rank: int = 2,
                         budget: int = ENUMERATION_BUDGET) -> list[GroupElement]:
    """All bounded-geometry elements of length <= r, sorted by (length, word)."""
    if len(params.v) > 2 * params.K:
        _, words = enumerate_bg_near_line(pair, params, r, rank, with_words=True)
        return sorted(words, key=lambda g: (len(g), g.letters))
    return sorted(enumerate_bg_brute(pair, params, r, rank, budget), key=lambda g: (len(g), g.letters))


def growth_counts(pair: BoundaryPair, params: BGParams, r_max: int, rank: int = 2) -> list[int]:
    """count(r) = |B(x0, r) cap bg x0| for r = 0..r_max."""
    lens = enumerate_bg_near_line(pair, params, r_max, rank)
    sc = StripCount(lens)
    return [sc.count(r) for r in range(r_max + 1)]


def per_ball_multiplicity(pair: BoundaryPair, params: BGParams, x: GroupElement,
                          rank: int = 2) -> int:
    """Bounded-geometry orbit points within 4K of x."""
    rad = int(math.floor(4 * params.K))
    return sum(1 for g in ball(rank, rad, x) if is_bounded_geometry(g, pair, params))


def local_bound(params: BGParams) -> int:
    """N(22K) for the free action on the tree."""
    return acylindricity_bound(int(math.floor(22 * params.K)))


def cover_factor(params: BGParams, r: int) -> int:
    """Balls of radius 4K centred on the geodesic needed to cover the strip
    elements in B(x0, r): one per line vertex within r + 4K of x0."""
    return 2 * (r + int(math.ceil(4 * params.K))) + 1


def growth_bound(params: BGParams, r: int) -> int:
    return local_bound(params) * cover_factor(params, r)


# ------------------------------------------------------------ walk pairs


@dataclass(frozen=True)
class StripSeries:
    n: np.ndarray
    values: np.ndarray  # (1/n) log(1 + count(d(x0, w_n x0)))
    strip_times: int
    resolved: bool

    @property
    def density(self) -> float:
        return self.strip_times / len(self.n) if len(self.n) else 0.0

    def at(self, n: int) -> float:
        return float(self.values[np.searchsorted(self.n, n)])


def _resolve_chunk(first, m, mu, depth_extra, horizon, seed, stream, max_factor, floor):
    """Walk each trial far enough to pin its limit prefix beyond the furthest
    location up to ``horizon`` plus ``depth_extra`` letters (and at least
    ``floor[trial]`` letters)."""
    walk = BatchWalk(mu, seed, m, first=first, stream=stream, capacity=4 * horizon + 16)
    top = np.zeros(m, dtype=np.int64)

    def rec(w):
        np.maximum(top, w.level, out=top)

    walk.run(horizon, on_step=rec)
    depth = np.maximum(top + depth_extra, floor[first : first + m])
    tracker = PrefixTracker(walk, 0, 0)
    tracker.d = depth
    tracker.margin = 2 * depth
    tracker.armed = np.zeros(m, dtype=bool)
    xi = np.zeros((m, int(depth.max())), dtype=np.int8)
    frozen = np.zeros(m, dtype=bool)

    def freeze(w):
        new = tracker.armed & ~frozen
        for i in np.flatnonzero(new):
            xi[i, : depth[i]] = w.stack[i, : depth[i]]
        frozen[new] = True

    extra = 0
    budget = max_factor * max(horizon, int(depth.max()))
    while not frozen.all() and extra < budget:
        step = min(512, budget - extra)
        walk.run(step, on_letter=tracker, on_step=freeze)
        extra += step
    return xi, depth, frozen


def _forward_replay_chunk(first, m, mu, horizon, seed, alpha, alen, beta, blen):
    """Levels and lcps with both ends along the first ``horizon`` forward steps."""
    walk = BatchWalk(mu, seed, m, first=first, capacity=horizon + 16)
    wa = walk.watch(alpha, alen)
    wb = walk.watch(beta, blen)
    lv = np.zeros((horizon + 1, m), dtype=np.int64)
    la = np.zeros_like(lv)
    lb = np.zeros_like(lv)
    tails = []

    def rec(w):
        lv[w.time] = w.level
        la[w.time] = w.agree(wa)
        lb[w.time] = w.agree(wb)

    rec(walk)
    walk.run(horizon, on_step=lambda w: (rec(w), tails.append(_short_tails(w))))
    return lv, la, lb, tails


def _short_tails(w: BatchWalk, keep: int = TAIL_KEEP) -> np.ndarray:
    """The last ``keep`` letters of every walker's word (zero padded on the left)."""
    out = np.zeros((w.trials, keep), dtype=np.int8)
    for j in range(keep):
        pos = w.level - keep + j
        ok = pos >= 0
        out[ok, j] = w.stack[w.rows[ok], pos[ok]]
    return out


def _end_from_row(row: np.ndarray, depth: int) -> TreeEnd:
    return TreeEnd(tuple(int(x) for x in row[:depth]), None)


def strip_criterion_series(mu: StepDistribution, params: BGParams, n_max: int, trials: int,
                           seed: int = 0, max_factor: int = 20) -> list[Optional[StripSeries]]:
    """For each seeded bi-infinite walk: alpha = backward limit, beta = forward
    limit, and the series (1/n) log(1 + |bg(alpha, beta) cap B(1, d(x0, w_n x0))|)
    for n = 1..n_max, plus the number of times n with w_n in bg.

    Trials whose limits cannot be resolved give ``None``.
    """
    K = int(math.floor(params.K))
    if K >= TAIL_KEEP:
        raise ValueError(f"strip times are tracked for K < {TAIL_KEEP}")
    extra = K + len(params.v) + 2
    none = np.zeros(trials, dtype=np.int64)
    fwd = map_trials(_resolve_chunk, trials, (mu, extra, n_max, seed, FORWARD, max_factor, none))
    # the backward end is read as far out as the forward one
    need = np.concatenate([d for _, d, _ in fwd])
    bwd = map_trials(_resolve_chunk, trials,
                     (reflected(mu), extra, 0, seed, BACKWARD, max_factor, need))
    out: list[Optional[StripSeries]] = []
    rank = max(mu.rank, 2)
    t0 = 0
    for (xf, df, okf), (xb, db, okb) in zip(fwd, bwd):
        m = len(okf)
        # backward ends only need enough depth for lcp arithmetic near the origin
        alpha_rows, beta_rows = xb, xf
        replay = _forward_replay_chunk(t0, m, mu, n_max, seed, xb, db, xf, df)
        lv, la, lb, tails = replay
        for i in range(m):
            if not (okf[i] and okb[i]):
                out.append(None)
                continue
            alpha = _end_from_row(alpha_rows[i], int(db[i]))
            beta = _end_from_row(beta_rows[i], int(df[i]))
            try:
                pair = BoundaryPair(alpha, beta)
            except (ValueError, InsufficientDepth):
                out.append(None)
                continue
            r_max = int(lv[:, i].max())
            lens = enumerate_bg_near_line(pair, params, r_max, rank)
            ns = np.arange(1, n_max + 1)
            counts = np.searchsorted(lens, lv[1:, i], side="right")
            values = np.log1p(counts) / ns
            hits = _count_strip_times(pair, params, lv[:, i], la[:, i], lb[:, i],
                                      [t[i] for t in tails], K)
            out.append(StripSeries(ns, values, hits, True))
        t0 += m
    return out


def _count_strip_times(pair, params, lv, la, lb, tails, K) -> int:
    """Times 1..n with w_n in bg, decided from (|w_n|, lcp with each end, last letters)."""
    line = _Line(pair)
    c = line.c
    hits = 0
    for t in range(1, len(lv)):
        L, a, b = int(lv[t]), int(la[t]), int(lb[t])
        if a > c or b > c:
            side, i = (0, a) if a >= b else (1, b)
            s_len = L - i
            if s_len > K:
                continue
            s = tuple(int(x) for x in tails[t - 1][len(tails[t - 1]) - s_len:]) if s_len else ()
        else:
            i = min(a, b)
            s_len = L - i
            if (c - i) + s_len > K:
                continue
            side = 0
            s = tuple(int(x) for x in tails[t - 1][len(tails[t - 1]) - s_len:]) if s_len else ()
        if line.bg(side, i, s, params):
            hits += 1
    return hits
