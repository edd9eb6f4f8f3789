"""Monte Carlo estimators for drift, shadows, tracking and translation length.

Each estimator takes a step distribution, a trial count and a master
seed; per-trial randomness follows the block scheme of ``walks``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.stats import binomtest

from .coarse import Shadow
from .spaces import TreePoint
from .walks import (
    BACKWARD,
    FORWARD,
    BatchWalk,
    PrefixTracker,
    SamplePath,
    StepDistribution,
    boundary_prefixes,
    check_nonelementary,
    limit_point,
    map_trials,
    reflected,
)
from .words import GroupElement, alphabet, common_prefix, cyclic_reduce, inv, mul

TREE_C0 = 1


class PreconditionError(ValueError):
    """The step distribution does not satisfy an estimator's hypothesis."""


class Unresolved(RuntimeError):
    """A limit point could not be resolved at the depth an estimator needs."""


def require_nonelementary(mu: StepDistribution, search_len: int = 3) -> None:
    if not check_nonelementary(mu, search_len):
        raise PreconditionError("step distribution looks elementary "
                                f"(no independent hyperbolic pair up to length {search_len})")


@dataclass(frozen=True)
class Proportion:
    count: int
    trials: int
    lo: float
    hi: float

    @property
    def p(self) -> float:
        return self.count / self.trials if self.trials else 0.0

    @classmethod
    def wilson(cls, count: int, trials: int, level: float = 0.95) -> "Proportion":
        ci = binomtest(int(count), int(trials)).proportion_ci(level, method="wilson")
        return cls(int(count), int(trials), float(ci.low), float(ci.high))


# ------------------------------------------------------------ distances


def _distance_chunk(first, m, mu, times, seed):
    times = sorted(times)
    walk = BatchWalk(mu, seed, m, first=first, capacity=times[-1] * mu.max_step + 2)
    out = np.zeros((len(times), m), dtype=np.int64)
    t = 0
    for i, target in enumerate(times):
        walk.run(target - t)
        t = target
        out[i] = walk.distance()
    return out


def distances_at(mu: StepDistribution, times: Sequence[int], trials: int, seed: int) -> np.ndarray:
    """d(x0, w_t x0) for each requested time (rows) and trial (columns)."""
    times = sorted(set(int(t) for t in times))
    parts = map_trials(_distance_chunk, trials, (mu, times, seed))
    return np.concatenate(parts, axis=1)


@dataclass(frozen=True)
class DriftEstimate:
    L_hat: float
    stderr: float
    n: int
    trials: int


def estimate_drift(mu: StepDistribution, n: int, trials: int, seed: int = 0,
                   check: bool = True) -> DriftEstimate:
    """Mean of d(x0, w_n x0)/n over seeded trials.

    ``check=False`` skips the non-elementary precondition (useful for
    deterministic walks, whose drift is still well defined).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if check:
        require_nonelementary(mu)
    d = distances_at(mu, [n], trials, seed)[0] / n
    se = float(d.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    return DriftEstimate(float(d.mean()), se, n, trials)


def drift_tail(mu: StepDistribution, n: int, L: float, trials: int, seed: int = 0) -> Proportion:
    """Empirical P(d(x0, w_n x0) <= L n) with a Wilson interval."""
    if L <= 0:
        raise ValueError("L must be positive")
    return drift_tails(mu, [n], L, trials, seed)[n]


def drift_tails(mu: StepDistribution, ns: Sequence[int], L: float, trials: int,
                seed: int = 0) -> dict[int, Proportion]:
    ns = sorted(set(ns))
    d = distances_at(mu, ns, trials, seed)
    return {n: Proportion.wilson(int((row <= L * n).sum()), trials) for n, row in zip(ns, d)}


# ------------------------------------------------------------ persistence


def _d(g: GroupElement, h: GroupElement) -> int:
    return len(mul(inv(g), h)) + (g.bit ^ h.bit)


def _in_shadow(base: GroupElement, center: GroupElement, R: Fraction, y: GroupElement) -> bool:
    # (center . y)_base >= d(base, center) - R, doubled to stay in integers
    return _d(base, y) - _d(center, y) >= _d(base, center) - 2 * R


@dataclass(frozen=True)
class PersistenceStats:
    k: int
    R: Fraction
    C: Fraction
    C0: Fraction
    Z: tuple[int, ...]
    segments: int
    bound_ok: tuple[bool, ...]
    flags: tuple[tuple[bool, ...], ...] = field(default=(), compare=False)

    @property
    def density(self) -> float:
        total = self.segments * len(self.Z)
        return sum(self.Z) / total if total else 0.0

    def interval(self, level: float = 0.99) -> Proportion:
        return Proportion.wilson(sum(self.Z), self.segments * len(self.Z), level)

    @property
    def stderr(self) -> float:
        if len(self.Z) < 2 or not self.segments:
            return float("nan")
        z = np.array(self.Z) / self.segments
        return float(z.std(ddof=1) / math.sqrt(len(z)))


def _distance_matrix(xs: Sequence[GroupElement]) -> np.ndarray:
    """Pairwise tree distances via common-prefix lengths."""
    lens = np.array([len(x) for x in xs])
    M = np.zeros((len(xs), int(lens.max(initial=0)) + 1), dtype=np.int8)
    for i, x in enumerate(xs):
        M[i, : len(x)] = x.letters
    D = np.empty((len(xs), len(xs)), dtype=np.int64)
    for i in range(len(xs)):
        lcp = np.cumprod(M == M[i], axis=1).sum(axis=1)
        lcp = np.minimum(lcp, np.minimum(lens, lens[i]))
        D[i] = lens + lens[i] - 2 * lcp
    return D


def persistent_flags(path: SamplePath, k: int, R, C=0, C0=TREE_C0) -> list[bool]:
    """Which subsegments [x_i, x_{i+1}] of the k-step path are persistent.

    All three conditions are evaluated exactly over the available window
    x_0 .. x_m, m = n // k.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    R, C, C0 = Fraction(R), Fraction(C), Fraction(C0)
    m = path.n // k
    if m < 1:
        raise ValueError(f"path of length {path.n} has no {k}-step segment")
    x = [path.locations[k * i] for i in range(m + 1)]
    if any(g.bit for g in x):
        D = np.array([[_d(g, h) for h in x] for g in x])
    else:
        D = _distance_matrix(x)
    flags = []
    for i in range(m):
        a, b = i, i + 1
        slack = float(D[a, b] - 2 * R)  # half-integers, exact in floating point
        ok = D[a, b] >= 2 * R + 2 * C + C0
        # past in S_b(a, R), future in S_a(b, R); (center . y)_base doubled
        ok = ok and bool(np.all(D[b, : a + 1] - D[a, : a + 1] >= slack))
        ok = ok and bool(np.all(D[a, b:] - D[b, b:] >= slack))
        flags.append(bool(ok))
    return flags


def persistent_segments(path: SamplePath, k: int, R, C=0, C0=TREE_C0) -> PersistenceStats:
    flags = persistent_flags(path, k, R, C, C0)
    m = len(flags)
    Z = sum(flags)
    end = path.locations[k * m]
    ok = len(end) + end.bit >= Fraction(C0) / 2 * Z
    return PersistenceStats(k, Fraction(R), Fraction(C), Fraction(C0), (Z,), m, (ok,), (tuple(flags),))


def persistence_experiment(mu: StepDistribution, n: int, k: int, R, trials: int, seed: int = 0,
                           C=0, C0=TREE_C0) -> PersistenceStats:
    from .walks import trial_path

    Z, ok, flags = [], [], []
    segs = n // k
    for t in range(trials):
        st = persistent_segments(trial_path(mu, n, seed, t), k, R, C, C0)
        Z.extend(st.Z)
        ok.extend(st.bound_ok)
        flags.extend(st.flags)
    return PersistenceStats(k, Fraction(R), Fraction(C), Fraction(C0), tuple(Z), segs,
                            tuple(ok), tuple(flags))


@dataclass(frozen=True)
class PersistenceChoice:
    R: int
    k: int
    hitting: dict
    chi_tail: dict


def choose_persistence_params(mu: StepDistribution, eps: float = 0.1, C=0, C0=TREE_C0,
                              trials: int = 4000, seed: int = 0, horizon: int = 200,
                              max_R: int = 12, max_k: int = 200) -> PersistenceChoice:
    """Pick R so that shadows with distance parameter R are hit with
    probability at most eps (both directions), then the least k with
    P(chi_1^k <= 2R + 2C + C0) < eps."""
    hitting = {}
    chosen_R = None
    for R in range(1, max_R + 1):
        worst = 0.0
        for first in alphabet(mu.rank):
            center = GroupElement((first,) * (R + 1))
            S = Shadow(TreePoint(GroupElement()), TreePoint(center), Fraction(1))
            for direction in ("forward", "backward"):
                worst = max(worst, hitting_prob(mu, S, horizon, trials, seed, direction).p)
        hitting[R] = worst
        if worst <= eps:
            chosen_R = R
            break
    if chosen_R is None:
        raise PreconditionError(f"no R <= {max_R} brings shadow hitting below {eps}")
    threshold = 2 * chosen_R + 2 * Fraction(C) + Fraction(C0)
    chi = {}
    for k in range(1, max_k + 1):
        d = distances_at(mu, [k], trials, seed + 1)[0]
        chi[k] = float((d <= threshold).mean())
        if chi[k] < eps:
            return PersistenceChoice(chosen_R, k, hitting, chi)
    raise PreconditionError(f"no k <= {max_k} makes short segments rarer than {eps}")


# ------------------------------------------------------------ hitting shadows


def _word_array(g: GroupElement) -> np.ndarray:
    return np.array(g.letters if g.letters else (0,), dtype=np.int8)


def _hit_chunk(first, m, mu, base, center, R2, horizon, seed, stream):
    walk = BatchWalk(mu, seed, m, first=first, stream=stream, capacity=horizon * mu.max_step + 2)
    wb = walk.watch(_word_array(base), len(base))
    wc = walk.watch(_word_array(center), len(center))
    d_bc = len(mul(inv(base), center))
    first_hit = np.full(m, -1, dtype=np.int64)

    def check(w):
        db = len(base) + w.level - 2 * w.agree(wb)
        dc = len(center) + w.level - 2 * w.agree(wc)
        inside = db - dc >= d_bc - R2
        new = inside & (first_hit < 0)
        first_hit[new] = w.time

    check(walk)
    walk.run(horizon, on_step=check)
    return first_hit


@dataclass(frozen=True)
class HitEstimate:
    first_hit: np.ndarray = field(repr=False, compare=False)
    horizon: int = 0

    def by(self, t: int) -> Proportion:
        hits = int(((self.first_hit >= 0) & (self.first_hit <= t)).sum())
        return Proportion.wilson(hits, len(self.first_hit))

    @property
    def p(self) -> float:
        return float((self.first_hit >= 0).mean())

    def curve(self, times: Sequence[int]) -> list[float]:
        return [self.by(t).p for t in times]


def hitting_prob(mu: StepDistribution, S: Shadow, horizon: int, trials: int, seed: int = 0,
                 direction: str = "forward") -> HitEstimate:
    """Fraction of trials whose path w_n x0 (0 <= n <= horizon) enters S.

    ``direction="backward"`` walks with the reflected measure.
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be forward or backward")
    if not isinstance(S.base, TreePoint) or not isinstance(S.center, TreePoint):
        raise ValueError("hitting probabilities are implemented for tree shadows")
    walk_mu = mu if direction == "forward" else reflected(mu)
    stream = FORWARD if direction == "forward" else BACKWARD
    # y in S iff d(b,y) - d(c,y) >= d(b,c) - 2R; the left side is an integer
    R2 = math.floor(2 * S.R)
    parts = map_trials(_hit_chunk, trials,
                       (walk_mu, S.base.word, S.center.word, int(R2), horizon, seed, stream))
    return HitEstimate(np.concatenate(parts), horizon)


# ------------------------------------------------------------ shadow decay


@dataclass(frozen=True)
class DecayFit:
    r: tuple[int, ...]
    mass: tuple[float, ...]
    counts: tuple[int, ...]
    trials: int
    unresolved: int
    slope: float
    intercept: float
    residual: float
    dropped: tuple[int, ...] = ()


def cylinder_counts(prefixes: np.ndarray, word: Sequence[int]) -> list[int]:
    """How many rows start with word[:r], for r = 1..len(word)."""
    out = []
    alive = np.ones(prefixes.shape[0], dtype=bool)
    for r, x in enumerate(word):
        alive &= prefixes[:, r] == x
        out.append(int(alive.sum()))
    return out


def shadow_decay(mu: StepDistribution, r1: int, r2: int, trials: int, seed: int = 0,
                 word: Optional[GroupElement] = None, steps: Optional[int] = None) -> DecayFit:
    """Limit-point masses of the nested cylinders word[:r], r1 <= r <= r2, and
    a least-squares fit of log mass against r (zero masses dropped).

    The cylinder of a length-r word w is the boundary of the shadow
    S_e(w, 1/2).  ``word`` defaults to a^r2.
    """
    if not 1 <= r1 <= r2:
        raise ValueError("need 1 <= r1 <= r2")
    word = GroupElement((1,) * r2) if word is None else word
    if len(word) < r2:
        raise ValueError("cylinder word shorter than r2")
    pre, ok = boundary_prefixes(mu, r2, trials, seed, steps=steps)
    counts = cylinder_counts(pre[ok], word.letters[:r2])
    rs = list(range(r1, r2 + 1))
    cs = [counts[r - 1] for r in rs]
    mass = [c / trials for c in cs]
    keep = [(r, m) for r, m in zip(rs, mass) if m > 0]
    dropped = tuple(r for r, m in zip(rs, mass) if m == 0)
    if len(keep) >= 2:
        x = np.array([r for r, _ in keep], dtype=float)
        y = np.log([m for _, m in keep])
        slope, intercept = np.polyfit(x, y, 1)
        residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    else:
        slope = intercept = residual = float("nan")
    return DecayFit(tuple(rs), tuple(mass), tuple(cs), trials, int((~ok).sum()),
                    float(slope), float(intercept), residual, dropped)


# ------------------------------------------------------------ translation length


def translation_length_exact(g: GroupElement) -> int:
    return len(cyclic_reduce(GroupElement(g.letters))[0])


def translation_length_formula(g: GroupElement, C0=TREE_C0) -> Optional[int]:
    """d(x0, g x0) - 2 (g^-1 x0 . g x0)_{x0}, or None when the guard
    d(x0, g x0) >= 2 (g^-1 x0 . g x0) + C0 fails."""
    w = g.letters
    gp = common_prefix(inv(GroupElement(w)).letters, w)
    if len(w) < 2 * gp + C0:
        return None
    return len(w) - 2 * gp


@dataclass(frozen=True)
class TranslationStats:
    tau_exact: tuple[int, ...]
    tau_formula: tuple[Optional[int], ...]
    guard: tuple[bool, ...]
    n: int
    L: float
    tail: Proportion

    @property
    def formula_agrees(self) -> bool:
        return all(f == e for f, e, ok in zip(self.tau_formula, self.tau_exact, self.guard) if ok)


def _word_chunk(first, m, mu, n, seed):
    walk = BatchWalk(mu, seed, m, first=first, capacity=n * mu.max_step + 2)
    walk.run(n)
    return walk.words()


def final_words(mu: StepDistribution, n: int, trials: int, seed: int = 0) -> list[GroupElement]:
    return [w for part in map_trials(_word_chunk, trials, (mu, n, seed)) for w in part]


def translation_growth(mu: StepDistribution, n: int, L: float, trials: int,
                       seed: int = 0, C0=TREE_C0) -> TranslationStats:
    """Empirical P(tau(w_n) <= L n), with the formula checked on every sample."""
    ws = final_words(mu, n, trials, seed)
    exact = tuple(translation_length_exact(w) for w in ws)
    formula = tuple(translation_length_formula(w, C0) for w in ws)
    guard = tuple(f is not None for f in formula)
    tail = Proportion.wilson(sum(1 for t in exact if t <= L * n), trials)
    return TranslationStats(exact, formula, guard, n, L, tail)


# ------------------------------------------------------------ tracking


@dataclass(frozen=True)
class TrackingSeries:
    distances: np.ndarray = field(repr=False, compare=False)
    n_min: int = 100

    @property
    def n(self) -> int:
        return len(self.distances) - 1

    @property
    def final_ratio(self) -> float:
        return float(self.distances[-1] / self.n) if self.n else 0.0

    @property
    def max_log_ratio(self) -> float:
        lo = max(self.n_min, 2)
        if self.n < lo:
            return 0.0
        ks = np.arange(lo, self.n + 1)
        return float((self.distances[lo:] / np.log(ks)).max())


def tracking_series(path: SamplePath, n: Optional[int] = None, margin: Optional[int] = None,
                    n_min: int = 100) -> TrackingSeries:
    """Distances d(w_k x0, gamma), k <= n, to the ray gamma towards the limit point.

    The limit prefix is resolved to one letter beyond the furthest
    location, so every distance is exact; ``Unresolved`` is raised when
    the path is too short for that.
    """
    n = path.n if n is None else n
    levels = path.levels[: n + 1]
    depth = int(levels.max()) + 1
    xi = limit_point(path, depth, margin)
    if xi is None:
        raise Unresolved(f"limit prefix of depth {depth} not resolved within {path.n} steps")
    d = np.array([len(w) - common_prefix(w.letters, xi.letters) for w in path.locations[: n + 1]])
    return TrackingSeries(d, n_min)


def _tracking_chunk(first, m, mu, n, seed, margin_factor, max_factor):
    walk = BatchWalk(mu, seed, m, first=first, capacity=4 * n * mu.max_step + 2)
    record = []
    top = np.zeros(m, dtype=np.int64)
    for _ in range(0, n, 512):
        idx = walk.indices(min(512, n - walk.time))
        for row in idx:
            walk.apply(row)
            np.maximum(top, walk.level, out=top)
            record.append(row)
    depth = top + 1
    tracker = PrefixTracker(walk, 0, 0)
    tracker.d = depth
    tracker.margin = margin_factor * depth
    tracker.armed = np.zeros(m, dtype=bool)
    xi = np.zeros((m, int(depth.max())), dtype=np.int8)
    frozen = np.zeros(m, dtype=bool)

    def freeze(w):
        new = tracker.armed & ~frozen
        if new.any():
            for i in np.flatnonzero(new):
                xi[i, : depth[i]] = w.stack[i, : depth[i]]
            frozen[new] = True

    freeze(walk)
    extra = 0
    while not frozen.all() and extra < max_factor * n:
        step = min(512, max_factor * n - extra)
        walk.run(step, on_letter=tracker, on_step=freeze)
        extra += step
    replay = BatchWalk(mu, seed, m, first=first, capacity=n * mu.max_step + 2)
    wid = replay.watch(xi, depth)
    dist = np.zeros((n + 1, m), dtype=np.int64)
    for t, row in enumerate(record):
        replay.apply(row)
        dist[t + 1] = replay.level - replay.agree(wid)
    return dist, frozen


@dataclass(frozen=True)
class TrackingExperiment:
    series: tuple[TrackingSeries, ...]
    unresolved: int

    def final_ratios(self) -> np.ndarray:
        return np.array([s.final_ratio for s in self.series])

    def max_log_ratios(self) -> np.ndarray:
        return np.array([s.max_log_ratio for s in self.series])


def tracking_experiment(mu: StepDistribution, n: int, trials: int, seed: int = 0,
                        n_min: int = 100, margin_factor: int = 2,
                        max_factor: int = 20) -> TrackingExperiment:
    """Tracking series for ``trials`` seeded walks; each walk is extended
    until its limit prefix is resolved beyond every location up to n."""
    parts = map_trials(_tracking_chunk, trials, (mu, n, seed, margin_factor, max_factor))
    series, unresolved = [], 0
    for dist, ok in parts:
        for i in range(dist.shape[1]):
            if ok[i]:
                series.append(TrackingSeries(dist[:, i], n_min))
            else:
                unresolved += 1
    return TrackingExperiment(tuple(series), unresolved)


# ------------------------------------------------------------ midpoint products


@dataclass(frozen=True)
class MidpointStats:
    n: int
    m: int
    gp_mid: np.ndarray = field(repr=False, compare=False)
    gp_cross: np.ndarray = field(repr=False, compare=False)

    def frac_mid_at_least(self, l: float) -> float:
        return float((self.gp_mid >= l * self.n).mean())

    def frac_cross_at_most(self, bound: Optional[float] = None) -> float:
        bound = math.log(self.n) ** 2 if bound is None else bound
        return float((self.gp_cross <= bound).mean())


def _midpoint_chunk(first, m_trials, mu, n, m, seed):
    walk = BatchWalk(mu, seed, m_trials, first=first, capacity=n * mu.max_step + 2)
    walk.run(m)
    wm = walk.words()
    walk.run(n - m)
    wn = walk.words()
    mid, cross = [], []
    for a, b in zip(wm, wn):
        mid.append(common_prefix(a.letters, b.letters))
        u_inv = mul(inv(b), a)  # u_m^-1 with u_m = w_m^-1 w_n
        cross.append(common_prefix(u_inv.letters, a.letters))
    return np.array(mid), np.array(cross)


def midpoint_gp_experiment(mu: StepDistribution, n: int, trials: int, seed: int = 0) -> MidpointStats:
    """(x0 . w_n x0)_{w_m}-style products at the midpoint m = ceil(n/2):
    gp_mid = (w_m x0 . w_n x0)_{x0} and gp_cross = (u_m^-1 x0 . w_m x0)_{x0}."""
    m = (n + 1) // 2
    parts = map_trials(_midpoint_chunk, trials, (mu, n, m, seed))
    mid = np.concatenate([p[0] for p in parts])
    cross = np.concatenate([p[1] for p in parts])
    return MidpointStats(n, m, mid, cross)


# ------------------------------------------------------------ subadditivity


def subadditivity_violations(path: SamplePath, max_pairs: Optional[int] = None) -> list[tuple[int, int]]:
    """Pairs (n, m) with d(x0, w_{n+m}) > d(x0, w_n) + d(x0, w_n^-1 w_{n+m})."""
    locs = path.locations
    N = path.n
    bad = []
    count = 0
    for n in range(N + 1):
        for m in range(N - n + 1):
            lhs = len(locs[n + m]) + locs[n + m].bit
            step = mul(inv(locs[n]), locs[n + m])
            if lhs > len(locs[n]) + locs[n].bit + len(step) + step.bit:
                bad.append((n, m))
            count += 1
            if max_pairs is not None and count >= max_pairs:
                return bad
    return bad
