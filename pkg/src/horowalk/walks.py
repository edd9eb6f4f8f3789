"""Seeded random walks on free groups.

Two layers live here.  ``SamplePath`` is the exact, word-level object: a
seeded increment sequence with its locations.  ``BatchWalk`` runs many
independent walkers at once on numpy arrays (one stack of letters per
walker) and is what the estimators use.

Seeding
-------
Every random number comes from a ``SeedSequence``.  A single path with
seed ``s`` uses stream ``SeedSequence(s, spawn_key=(stream,))``.  Monte
Carlo trials are grouped in blocks of ``BLOCK`` walkers; block ``b`` of
stream ``k`` draws from ``SeedSequence(master, spawn_key=(k, b))`` and
its uniforms are laid out time-major, so trial ``t`` sees the same
increments whatever the trial count, the chunking in time, or the
number of worker processes.  Stream 0 drives forward walks, stream 1
backward (reflected) walks.
"""
from __future__ import annotations

import itertools
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from .spaces import TreeEnd, translate_end
from .words import (
    IDENTITY,
    GroupElement,
    cyclic_reduce,
    encode,
    inv,
    mul,
    parse,
)

BLOCK = 256
FORWARD, BACKWARD = 0, 1
PROB_TOL = 1e-12
WORKERS_ENV = "HOROWALK_WORKERS"
CHUNK = 64 * BLOCK  # trials per job handed to a worker


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------ step distributions


@dataclass(frozen=True)
class StepDistribution:
    support: tuple[tuple[GroupElement, float], ...]

    def __post_init__(self):
        support = tuple((g, float(p)) for g, p in self.support)
        if not support:
            raise ConfigError("step distribution has empty support")
        if any(p <= 0 for _, p in support):
            raise ConfigError("probabilities must be positive")
        total = sum(p for _, p in support)
        if abs(total - 1.0) > PROB_TOL:
            raise ConfigError(f"probabilities sum to {total!r}, not 1")
        elems = [g for g, _ in support]
        if len(set(elems)) != len(elems):
            raise ConfigError("support elements must be distinct")
        object.__setattr__(self, "support", support)

    @classmethod
    def uniform(cls, rank: int = 2) -> "StepDistribution":
        gens = [GroupElement((s * i,)) for i in range(1, rank + 1) for s in (1, -1)]
        return cls(tuple((g, 1.0 / len(gens)) for g in gens))

    @classmethod
    def point_mass(cls, g: GroupElement | str) -> "StepDistribution":
        g = parse(g) if isinstance(g, str) else g
        return cls(((g, 1.0),))

    @classmethod
    def from_json(cls, obj: dict, central: bool = False) -> "StepDistribution":
        try:
            items = obj["support"]
            return cls(tuple((parse(it["word"], central=central), float(it["p"])) for it in items))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed step distribution: {exc}") from exc

    def to_json(self) -> dict:
        return {"support": [{"word": encode(g), "p": p} for g, p in self.support]}

    @property
    def elements(self) -> list[GroupElement]:
        return [g for g, _ in self.support]

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.support])

    @cached_property
    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c

    @cached_property
    def letter_table(self) -> np.ndarray:
        width = max(1, max(len(g) for g in self.elements))
        tab = np.zeros((len(self.support), width), dtype=np.int8)
        for i, g in enumerate(self.elements):
            tab[i, : len(g)] = g.letters
        return tab

    @cached_property
    def bits(self) -> np.ndarray:
        return np.array([g.bit for g in self.elements], dtype=np.int8)

    @property
    def max_step(self) -> int:
        return max(len(g) for g in self.elements)

    @property
    def rank(self) -> int:
        return max((abs(x) for g in self.elements for x in g.letters), default=1)

    def indices(self, u: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.cdf, u, side="right").astype(np.intp)


def reflected(mu: StepDistribution) -> StepDistribution:
    """The reflected measure g -> mu(g^-1)."""
    return StepDistribution(tuple((inv(g), p) for g, p in mu.support))


def _generator(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


# ------------------------------------------------------------ sample paths


@dataclass(frozen=True)
class SamplePath:
    """Increments g_1..g_n with locations w_k = g_1 ... g_k.

    ``backward`` holds increments h_1..h_m of an independent reflected
    walk; its locations are the bi-infinite path's negative times.
    """

    increments: tuple[GroupElement, ...]
    seed: Optional[int] = None
    backward: Optional[tuple[GroupElement, ...]] = None

    @property
    def n(self) -> int:
        return len(self.increments)

    @cached_property
    def locations(self) -> tuple[GroupElement, ...]:
        locs = [IDENTITY]
        for g in self.increments:
            locs.append(mul(locs[-1], g))
        return tuple(locs)

    @cached_property
    def backward_locations(self) -> tuple[GroupElement, ...]:
        locs = [IDENTITY]
        for g in self.backward or ():
            locs.append(mul(locs[-1], g))
        return tuple(locs)

    def location(self, k: int) -> GroupElement:
        return self.locations[k]

    @cached_property
    def levels(self) -> np.ndarray:
        """|w_k| for k = 0..n."""
        return np.array([len(w) for w in self.locations], dtype=np.int64)

    def distances(self) -> np.ndarray:
        return np.array([len(w) + w.bit for w in self.locations], dtype=np.int64)


def _draw_increments(mu: StepDistribution, u: np.ndarray) -> tuple[GroupElement, ...]:
    elems = mu.elements
    return tuple(elems[i] for i in mu.indices(u))


def sample_path(mu: StepDistribution, n: int, seed: int, backward: int = 0) -> SamplePath:
    """A seeded path of ``n`` forward steps and ``backward`` reflected steps."""
    if n < 0 or backward < 0:
        raise ValueError("path lengths must be >= 0")
    fwd = _draw_increments(mu, _generator(seed, FORWARD).random(n))
    bwd = None
    if backward:
        bwd = _draw_increments(reflected(mu), _generator(seed, BACKWARD).random(backward))
    return SamplePath(fwd, seed, bwd)


def trial_path(mu: StepDistribution, n: int, master: int, trial: int,
               backward: int = 0) -> SamplePath:
    """The path that Monte Carlo trial ``trial`` of ``master`` follows."""
    block, col = divmod(trial, BLOCK)
    fwd = _draw_increments(mu, _generator(master, FORWARD, block).random((n, BLOCK))[:, col])
    bwd = None
    if backward:
        u = _generator(master, BACKWARD, block).random((backward, BLOCK))[:, col]
        bwd = _draw_increments(reflected(mu), u)
    return SamplePath(fwd, None, bwd)


def shift(path: SamplePath, k: int) -> SamplePath:
    """The shifted path: locations w_k^-1 w_{n+k}."""
    if k < 0 or k > path.n:
        raise ValueError(f"cannot shift a path of length {path.n} by {k}")
    if k == 0:
        return path
    moved = tuple(inv(g) for g in reversed(path.increments[:k]))
    bwd = moved + (path.backward or ()) if path.backward is not None else None
    return SamplePath(path.increments[k:], None, bwd)


# ------------------------------------------------------------ limit points


def _levels_and_lows(path_letters: Iterable[GroupElement]):
    """Replay a path letter by letter: yields (stack, level) after each letter."""
    stack: list[int] = []
    for g in path_letters:
        for x in g.letters:
            if stack and stack[-1] == -x:
                stack.pop()
            else:
                stack.append(x)
            yield stack


def limit_point(path: SamplePath, d: int, margin: Optional[int] = None) -> Optional[GroupElement]:
    """Stable depth-``d`` prefix of the path's limit point, or ``None``.

    The prefix counts as resolved when, since the last time the path went
    below distance ``d``, it has climbed to distance ``d + margin``
    (default margin ``2 d``).  After that moment every location shares the
    returned prefix.
    """
    margin = 2 * d if margin is None else margin
    armed = d == 0 and margin == 0
    last = None
    for stack in _levels_and_lows(path.increments):
        level = len(stack)
        if level < d:
            armed = False
        elif level >= d + margin:
            armed = True
        last = stack
    if last is None:
        return GroupElement() if armed else None
    if not armed:
        return None
    return GroupElement(tuple(last[:d]))


# ------------------------------------------------------------ non-elementary check


def axis_ends(g: GroupElement) -> frozenset:
    """The attracting and repelling ends of a nontrivial element of F_k."""
    core, conj = cyclic_reduce(GroupElement(g.letters))
    if not core.letters:
        raise ValueError("the identity has no axis")
    plus = translate_end(conj, TreeEnd((), core.letters))
    minus = translate_end(conj, TreeEnd((), inv(core).letters))
    return frozenset((plus, minus))


@dataclass(frozen=True)
class NonElementary:
    found: bool
    witnesses: Optional[tuple[GroupElement, GroupElement]] = None

    def __bool__(self):
        return self.found


def check_nonelementary(mu: StepDistribution, search_len: int = 3) -> NonElementary:
    """Search semigroup products of length <= search_len for two hyperbolic
    elements with disjoint fixed-point pairs."""
    support = [GroupElement(g.letters) for g in mu.elements]
    seen: list[tuple[GroupElement, frozenset]] = []
    known = set()
    for length in range(1, search_len + 1):
        for combo in itertools.product(support, repeat=length):
            g = IDENTITY
            for h in combo:
                g = mul(g, h)
            if not g.letters or g in known:
                continue
            known.add(g)
            ends = axis_ends(g)
            for h, other in seen:
                if ends.isdisjoint(other):
                    return NonElementary(True, (h, g))
            seen.append((g, ends))
    return NonElementary(False)


# ------------------------------------------------------------ batch engine


class BatchWalk:
    """Walkers ``first .. first + trials - 1`` of one seeded stream, stepped together.

    State per walker: a stack of letters (the reduced word w_k), its
    length, the involution bit, and the lowest level seen since the last
    call to ``reset_low``.  Optional watch tables track the common prefix
    length of each walker's word with a fixed word (one row per walker).
    """

    def __init__(self, mu: StepDistribution, master: int, trials: int, first: int = 0,
                 stream: int = FORWARD, capacity: int = 256):
        if trials < 1:
            raise ValueError("trials must be >= 1")
        self.mu = mu
        self.master = master
        self.trials = trials
        self.first = first
        self.stream = stream
        self.table = mu.letter_table
        self.bits = mu.bits
        self.stack = np.zeros((trials, max(capacity, 8)), dtype=np.int8)
        self.level = np.zeros(trials, dtype=np.int64)
        self.low = np.zeros(trials, dtype=np.int64)
        self.bit = np.zeros(trials, dtype=np.int8)
        self.rows = np.arange(trials)
        self.time = 0
        self.watches: list[list] = []  # [table, lengths, agree]
        b0 = first // BLOCK
        b1 = (first + trials - 1) // BLOCK
        self._blocks = [(b, _generator(master, stream, b)) for b in range(b0, b1 + 1)]
        self._offset = first - b0 * BLOCK
        self._pending: Optional[np.ndarray] = None

    # -- randomness
    def uniforms(self, steps: int) -> np.ndarray:
        """Next ``steps`` uniforms for every walker, shape (steps, trials)."""
        parts = [gen.random((steps, BLOCK)) for _, gen in self._blocks]
        u = np.concatenate(parts, axis=1) if len(parts) > 1 else parts[0]
        return u[:, self._offset : self._offset + self.trials]

    def indices(self, steps: int) -> np.ndarray:
        return self.mu.indices(self.uniforms(steps))

    # -- watches
    def watch(self, words: np.ndarray, lengths: np.ndarray) -> int:
        """Track lcp(w, words[i]) per walker; returns the watch id."""
        words = np.asarray(words, dtype=np.int8)
        if words.ndim == 1:
            words = np.broadcast_to(words, (self.trials, words.shape[0]))
        lengths = np.broadcast_to(np.asarray(lengths, dtype=np.int64), (self.trials,))
        agree = self._initial_agree(words, lengths)
        self.watches.append([words, lengths.copy(), agree])
        return len(self.watches) - 1

    def _initial_agree(self, words, lengths):
        agree = np.zeros(self.trials, dtype=np.int64)
        alive = np.ones(self.trials, dtype=bool)
        for p in range(int(self.level.max(initial=0))):
            ok = alive & (p < self.level) & (p < lengths)
            if words.shape[1] > p:
                ok &= self.stack[:, p] == words[:, p]
            else:
                ok[:] = False
            agree += ok
            alive = ok
        return agree

    def agree(self, wid: int) -> np.ndarray:
        return self.watches[wid][2]

    # -- stepping
    def _grow(self):
        need = int(self.level.max()) + self.table.shape[1] + 1
        if need >= self.stack.shape[1]:
            cap = max(2 * self.stack.shape[1], need + 1)
            new = np.zeros((self.trials, cap), dtype=np.int8)
            new[:, : self.stack.shape[1]] = self.stack
            self.stack = new

    def apply(self, idx: np.ndarray, on_letter=None) -> None:
        """Apply one increment per walker (``idx`` indexes the support)."""
        self._grow()
        self.bit ^= self.bits[idx]
        rows = self.rows
        for j in range(self.table.shape[1]):
            x = self.table[idx, j]
            active = x != 0
            lv = self.level
            top = self.stack[rows, np.maximum(lv - 1, 0)]
            cancel = active & (lv > 0) & (top == -x)
            push = active & ~cancel
            new_level = lv + push - cancel
            for words, lengths, agree in self.watches:
                pc = np.minimum(lv, words.shape[1] - 1)
                agree += push & (agree == lv) & (lv < lengths) & (words[rows, pc] == x)
                np.minimum(agree, new_level, out=agree)
            pr = rows[push]
            self.stack[pr, lv[push]] = x[push]
            self.level = new_level
            np.minimum(self.low, self.level, out=self.low)
            if on_letter is not None:
                on_letter(self)
        self.time += 1

    def run(self, steps: int, chunk: int = 512, on_step=None, on_letter=None) -> None:
        done = 0
        while done < steps:
            m = min(chunk, steps - done)
            idx = self.indices(m)
            for r in range(m):
                self.apply(idx[r], on_letter)
                if on_step is not None:
                    on_step(self)
            done += m

    def reset_low(self) -> None:
        self.low = self.level.copy()

    # -- reading state
    def word(self, i: int) -> GroupElement:
        return GroupElement(tuple(int(x) for x in self.stack[i, : self.level[i]]), int(self.bit[i]))

    def words(self) -> list[GroupElement]:
        return [self.word(i) for i in range(self.trials)]

    def distance(self) -> np.ndarray:
        return self.level + self.bit

    def snapshot(self) -> tuple[np.ndarray, np.ndarray]:
        return self.stack[:, : int(self.level.max(initial=0))].copy(), self.level.copy()


class PrefixTracker:
    """Last-passage resolution of depth-``d`` prefixes, updated per letter."""

    def __init__(self, walk: BatchWalk, d: int, margin: Optional[int] = None):
        self.d = d
        self.margin = 2 * d if margin is None else margin
        self.armed = np.zeros(walk.trials, dtype=bool)
        if d == 0 and self.margin == 0:
            self.armed[:] = True

    def __call__(self, walk: BatchWalk) -> None:
        lv = walk.level
        self.armed &= lv >= self.d
        self.armed |= lv >= self.d + self.margin

    def prefixes(self, walk: BatchWalk) -> np.ndarray:
        return walk.stack[:, : self.d]


def default_horizon(d: int, mu: StepDistribution | None = None) -> int:
    """Steps after which a depth-d prefix with margin 2d is almost always resolved."""
    return 20 * d + 60


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def map_trials(func, trials: int, args: tuple = (), chunk: Optional[int] = None) -> list:
    """Call ``func(first, count, *args)`` on consecutive trial ranges.

    Ranges are aligned to ``BLOCK`` and results come back in trial order,
    so the outcome does not depend on the number of worker processes.
    """
    chunk = CHUNK if chunk is None else chunk
    chunk = max(BLOCK, chunk - chunk % BLOCK)
    starts = list(range(0, trials, chunk))
    jobs = [(s, min(chunk, trials - s)) for s in starts]
    workers = min(worker_count(), len(jobs))
    if workers <= 1:
        return [func(s, m, *args) for s, m in jobs]
    with ProcessPoolExecutor(workers) as pool:
        futs = [pool.submit(func, s, m, *args) for s, m in jobs]
        return [f.result() for f in futs]


def _prefix_chunk(first, m, mu, depth, seed, steps, margin, stream):
    walk = BatchWalk(mu, seed, m, first=first, stream=stream, capacity=steps * mu.max_step + 2)
    tracker = PrefixTracker(walk, depth, margin)
    walk.run(steps, on_letter=tracker)
    return walk.stack[:, :depth].copy(), tracker.armed.copy()


def boundary_prefixes(mu: StepDistribution, depth: int, trials: int, seed: int,
                      steps: Optional[int] = None, margin: Optional[int] = None,
                      stream: int = FORWARD) -> tuple[np.ndarray, np.ndarray]:
    """Resolved depth-``depth`` limit prefixes of ``trials`` walkers.

    Returns ``(prefixes, resolved)`` with ``prefixes`` of shape
    (trials, depth); rows where ``resolved`` is False are meaningless.
    """
    steps = default_horizon(depth, mu) if steps is None else steps
    parts = map_trials(_prefix_chunk, trials, (mu, depth, seed, steps, margin, stream))
    pre = np.concatenate([p for p, _ in parts]) if parts else np.zeros((0, depth), np.int8)
    ok = np.concatenate([o for _, o in parts]) if parts else np.zeros(0, bool)
    return pre, ok


# ------------------------------------------------------------ empirical measures


@dataclass
class EmpiricalMeasure:
    counts: Counter = field(default_factory=Counter)
    total: int = 0
    unresolved: int = 0

    def add(self, key: str, k: int = 1) -> None:
        self.counts[key] += k
        self.total += k

    def mass(self, key: str) -> float:
        return self.counts.get(key, 0) / self.total if self.total else 0.0

    def cylinder_mass(self, prefix: str, denominator: Optional[int] = None) -> float:
        """Mass of all keys starting with ``prefix``."""
        den = self.total if denominator is None else denominator
        hits = sum(c for k, c in self.counts.items() if k.startswith(prefix))
        return hits / den if den else 0.0

    def to_csv_rows(self) -> list[tuple[str, int, int]]:
        return [(k, c, self.total) for k, c in sorted(self.counts.items())]


def _key(row: Sequence[int]) -> str:
    return encode(GroupElement(tuple(int(x) for x in row)))


def empirical_pushforward(mu: StepDistribution, n: int, trials: int, seed: int = 0,
                          key: str = "location", depth: int = 1,
                          stratified: bool = False) -> EmpiricalMeasure:
    """Counts of w_n (``key="location"``) or of resolved limit prefixes
    (``key="boundary"``, ``n`` steps of horizon) over seeded trials.

    ``stratified`` replaces the first step's uniforms by the midpoints
    (t + 1/2)/trials, so n = 1 location counts are exact.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    meas = EmpiricalMeasure()
    if key == "boundary":
        pre, ok = boundary_prefixes(mu, depth, trials, seed, steps=n)
        for row in pre[ok]:
            meas.add(_key(row))
        meas.unresolved = int((~ok).sum())
        return meas
    if key != "location":
        raise ValueError(f"unknown key {key!r}")
    walk = BatchWalk(mu, seed, trials, capacity=n * mu.max_step + 2)
    for t in range(n):
        idx = walk.indices(1)[0]
        if stratified and t == 0:
            idx = mu.indices((np.arange(trials) + 0.5) / trials)
        walk.apply(idx)
    for w in walk.words():
        meas.add(encode(w))
    return meas


def cylinder_preimage(g: GroupElement, w: tuple[int, ...], rank: int) -> list[tuple[int, ...]]:
    """Words u with g^-1 . C(w) = union of the cylinders C(u), exactly."""
    from .words import words_of_length

    gi = inv(GroupElement(g.letters)).letters
    need = max(len(w), len(gi) + 1)
    out = set()
    for ext in words_of_length(rank, need - len(w)) if need > len(w) else [()]:
        if ext and w and ext[0] == -w[-1]:
            continue
        full = GroupElement(tuple(w) + tuple(ext))
        out.add(mul(GroupElement(gi), full).letters)
    return sorted(out)


def stationarity_tv(mu: StepDistribution, prefixes: np.ndarray, depth: int) -> float:
    """Total variation between nu_hat and sum_g mu(g) nu_hat(g^-1 .) on depth-``depth`` cylinders.

    ``prefixes`` are resolved limit prefixes, long enough to evaluate every
    preimage cylinder.
    """
    from .words import words_of_length

    rank = mu.rank
    total = prefixes.shape[0]
    counts = Counter(tuple(int(x) for x in row) for row in prefixes)
    by_len: dict[int, Counter] = {}

    def mass(u: tuple[int, ...]) -> float:
        c = by_len.get(len(u))
        if c is None:
            c = Counter()
            for row, k in counts.items():
                c[row[: len(u)]] += k
            by_len[len(u)] = c
        return c.get(u, 0) / total

    tv = 0.0
    for w in words_of_length(rank, depth):
        lhs = mass(w)
        rhs = sum(p * sum(mass(u) for u in cylinder_preimage(g, w, rank)) for g, p in mu.support)
        tv += abs(lhs - rhs)
    return tv / 2
