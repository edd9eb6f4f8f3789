"""Invariant suites behind ``horowalk verify``.

Each check returns ``None`` on success or a counterexample string.  The
quick level runs exhaustive oracles to radius 5 and 10^3-trial Monte
Carlo; the full level goes to radius 8 and 10^5 trials.
"""
from __future__ import annotations

import random
import time
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional
from unittest import mock

from . import coarse, estimators, horo, oracles, spaces, strips, walks
from .words import all_words_upto, cyclic_reduce, inv, mul, parse


@dataclass(frozen=True)
class Level:
    name: str
    radius: int
    trials: int
    samples: int


LEVELS = {
    "quick": Level("quick", 5, 1_000, 300),
    "full": Level("full", 8, 100_000, 3_000),
}


@dataclass
class Outcome:
    module: str
    invariant: str
    ok: bool
    detail: str
    seconds: float


def _tree_points(radius: int) -> list[spaces.TreePoint]:
    return [spaces.TreePoint(g) for g in all_words_upto(2, radius)]


def _sample(points, k, rng):
    return [rng.choice(points) for _ in range(k)]


F2 = spaces.F2


# ------------------------------------------------------------ space-core


def check_metric(lv: Level) -> Optional[str]:
    pts = _tree_points(min(lv.radius, 5))
    rng = random.Random(1)
    for _ in range(lv.samples * 10):
        x, y, z = _sample(pts, 3, rng)
        dxy = spaces.dist(F2, x, y)
        if dxy != spaces.dist(F2, y, x) or spaces.dist(F2, x, x) != 0:
            return f"symmetry/identity fails at {x}, {y}"
        if dxy > spaces.dist(F2, x, z) + spaces.dist(F2, z, y):
            return f"triangle inequality fails at {x}, {y}, {z}"
    return None


def check_slim(lv: Level) -> Optional[str]:
    pts = _tree_points(min(lv.radius, 5))
    rng = random.Random(2)
    for _ in range(lv.samples):
        x, y, z = _sample(pts, 3, rng)
        other = set(spaces.geodesic(F2, y, z)) | set(spaces.geodesic(F2, x, z))
        if not set(spaces.geodesic(F2, x, y)) <= other:
            return f"triangle {x}, {y}, {z} is not 0-slim"
    return None


def check_action(lv: Level) -> Optional[str]:
    words = list(all_words_upto(2, min(lv.radius, 4)))
    rng = random.Random(3)
    for _ in range(lv.samples * 5):
        g, h, w = _sample(words, 3, rng)
        x = spaces.TreePoint(w)
        if spaces.act(F2, g, spaces.act(F2, h, x)) != spaces.act(F2, mul(g, h), x):
            return f"action law fails for g={g}, h={h}, x={x}"
        core, conj = cyclic_reduce(g)
        if mul(conj, mul(core, inv(conj))) != g:
            return f"cyclic reduction round trip fails for {g}"
    return None


# ------------------------------------------------------------ coarse geometry


def check_shadow_horo(lv: Level) -> Optional[str]:
    ys = _tree_points(min(lv.radius, 6))
    centers = _tree_points(min(lv.radius, 4))
    base = F2.basepoint
    for c in centers:
        for R in (Fraction(1, 2), Fraction(3, 2), Fraction(5, 2)):
            S = coarse.Shadow(base, c, R)
            for y in ys:
                if coarse.shadow_contains(F2, S, y) != coarse.shadow_contains_horo(F2, S, y):
                    return f"S_e({c}, {R}) disagrees at y = {y}"
    return None


def check_complement_cover(lv: Level) -> Optional[str]:
    pts = _tree_points(lv.radius)
    base = F2.basepoint
    for c in _tree_points(min(lv.radius, 3)):
        for R in (Fraction(1, 2), Fraction(3, 2)):
            S = coarse.Shadow(base, c, R)
            cover = coarse.shadow_complement_cover(F2, S)
            for y in pts:
                if not coarse.shadow_contains(F2, S, y) and not coarse.shadow_contains(F2, cover, y):
                    return f"{y} escapes both S_e({c}, {R}) and its cover"
    return None


def check_gp_geodesic(lv: Level) -> Optional[str]:
    pts = _tree_points(min(lv.radius, 5))
    rng = random.Random(4)
    base = F2.basepoint
    for _ in range(lv.samples):
        x, y, z = _sample(pts, 3, rng)
        gp = lambda a, b: coarse.gromov_product(F2, base, a, b)  # noqa: E731
        if gp(x, y) < min(gp(x, z), gp(y, z)):
            return f"Gromov product triangle inequality fails at {x}, {y}, {z}"
        if coarse.dist_to_geodesic(F2, base, spaces.geodesic(F2, x, y)) != gp(x, y):
            return f"distance to [{x}, {y}] differs from the Gromov product"
        path = spaces.geodesic(F2, x, y)
        p = coarse.nearest_point_projection(F2, z, path)
        if any(spaces.dist(F2, z, q) != spaces.dist(F2, z, p) + spaces.dist(F2, p, q) for q in path):
            return f"reverse triangle identity fails projecting {z} onto [{x}, {y}]"
    return None


# ------------------------------------------------------------ horofunctions


def check_horo(lv: Level) -> Optional[str]:
    pts = _tree_points(min(lv.radius, 5))
    rng = random.Random(5)
    base = F2.basepoint
    for _ in range(lv.samples):
        y, x, z, g = _sample(pts, 4, rng)
        h = horo.rho(F2, y)
        if min(-horo.horo_eval(h, x), -horo.horo_eval(h, z)) > coarse.gromov_product(F2, base, x, z):
            return f"horofunction inequality fails for rho_{y} at {x}, {z}"
        gh = horo.horo_action(g.word, h)
        if horo.horo_eval(gh, x) != horo.horo_action_eval(g.word, h, x):
            return f"action formula fails for g={g}, rho_{y} at {x}"
        lhs = horo.local_min_map(gh)
        rhs = horo.act_local_min(g.word, F2, horo.local_min_map(h))
        if lhs != rhs:
            return f"local minimum map is not equivariant for g={g}, y={y}"
        prof = horo.restrict_profile(h, horo.oriented(F2, x, z))
        if prof.residual != 0:
            return f"rho_{y} on [{x}, {z}] has residual {prof.residual}"
    return None


# ------------------------------------------------------------ walks and estimators


def check_walks(lv: Level) -> Optional[str]:
    mu = walks.StepDistribution.uniform()
    if walks.sample_path(mu, 50, 9).increments != walks.sample_path(mu, 50, 9).increments:
        return "sample_path is not deterministic"
    if walks.reflected(walks.reflected(mu)) != mu:
        return "reflection is not an involution"
    m = walks.empirical_pushforward(mu, 100, lv.trials, seed=3, key="boundary", depth=1)
    sigma = (0.25 * 0.75 / lv.trials) ** 0.5
    for k in ("a", "A", "b", "B"):
        if abs(m.mass(k) - 0.25) > 4 * sigma:
            return f"first-letter mass of {k} is {m.mass(k):.4f}"
    return None


def check_translation(lv: Level) -> Optional[str]:
    for g in all_words_upto(2, lv.radius):
        if not g.letters:
            continue
        exact = estimators.translation_length_exact(g)
        if estimators.translation_length_formula(g) != exact:
            return f"translation formula differs from cyclic reduction at {g}"
        if exact != len(mul(g, g)) - len(g):
            return f"tau({g}) != |g^2| - |g|"
    return None


def check_drift(lv: Level) -> Optional[str]:
    mu = walks.StepDistribution.uniform()
    n = 200
    d = estimators.estimate_drift(mu, n, lv.trials, seed=11)
    exact = float(oracles.expected_distance(n)) / n
    if abs(d.L_hat - exact) > 4 * d.stderr:
        return f"drift {d.L_hat:.4f} is {abs(d.L_hat - exact) / d.stderr:.1f} stderr from {exact:.4f}"
    return None


def check_subadditive(lv: Level) -> Optional[str]:
    path = walks.sample_path(walks.StepDistribution.uniform(), 40, 5)
    bad = estimators.subadditivity_violations(path)
    return f"subadditivity fails at (n, m) = {bad[0]}" if bad else None


# ------------------------------------------------------------ strips


def check_strips(lv: Level) -> Optional[str]:
    rng = random.Random(6)
    r = 5 if lv.name == "quick" else 7
    ends = ["(a)", "(A)", "(b)", "(B)", "ab(a)", "A(b)", "(ab)", "(AB)", "b(aB)"]
    for _ in range(6 if lv.name == "quick" else 30):
        a, b = rng.sample(ends, 2)
        pair = strips.BoundaryPair(spaces.end_of(a), spaces.end_of(b))
        params = strips.BGParams(1, 3, parse(rng.choice(["aaa", "abab", "bAb"])))
        brute = set(strips.enumerate_bg_brute(pair, params, r))
        fast = set(strips.enumerate_bg_in_ball(pair, params, r))
        if brute != fast:
            return f"near-line enumeration misses {sorted(map(str, brute ^ fast))} for ({a}, {b})"
        g = parse(rng.choice(["a", "bA", "ab", "B"]))
        moved = strips.translate_pair(g, pair)
        for h in all_words_upto(2, 3):
            if strips.is_bounded_geometry(h, pair, params) != strips.is_bounded_geometry(mul(g, h), moved, params):
                return f"equivariance fails for g={g}, h={h}"
    return None


SUITES: list[tuple[str, str, Callable[[Level], Optional[str]]]] = [
    ("space-core", "metric axioms", check_metric),
    ("space-core", "zero-slim triangles", check_slim),
    ("space-core", "action law and cyclic reduction", check_action),
    ("coarse-geometry", "shadow membership equals horofunction test", check_shadow_horo),
    ("coarse-geometry", "shadow complement cover", check_complement_cover),
    ("coarse-geometry", "Gromov product identities", check_gp_geodesic),
    ("horofunction", "inequality, action, equivariance, profiles", check_horo),
    ("walk-engine", "determinism, reflection, first-letter symmetry", check_walks),
    ("estimators", "translation formula", check_translation),
    ("estimators", "drift against the distance chain", check_drift),
    ("estimators", "subadditivity", check_subadditive),
    ("strips", "enumeration and equivariance", check_strips),
]

FAULTS = ("flip-shadow",)


@contextmanager
def _fault(name: Optional[str]):
    if name is None:
        yield
        return
    if name != "flip-shadow":
        raise ValueError(f"unknown fault {name!r}")

    def flipped(space, S, y):
        gp = coarse.gromov_product(space, S.base, S.center, y)
        return gp <= spaces.dist(space, S.base, S.center) - S.R

    with mock.patch.object(coarse, "shadow_contains", flipped):
        yield


def verify(level: str = "quick", fault: Optional[str] = None) -> list[Outcome]:
    lv = LEVELS[level]
    out = []
    with _fault(fault):
        for module, name, fn in SUITES:
            t0 = time.perf_counter()
            try:
                detail = fn(lv)
            except Exception as exc:  # an exception is a failure with a message
                detail = f"{type(exc).__name__}: {exc}"
            out.append(Outcome(module, name, detail is None, detail or "", time.perf_counter() - t0))
    return out


def summary(outcomes: list[Outcome]) -> str:
    lines = []
    for o in outcomes:
        status = "PASS" if o.ok else "FAIL"
        line = f"{status}  {o.module:16s} {o.invariant:48s} {o.seconds:7.2f}s"
        if not o.ok:
            line += f"\n      counterexample: {o.detail}"
        lines.append(line)
    return "\n".join(lines)

