"""Exact reference computations used to check the estimators.

Everything here is exact (Fractions) or an exhaustive enumeration; none
of it samples.
"""
from __future__ import annotations

import math
from collections import defaultdict
from fractions import Fraction

from .words import GroupElement, alphabet, ball, inv, mul, words_of_length


# ------------------------------------------------------------ distance chain


def distance_chain_law(n: int, rank: int = 2) -> list[dict[int, Fraction]]:
    """Law of |w_t| for t = 0..n under the simple random walk on F_rank.

    From 0 the chain moves to 1; from j >= 1 it moves up with probability
    (2k-1)/2k and down with probability 1/2k.
    """
    up = Fraction(2 * rank - 1, 2 * rank)
    down = 1 - up
    law = {0: Fraction(1)}
    out = [law]
    for _ in range(n):
        nxt: dict[int, Fraction] = defaultdict(Fraction)
        for j, p in law.items():
            if j == 0:
                nxt[1] += p
            else:
                nxt[j + 1] += p * up
                nxt[j - 1] += p * down
        law = dict(nxt)
        out.append(law)
    return out


def expected_distance(n: int, rank: int = 2) -> Fraction:
    law = distance_chain_law(n, rank)[-1]
    return sum(j * p for j, p in law.items())


def lower_tail(n: int, threshold: float, rank: int = 2) -> Fraction:
    """P(|w_n| <= threshold)."""
    law = distance_chain_law(n, rank)[-1]
    return sum((p for j, p in law.items() if j <= threshold), Fraction(0))


def distance_chain_moments(n: int, rank: int = 2) -> tuple[float, float]:
    """Mean and variance of |w_n| in floating point, for large n."""
    up = (2 * rank - 1) / (2 * rank)
    law = [0.0] * (n + 2)
    law[0] = 1.0
    for _ in range(n):
        nxt = [0.0] * (n + 2)
        nxt[1] += law[0]
        for j in range(1, n + 1):
            if law[j]:
                nxt[j + 1] += law[j] * up
                nxt[j - 1] += law[j] * (1 - up)
        law = nxt
    mean = sum(j * p for j, p in enumerate(law))
    var = sum(j * j * p for j, p in enumerate(law)) - mean * mean
    return mean, var


def walk_law(n: int, rank: int = 2) -> dict[GroupElement, Fraction]:
    """Exact law of w_n for the simple random walk, by convolution over group elements."""
    gens = [GroupElement((x,)) for x in alphabet(rank)]
    q = Fraction(1, len(gens))
    law = {GroupElement(): Fraction(1)}
    for _ in range(n):
        nxt: dict[GroupElement, Fraction] = defaultdict(Fraction)
        for g, p in law.items():
            for s in gens:
                nxt[mul(g, s)] += p * q
        law = dict(nxt)
    return law


# ------------------------------------------------------------ harmonic measure


def harmonic_cylinder_mass(prefix_len: int, rank: int = 2) -> Fraction:
    """Hitting-measure mass of any single cylinder of the given depth."""
    if prefix_len == 0:
        return Fraction(1)
    return Fraction(1, 2 * rank) * Fraction(1, 2 * rank - 1) ** (prefix_len - 1)


def vertex_hitting_prob(dist: int, rank: int = 2) -> Fraction:
    """Probability that the simple random walk ever visits a given vertex."""
    return Fraction(1, 2 * rank - 1) ** dist


# ------------------------------------------------------------ acylindricity


def displacement_set(D: int, y: GroupElement, rank: int = 2) -> list[GroupElement]:
    """All g with |g| <= D and d(y, g y) <= D, by enumerating the D-ball."""
    yi = inv(y)
    return [g for g in ball(rank, D) if len(mul(mul(yi, g), y)) <= D]


def axis_candidates(D: int, y: GroupElement) -> list[GroupElement]:
    """The elements that can move both e and y by at most D, when |y| >= D.

    Such an element translates along [e, y] (or is a short elliptic
    word); in a free group it is z_{r+t} z_r^-1 or its inverse for the
    geodesic vertices z_i, with 2r + t <= D.
    """
    letters = y.letters
    z = [GroupElement(letters[:i]) for i in range(len(letters) + 1)]
    out = {GroupElement()}
    for t in range(1, D + 1):
        r = (D - t) // 2
        if r + t > len(letters):
            continue
        g = mul(z[r + t], inv(z[r]))
        out.add(g)
        out.add(inv(g))
    return sorted(out)


def acylindricity_count(D: int, y: GroupElement) -> int:
    """#{g : d(e, g) <= D, d(y, g y) <= D} via the axis candidates (|y| >= D)."""
    if len(y) < D:
        raise ValueError("the candidate method needs |y| >= D")
    yi = inv(y)
    return sum(1 for g in axis_candidates(D, y) if len(g) <= D and len(mul(mul(yi, g), y)) <= D)


def acylindricity_bound(D: int) -> int:
    """N(D) for the free action of F_k on its tree: the worst case is y on an
    axis, y = a^L, where every power a^j with |j| <= D qualifies."""
    return 2 * D + 1


def ball_size(rank: int, r: int) -> int:
    if r < 0:
        return 0
    if rank == 1:
        return 2 * r + 1
    q = 2 * rank - 1
    return 1 + 2 * rank * (q**r - 1) // (q - 1)


def log_ball_size(rank: int, r: int) -> float:
    return math.log(ball_size(rank, r))


def sphere(rank: int, r: int) -> list[GroupElement]:
    return [GroupElement(w) for w in words_of_length(rank, r)]
