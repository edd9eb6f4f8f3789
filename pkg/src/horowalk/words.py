"""Reduced words in free groups, with an optional central involution.

Letters are nonzero ints: ``i`` is the generator ``a_i`` and ``-i`` its
inverse.  Text form uses ``a``..``z`` for generators and uppercase for
inverses, so ``abA`` is a b a^-1.  In the F2 x Z/2 model the letter ``c``
is reserved for the central involution.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

INVOLUTION_LETTER = "c"


@dataclass(frozen=True, order=True)
class GroupElement:
    """A reduced word, plus a parity bit for the central involution."""

    letters: tuple[int, ...] = ()
    bit: int = 0

    def __post_init__(self):
        for x, y in zip(self.letters, self.letters[1:]):
            if x == -y:
                raise ValueError(f"word is not reduced: {self.letters}")
        if 0 in self.letters:
            raise ValueError("letter 0 is not a generator")
        if self.bit not in (0, 1):
            raise ValueError("bit must be 0 or 1")

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return mul(self, other)

    def __invert__(self) -> "GroupElement":
        return inv(self)

    def __pow__(self, k: int) -> "GroupElement":
        return power(self, k)

    def __str__(self) -> str:
        return encode(self)

    def __repr__(self) -> str:
        return f"GroupElement({encode(self)!r})"

    @property
    def is_identity(self) -> bool:
        return not self.letters and not self.bit


IDENTITY = GroupElement()


def reduce_letters(letters: Iterable[int]) -> tuple[int, ...]:
    stack: list[int] = []
    for x in letters:
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


def word(letters: Iterable[int], bit: int = 0) -> GroupElement:
    """Freely reduce ``letters`` and wrap them."""
    return GroupElement(reduce_letters(letters), bit % 2)


def mul(g: GroupElement, h: GroupElement) -> GroupElement:
    a, b = g.letters, h.letters
    t = 0
    n = min(len(a), len(b))
    while t < n and a[len(a) - 1 - t] == -b[t]:
        t += 1
    return GroupElement(a[: len(a) - t] + b[t:], g.bit ^ h.bit)


def inv(g: GroupElement) -> GroupElement:
    return GroupElement(tuple(-x for x in reversed(g.letters)), g.bit)


def power(g: GroupElement, k: int) -> GroupElement:
    if k < 0:
        return power(inv(g), -k)
    result = IDENTITY
    base = g
    while k:
        if k & 1:
            result = mul(result, base)
        base = mul(base, base)
        k >>= 1
    return result


def cancellation(a: Sequence[int], b: Sequence[int]) -> int:
    """Number of letters cancelled when forming the product ``a b``."""
    t = 0
    n = min(len(a), len(b))
    while t < n and a[len(a) - 1 - t] == -b[t]:
        t += 1
    return t


def common_prefix(a: Sequence[int], b: Sequence[int]) -> int:
    n = min(len(a), len(b))
    i = 0
    while i < n and a[i] == b[i]:
        i += 1
    return i


def cyclic_reduce(g: GroupElement) -> tuple[GroupElement, GroupElement]:
    """Return ``(core, conjugator)`` with ``g = conjugator core conjugator^-1``.

    ``core`` is cyclically reduced.  The involution bit stays on the core.
    """
    w = g.letters
    i, j = 0, len(w) - 1
    while i < j and w[i] == -w[j]:
        i += 1
        j -= 1
    core = GroupElement(w[i : j + 1], g.bit)
    return core, GroupElement(w[:i])


def translation_length(g: GroupElement) -> int:
    """Length of the cyclic core, i.e. the translation length on the tree."""
    return len(cyclic_reduce(g)[0].letters)


def is_cyclically_reduced(letters: Sequence[int]) -> bool:
    return len(letters) < 2 or letters[0] != -letters[-1]


def primitive_root(letters: Sequence[int]) -> tuple[int, ...]:
    """Shortest ``r`` with ``letters == r * m`` (as sequences)."""
    n = len(letters)
    for p in range(1, n + 1):
        if n % p == 0 and tuple(letters[:p]) * (n // p) == tuple(letters):
            return tuple(letters[:p])
    return tuple(letters)


# ---------------------------------------------------------------- text form


def letter_char(x: int) -> str:
    if not 1 <= abs(x) <= 26:
        raise ValueError(f"letter {x} has no text form")
    ch = chr(ord("a") + abs(x) - 1)
    return ch if x > 0 else ch.upper()


def encode(g: GroupElement) -> str:
    s = "".join(letter_char(x) for x in g.letters)
    if g.bit:
        s += INVOLUTION_LETTER
    return s


def parse(text: str, central: bool = False) -> GroupElement:
    """Parse the text encoding; the identity is written ``""`` or ``"1"``.

    With ``central=True`` the letter ``c`` (either case) toggles the
    central involution and may appear anywhere.
    """
    text = text.strip()
    if text in ("", "1"):
        return IDENTITY
    letters = []
    bit = 0
    for ch in text:
        if not ch.isalpha() or not ch.isascii():
            raise ValueError(f"invalid letter {ch!r} in word {text!r}")
        if central and ch.lower() == INVOLUTION_LETTER:
            bit ^= 1
            continue
        x = ord(ch.lower()) - ord("a") + 1
        letters.append(x if ch.islower() else -x)
    return word(letters, bit)


def alphabet(rank: int) -> list[int]:
    return [s * i for i in range(1, rank + 1) for s in (1, -1)]


def words_of_length(rank: int, n: int) -> Iterator[tuple[int, ...]]:
    """All reduced words of length exactly ``n``, in lexicographic DFS order."""
    letters = alphabet(rank)
    if n == 0:
        yield ()
        return
    stack: list[int] = []

    def rec():
        if len(stack) == n:
            yield tuple(stack)
            return
        for x in letters:
            if stack and stack[-1] == -x:
                continue
            stack.append(x)
            yield from rec()
            stack.pop()

    yield from rec()


def ball(rank: int, radius: int, center: GroupElement = IDENTITY) -> list[GroupElement]:
    """All elements at word distance <= radius from ``center``."""
    out = []
    for n in range(radius + 1):
        for w in words_of_length(rank, n):
            out.append(mul(center, GroupElement(w)))
    return out


def count_reduced(rank: int, n: int) -> int:
    if n == 0:
        return 1
    return 2 * rank * (2 * rank - 1) ** (n - 1)


def all_words_upto(rank: int, n: int) -> Iterator[GroupElement]:
    return (GroupElement(w) for w in itertools.chain.from_iterable(
        words_of_length(rank, m) for m in range(n + 1)))
