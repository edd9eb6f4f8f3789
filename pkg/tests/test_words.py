import pytest
from hypothesis import given

from horowalk.words import (
    IDENTITY,
    GroupElement,
    all_words_upto,
    count_reduced,
    cyclic_reduce,
    encode,
    inv,
    is_cyclically_reduced,
    mul,
    parse,
    power,
    primitive_root,
    word,
    words_of_length,
)

from .conftest import elements


@pytest.mark.trivial
def test_inverse_pair_multiplies_to_identity():
    assert mul(parse("ab"), parse("BA")) == IDENTITY


@pytest.mark.trivial
def test_cyclic_reduce_conjugate():
    assert cyclic_reduce(parse("abA")) == (parse("b"), parse("a"))


@pytest.mark.trivial
def test_inverse_of_ab():
    assert inv(parse("ab")) == parse("BA")


@pytest.mark.trivial
def test_text_roundtrip_and_identity_spelling():
    assert parse("1") == parse("") == IDENTITY
    assert encode(parse("abA")) == "abA"
    assert parse("acb", central=True) == GroupElement((1, 2), 1)


def test_unreduced_words_are_rejected():
    with pytest.raises(ValueError):
        GroupElement((1, -1))
    with pytest.raises(ValueError):
        parse("a1b")


@pytest.mark.derived
@pytest.mark.parametrize("n", range(6))
def test_sphere_sizes_match_closed_form(n):
    assert sum(1 for _ in words_of_length(2, n)) == count_reduced(2, n)
    assert sum(1 for _ in words_of_length(3, n)) == count_reduced(3, n)


@pytest.mark.derived
def test_enumeration_agrees_with_free_reduction_of_all_strings():
    import itertools

    brute = {word(s) for n in range(5) for s in itertools.product([1, -1, 2, -2], repeat=n)}
    assert brute == set(all_words_upto(2, 4))


@given(elements(), elements(), elements())
def test_multiplication_is_associative(g, h, k):
    assert mul(mul(g, h), k) == mul(g, mul(h, k))


@given(elements())
def test_inverse_is_two_sided(g):
    assert mul(g, inv(g)) == IDENTITY == mul(inv(g), g)


@given(elements())
def test_cyclic_reduce_roundtrip(g):
    core, conj = cyclic_reduce(g)
    assert is_cyclically_reduced(core.letters)
    assert mul(conj, mul(core, inv(conj))) == g


@given(elements(max_size=8))
def test_power_matches_repeated_product(g):
    acc = IDENTITY
    for k in range(5):
        assert power(g, k) == acc
        acc = mul(acc, g)
    assert power(g, -3) == inv(power(g, 3))


@given(elements())
def test_parse_inverts_encode(g):
    assert parse(encode(g) or "1") == g


def test_primitive_root():
    assert primitive_root((1, 2, 1, 2)) == (1, 2)
    assert primitive_root((1, 2, 2)) == (1, 2, 2)
