import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chi2_contingency

from horowalk import walks
from horowalk.walks import (
    BLOCK,
    BatchWalk,
    ConfigError,
    SamplePath,
    StepDistribution,
    boundary_prefixes,
    check_nonelementary,
    cylinder_preimage,
    empirical_pushforward,
    limit_point,
    map_trials,
    reflected,
    sample_path,
    shift,
    stationarity_tv,
    trial_path,
)
from horowalk.words import IDENTITY, GroupElement, common_prefix, inv, mul, parse, words_of_length

from .conftest import elements

U = StepDistribution.uniform()
DA = StepDistribution.point_mass("a")


def _path(*ws):
    return SamplePath(tuple(parse(w) for w in ws))


# ------------------------------------------------------------ distributions


def test_probabilities_must_sum_to_one():
    with pytest.raises(ConfigError):
        StepDistribution.from_json({"support": [{"word": "a", "p": 0.5}, {"word": "b", "p": 0.4}]})
    with pytest.raises(ConfigError):
        StepDistribution(((parse("a"), 0.5), (parse("a"), 0.5)))
    with pytest.raises(ConfigError):
        StepDistribution(())


def test_json_roundtrip():
    mu = StepDistribution.from_json({"support": [{"word": "ab", "p": 0.25}, {"word": "B", "p": 0.75}]})
    assert StepDistribution.from_json(mu.to_json()) == mu


@pytest.mark.trivial
def test_reflection_examples():
    assert reflected(U) == StepDistribution(tuple((inv(g), p) for g, p in U.support))
    assert set(reflected(U).elements) == set(U.elements)
    assert reflected(DA) == StepDistribution.point_mass("A")
    assert reflected(StepDistribution.point_mass("ab")) == StepDistribution.point_mass("BA")


@given(st.lists(elements(max_size=4), min_size=1, max_size=5, unique=True))
def test_reflection_is_an_involution(support):
    mu = StepDistribution(tuple((g, 1 / len(support)) for g in support))
    assert reflected(reflected(mu)) == mu


@given(st.floats(0, 1, exclude_max=True))
def test_inverse_cdf_sampling(u):
    mu = StepDistribution.from_json({"support": [{"word": "a", "p": 0.2}, {"word": "b", "p": 0.3},
                                                 {"word": "A", "p": 0.5}]})
    i = int(mu.indices(np.array([u]))[0])
    lo = 0.0 if i == 0 else mu.cdf[i - 1]
    assert lo <= u < mu.cdf[i]


# ------------------------------------------------------------ paths


@pytest.mark.trivial
def test_sample_path_basics():
    p = sample_path(U, 0, 1)
    assert p.locations == (IDENTITY,)
    assert sample_path(DA, 5, 1).locations[-1] == parse("aaaaa")
    assert sample_path(U, 3, 42).increments == sample_path(U, 3, 42).increments


@given(st.integers(0, 2**63 - 1), st.integers(0, 60))
@settings(max_examples=30)
def test_locations_are_running_products(seed, n):
    p = sample_path(U, n, seed, backward=3)
    assert p.locations[0] == IDENTITY
    for k in range(1, n + 1):
        assert p.locations[k] == mul(p.locations[k - 1], p.increments[k - 1])
    assert all(len(g) == 1 for g in p.backward)


@pytest.mark.trivial
def test_shift_examples():
    p = _path("a", "b", "A")
    assert shift(p, 0) == p
    assert shift(p, 1).locations == (IDENTITY, parse("b"), parse("bA"))
    q = sample_path(U, 20, 3)
    assert shift(shift(q, 1), 1).increments == shift(q, 2).increments
    with pytest.raises(ValueError):
        shift(p, 4)


@given(st.integers(0, 1000), st.integers(0, 10))
@settings(max_examples=30)
def test_shift_locations_formula(seed, k):
    p = sample_path(U, 12, seed)
    s = shift(p, k)
    for n in range(s.n + 1):
        assert s.locations[n] == mul(inv(p.locations[k]), p.locations[n + k])


@pytest.mark.derived
def test_shift_preserves_the_law_of_locations():
    # chi-squared homogeneity test: w_3 of shifted paths vs fresh paths
    shifted = [shift(trial_path(U, 5, 7, t), 2).locations[3] for t in range(3000)]
    fresh = [trial_path(U, 3, 8, t).locations[3] for t in range(3000)]
    keys = sorted(set(shifted) | set(fresh))
    table = np.array([[shifted.count(k) for k in keys], [fresh.count(k) for k in keys]])
    assert chi2_contingency(table).pvalue > 0.001


# ------------------------------------------------------------ non-elementary


@pytest.mark.trivial
def test_nonelementary_examples():
    res = check_nonelementary(U)
    assert res and res.witnesses == (parse("a"), parse("b"))
    assert not check_nonelementary(DA)
    assert not check_nonelementary(StepDistribution(((parse("a"), 0.5), (parse("A"), 0.5))))


def test_nonelementary_witnesses_have_disjoint_axes():
    g, h = check_nonelementary(U).witnesses
    assert walks.axis_ends(g).isdisjoint(walks.axis_ends(h))
    mu = StepDistribution(((parse("ab"), 0.5), (parse("aB"), 0.5)))
    assert check_nonelementary(mu)


# ------------------------------------------------------------ limit points


@pytest.mark.trivial
def test_limit_point_of_deterministic_walk():
    p = sample_path(DA, 5, 0)
    assert limit_point(p, 3, margin=2) == parse("aaa")
    assert limit_point(p, 3) is None  # default margin 2d needs |w| >= 9


@pytest.mark.trivial
def test_returning_path_is_unresolved():
    p = _path("a", "b", "b", "a", "A", "B", "B", "A")
    assert p.locations[-1] == IDENTITY
    assert all(limit_point(p, d) is None for d in range(1, 4))


def test_limit_prefix_is_shared_after_resolution():
    p = sample_path(U, 400, 5)
    pre = limit_point(p, 4)
    assert pre is not None
    assert p.locations[-1].letters[:4] == pre.letters


@pytest.mark.derived
def test_most_long_paths_resolve_depth_five():
    _, ok = boundary_prefixes(U, 5, 1000, seed=3, steps=10_000)
    assert ok.mean() >= 0.99


# ------------------------------------------------------------ batch engine


@pytest.mark.derived
def test_batch_engine_reproduces_single_trial_paths():
    n, trials = 40, 300
    w = BatchWalk(U, 11, trials - 5, first=5, capacity=n + 2)
    w.run(n, chunk=7)
    for t in (5, 6, BLOCK, trials - 1):
        assert w.word(t - 5) == trial_path(U, n, 11, t).locations[-1]


def test_batch_uniforms_do_not_depend_on_chunking():
    a, b = BatchWalk(U, 3, 500), BatchWalk(U, 3, 500)
    a.run(30, chunk=30)
    b.run(30, chunk=4)
    assert a.words() == b.words()


@pytest.mark.derived
def test_watch_tracks_common_prefix():
    rng = np.random.default_rng(0)
    target = np.array([1, 2, 1, -2, -2, 1, 2, 2], dtype=np.int8)
    mu = StepDistribution(tuple((GroupElement(w), 1 / 12) for w in
                                itertools.chain(words_of_length(2, 1), [(1, 2), (2, 1), (-1, -2),
                                                                        (-2, -1), (1, 1), (-2, -2),
                                                                        (2, 2), (-1, -1)])))
    w = BatchWalk(mu, int(rng.integers(1 << 30)), 64)
    wid = w.watch(target, len(target))
    for _ in range(60):
        w.run(1)
        for i, g in enumerate(w.words()):
            assert w.agree(wid)[i] == common_prefix(g.letters, tuple(target))


def test_map_trials_is_worker_independent(monkeypatch):
    def job(first, m):
        return list(range(first, first + m))

    monkeypatch.setenv(walks.WORKERS_ENV, "1")
    one = map_trials(job, 3 * BLOCK + 17, chunk=BLOCK)
    assert sum(one, []) == list(range(3 * BLOCK + 17))


def test_boundary_prefixes_are_worker_independent(monkeypatch, split_jobs):
    whole = boundary_prefixes(U, 3, 3 * BLOCK + 40, seed=2, steps=100)
    split_jobs(1)
    a = boundary_prefixes(U, 3, 3 * BLOCK + 40, seed=2, steps=100)
    split_jobs(3)
    b = boundary_prefixes(U, 3, 3 * BLOCK + 40, seed=2, steps=100)
    for x in (a, b):
        assert np.array_equal(whole[0], x[0]) and np.array_equal(whole[1], x[1])


# ------------------------------------------------------------ pushforwards


@pytest.mark.trivial
def test_point_mass_pushforward():
    m = empirical_pushforward(DA, 2, 50, seed=1)
    assert m.counts == {"aa": 50} and m.total == 50


@pytest.mark.trivial
def test_stratified_first_step_is_exact():
    m = empirical_pushforward(U, 1, 1000, seed=9, stratified=True)
    assert dict(m.counts) == {"a": 250, "A": 250, "b": 250, "B": 250}
    assert sum(m.counts.values()) == m.total


@pytest.mark.derived
def test_first_letter_of_the_limit_is_uniform():
    trials = 100_000
    m = empirical_pushforward(U, 100, trials, seed=4, key="boundary", depth=1)
    sigma = (0.25 * 0.75 / m.total) ** 0.5
    assert m.unresolved < trials * 1e-3
    for k in "aAbB":
        assert abs(m.mass(k) - 0.25) <= 3 * sigma


@given(elements(max_size=3), st.lists(st.sampled_from([1, -1, 2, -2]), min_size=1, max_size=3))
@settings(max_examples=40)
def test_cylinder_preimage_is_exact(g, raw):
    from horowalk.words import reduce_letters

    w = reduce_letters(raw)
    if not w:
        return
    pre = cylinder_preimage(g, w, 2)
    m = len(w) + 2 * len(g) + 2
    gi = inv(g)
    for z in words_of_length(2, m):
        image = mul(gi, GroupElement(z)).letters
        assert (z[: len(w)] == w) == any(image[: len(u)] == u for u in pre)


def test_stationarity_identity_holds_approximately():
    pre, ok = boundary_prefixes(U, 4, 50_000, seed=12, steps=200)
    assert ok.mean() > 0.999
    assert stationarity_tv(U, pre[ok], 2) < 0.02


def test_largest_cylinder_mass_decays():
    pre, ok = boundary_prefixes(U, 8, 20_000, seed=13, steps=300)
    pre = pre[ok]
    top = []
    for d in range(1, 9):
        _, counts = np.unique(pre[:, :d], axis=0, return_counts=True)
        top.append(counts.max() / len(pre))
    assert all(b < a for a, b in zip(top, top[1:]))
