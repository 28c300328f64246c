import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mopadgan import evalmetrics as em
from mopadgan.errors import PoolTooSmall


def brute_front(p):
    n = len(p)
    return [i for i in range(n) if not any(em.dominates(p[j], p[i]) for j in range(n) if j != i)]


def brute_hv_grid(front, res=2000):
    """Fraction of a fine grid over [0, 1]^2 dominated by some front point."""
    g = (np.arange(res) + 0.5) / res
    xx, yy = np.meshgrid(g, g)
    covered = np.zeros_like(xx, dtype=bool)
    for a, b in front:
        covered |= (xx <= a) & (yy <= b)
    return covered.mean()


def test_diversity_singleton_zero():
    assert em.diversity_score([[0.4, 0.1]]) == 0.0


def test_diversity_distant_points_zero():
    x = np.array([[0.0, 0.0], [100.0, 0.0], [0.0, 100.0], [100.0, 100.0]])
    assert abs(em.diversity_score(x)) < 1e-12


def test_diversity_duplicate_hits_floor():
    x = np.array([[0.0, 0.0], [0.0, 0.0], [50.0, 0.0]])
    v = em.diversity_score(x)
    assert v == pytest.approx(np.log(1e-12) + np.log(2.0), abs=1e-6)
    assert v == pytest.approx(-27.63 + np.log(2.0), abs=0.01)


def test_diversity_methods_agree_on_benign_subsets():
    rng = np.random.default_rng(0)
    x = rng.uniform(-3, 3, (20, 2))
    assert em.diversity_score(x) == pytest.approx(em.diversity_score(x, method="lapack"), abs=1e-8)


def test_diversity_statistics_constant_pool():
    pool = np.tile([[0.2, 0.3]], (1000, 1))
    rep = em.diversity_statistics(pool, n_repetitions=50, subset_size=100, seed=0)
    assert np.all(rep.values == rep.values[0])
    assert rep.std == pytest.approx(0.0, abs=1e-9)
    assert rep.values[0] == pytest.approx(np.log(100.0) + 99 * np.log(1e-12), rel=1e-9)


def test_diversity_statistics_subset_size_one():
    rng = np.random.default_rng(1)
    rep = em.diversity_statistics(rng.normal(size=(30, 2)), n_repetitions=20, subset_size=1, seed=0)
    assert np.all(rep.values == 0.0)


def test_diversity_statistics_spread_beats_cluster():
    rng = np.random.default_rng(2)
    spread = rng.uniform(-1, 1, (1000, 2))
    tight = rng.normal(scale=0.05, size=(1000, 2))
    a = em.diversity_statistics(spread, 100, 100, seed=3)
    b = em.diversity_statistics(tight, 100, 100, seed=3)
    assert a.mean > b.mean


def test_diversity_statistics_deterministic_and_thread_independent():
    rng = np.random.default_rng(3)
    pool = rng.uniform(-1, 1, (300, 2))
    a = em.diversity_statistics(pool, 30, 40, seed=9, threads=1)
    b = em.diversity_statistics(pool, 30, 40, seed=9, threads=4)
    assert np.array_equal(a.values, b.values)
    s = a.summary()
    assert s["n_repetitions"] == 30 and s["subset_size"] == 40 and s["pool_size"] == 300
    assert s["q1"] <= s["median"] <= s["q3"]
    assert s["mean"] == pytest.approx(np.mean(a.values))


def test_diversity_statistics_pool_too_small():
    with pytest.raises(PoolTooSmall):
        em.diversity_statistics(np.zeros((10, 2)), 5, 11)


def test_pareto_examples():
    r = em.pareto_front([(1, 0), (0, 1), (0.5, 0.5)])
    assert sorted(r.front.tolist()) == [0, 1, 2]
    r = em.pareto_front([(0.6, 0.6), (0.5, 0.5)])
    assert r.front.tolist() == [0]
    assert r.hypervolume == pytest.approx(0.36)


def test_pareto_matches_brute_force():
    rng = np.random.default_rng(4)
    for k in (2, 3):
        p = rng.uniform(size=(100, k))
        p[::7] = p[1::7][: len(p[::7])]  # some exact duplicates
        assert sorted(em.pareto_front(p).front.tolist()) == brute_front(p)


def test_hypervolume_vs_grid():
    rng = np.random.default_rng(5)
    p = rng.uniform(size=(40, 2))
    r = em.pareto_front(p)
    assert r.hypervolume == pytest.approx(brute_hv_grid(p[r.front]), abs=2e-3)


def test_pareto_k3_has_no_hypervolume():
    r = em.pareto_front(np.random.default_rng(0).uniform(size=(10, 3)))
    assert r.hypervolume is None


def test_domination_counts():
    a = np.array([[0.9, 0.9], [0.1, 0.1]])
    b = np.array([[0.5, 0.5], [0.95, 0.0]])
    r = em.pareto_front(a, other=b)
    assert r.dominated_by_other == 1  # (0.1, 0.1)
    assert r.other_dominated == 1  # (0.5, 0.5)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 40), k=st.integers(2, 4))
def test_property_front_is_antichain(seed, n, k):
    p = np.random.default_rng(seed).integers(0, 5, size=(n, k)) / 4.0
    front = p[em.pareto_front(p).front]
    for a in front:
        for b in front:
            assert not em.dominates(a, b)
    for i in set(range(n)) - set(em.pareto_front(p).front.tolist()):
        assert any(em.dominates(f, p[i]) for f in front)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 30))
def test_property_hypervolume_monotone(seed, n):
    rng = np.random.default_rng(seed)
    p = rng.uniform(size=(n, 2))
    extra = rng.uniform(size=(1, 2))
    before = em.pareto_front(p).hypervolume
    after = em.pareto_front(np.vstack([p, extra])).hypervolume
    assert after >= before - 1e-15


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(2, 12))
def test_property_diversity_duplicate_never_increases(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2, 2, (n, 2))
    dup = np.vstack([x, x[rng.integers(n)]])
    assert em.diversity_score(dup) <= em.diversity_score(x) + 1e-9


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(2, 12))
def test_property_diversity_permutation_translation(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2, 2, (n, 2))
    base = em.diversity_score(x)
    assert em.diversity_score(x[rng.permutation(n)]) == pytest.approx(base, abs=1e-8)
    assert em.diversity_score(x + rng.normal(size=2)) == pytest.approx(base, abs=1e-7)


def test_novelty_examples():
    t = np.random.default_rng(6).normal(size=(20, 2))
    r = em.novelty_distances(t[:5], t)
    assert np.all(r.distances == 0.0)
    r = em.novelty_distances([[0.3, 0.4]], [[0.0, 0.0]])
    assert r.distances[0] == pytest.approx(0.5)
    s = em.novelty_distances([[0.0, 0.05], [0.0, 0.3]], [[0.0, 0.0]], threshold=0.1).summary()
    assert s["fraction_above_threshold"] == 0.5 and s["max"] == pytest.approx(0.3)


def test_novelty_matches_brute_force():
    rng = np.random.default_rng(7)
    s, t = rng.normal(size=(50, 2)), rng.normal(size=(80, 2))
    brute = np.min(np.linalg.norm(s[:, None] - t[None], axis=-1), axis=1)
    assert np.allclose(em.novelty_distances(s, t).distances, brute, atol=1e-12)


def test_top_k_full_sort_and_ties():
    rng = np.random.default_rng(8)
    scores = rng.uniform(size=30)
    assert em.top_k(scores, 30).tolist() == sorted(range(30), key=lambda i: -scores[i])
    assert em.top_k(np.ones(10), 4).tolist() == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        em.top_k(scores, 31)


def test_top_k_report_tables():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(20, 2))
    p = rng.uniform(size=(20, 2))
    rep = em.top_k_report(x, p, 5)
    assert set(rep) == {"aggregate", "objective_1", "objective_2"}
    agg = [row["score"] for row in rep["aggregate"]]
    assert agg == sorted((p.mean(axis=1)), reverse=True)[:5]
    assert rep["objective_2"][0]["index"] == int(np.argmax(p[:, 1]))
