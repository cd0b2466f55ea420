import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import count_paths, cylinder_entropy_enum, golden_constrained_entropy
from subdyn.core import build_multimap, discrete_space
from subdyn.entropy import (
    cylinder_entropy,
    cylinder_entropy_bruteforce,
    edge_occupation_range,
    parry_measure,
    refined_partition_entropy,
    solve_submeasure_entropy,
    submeasure_entropy,
    top_entropy,
    variational_check,
    word_count,
)
from subdyn.errors import Infeasible, ReducibleGraph
from subdyn.markov import (
    MarkovMeasure,
    markov_entropy,
    orbit_graph,
    shift_from_adjacency,
    stationary_distribution,
)
from subdyn.submeasure import Submeasure, dirac, from_measure, scale, top
from subdyn.systems import battery, full_shift, golden_mean, picard

# log of the golden ratio
H_GOLDEN = 0.48121182505960347


def test_golden_mean_entropy():
    shift = orbit_graph(golden_mean().f)
    assert top_entropy(shift) == pytest.approx(H_GOLDEN, abs=1e-9)
    assert word_count(shift, 20) == count_paths([[1, 1], [1, 0]], 20) == 17711
    words = top_entropy(shift, "words", L=20)
    assert 0 <= words - H_GOLDEN <= 0.05
    with pytest.raises(ValueError):
        top_entropy(shift, "words")
    with pytest.raises(ValueError):
        top_entropy(shift, "other")


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_full_shift(k):
    assert top_entropy(orbit_graph(full_shift(k).f)) == pytest.approx(math.log(k), abs=1e-9)


def test_parry_golden():
    shift = orbit_graph(golden_mean().f)
    nu = parry_measure(shift)
    g = (1 + math.sqrt(5)) / 2
    assert nu.P[0, 0] == pytest.approx(1 / g, abs=1e-9)
    assert nu.pi[0] == pytest.approx(g * g / (1 + g * g), abs=1e-9)
    assert markov_entropy(nu) == pytest.approx(H_GOLDEN, abs=1e-9)


def test_parry_reducible():
    shift = shift_from_adjacency([[1, 1, 0], [1, 1, 0], [0, 0, 1]])
    with pytest.raises(ReducibleGraph):
        parry_measure(shift)
    nu = parry_measure(shift, allow_reducible=True)
    assert markov_entropy(nu) == pytest.approx(math.log(2), abs=1e-9)
    assert nu.pi[2] == 0.0


@pytest.mark.parametrize("system", [s for s in battery() if orbit_graph(s.f).is_irreducible()],
                         ids=lambda s: s.name)
def test_parry_matches_spectral(system):
    shift = orbit_graph(system.f)
    assert markov_entropy(parry_measure(shift)) == pytest.approx(top_entropy(shift), abs=1e-6)


def test_markov_measure_validation():
    shift = orbit_graph(golden_mean().f)
    with pytest.raises(ValueError):
        MarkovMeasure(shift, [0, 1], [[0, 1], [0, 1]])  # 2 -> 2 not an edge
    with pytest.raises(ValueError):
        MarkovMeasure(shift, [0.5, 0.5], [[0.5, 0.5], [1, 0]])  # not stationary
    P = np.array([[0.5, 0.5], [1.0, 0.0]])
    pi = stationary_distribution(P)
    assert np.allclose(pi, [2 / 3, 1 / 3])


def test_cylinder_entropy_against_enumeration():
    shift = orbit_graph(golden_mean().f)
    nu = parry_measure(shift)
    for L in (1, 2, 5, 9):
        ref = cylinder_entropy_enum(nu.pi, nu.P, L)
        assert cylinder_entropy(nu, L) == pytest.approx(ref, abs=1e-12)
        assert cylinder_entropy_bruteforce(nu, L) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_cylinder_entropy_monotone(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 5))
    A = np.ones((k, k))
    P = rng.random((k, k)) + 0.05
    P /= P.sum(axis=1, keepdims=True)
    nu = MarkovMeasure(shift_from_adjacency(A), stationary_distribution(P), P)
    vals = [cylinder_entropy(nu, L) for L in range(1, 25)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[-1] >= markov_entropy(nu) - 1e-12


@pytest.mark.parametrize("system", [s for s in battery() if orbit_graph(s.f).is_irreducible()],
                         ids=lambda s: s.name)
def test_submeasure_entropy_of_top(system):
    shift = orbit_graph(system.f)
    assert submeasure_entropy(system.f, top(system.f.source)) == pytest.approx(top_entropy(shift), abs=1e-3)


@pytest.mark.parametrize("c", [0.55, 0.6, 0.65, 0.7, 0.8])
def test_constrained_golden_mean(c):
    # the lift's marginal must lie below pi_1 <= c
    f = golden_mean().f
    X = f.source
    mu = Submeasure(X, [[c, 1 - c], [0, 1]])
    ref = golden_constrained_entropy(c)
    assert submeasure_entropy(f, mu) == pytest.approx(ref, abs=1e-3)


def test_constrained_frozen_value():
    f = golden_mean().f
    mu = Submeasure(f.source, [[0.6, 0.4], [0, 1]])
    assert submeasure_entropy(f, mu) == pytest.approx(0.38190850097688755, abs=1e-6)


def test_submeasure_entropy_errors():
    f = golden_mean().f
    with pytest.raises(ValueError):
        submeasure_entropy(f, scale(top(f.source), 2.0))
    X = discrete_space("pq")
    g = build_multimap(X, X, [[1], [1]])
    with pytest.raises(Infeasible) as exc:
        solve_submeasure_entropy(g, dirac(X, "p"))
    # no lift at all: the polytope is empty
    assert exc.value.max_mass is None


def test_picard_entropy_positive():
    f = picard(5).f
    h = submeasure_entropy(f, top(f.source))
    assert h == pytest.approx(top_entropy(orbit_graph(f)), abs=1e-3)
    assert h > 0


def test_refined_partition_entropy():
    f = full_shift(2).f
    mu = top(f.source)
    vertex = refined_partition_entropy(f, mu, [[0], [1]])
    assert vertex == pytest.approx(math.log(2), abs=1e-3)
    coarse = refined_partition_entropy(f, mu, [[0, 1]])
    assert coarse == pytest.approx(0.0, abs=1e-9)
    assert refined_partition_entropy(f, mu, [[0]]) <= vertex
    with pytest.raises(ValueError):
        refined_partition_entropy(f, mu, [[0], [0, 1]])
    with pytest.raises(ValueError):
        refined_partition_entropy(f, mu, [[0], [1]], L=1)


def test_edge_occupation_range_cycle():
    X = discrete_space("ab")
    f = build_multimap(X, X, [[1], [0]])
    edges, lo, hi = edge_occupation_range(f, from_measure(X, [0.5, 0.5]))
    assert np.allclose(lo, hi) and np.allclose(lo, 0.5)
    assert len(edges) == 2


def test_variational_report():
    rep = variational_check(golden_mean().f)
    assert rep.passed and rep.gap <= 1e-3
    assert rep.h_top_words[20] - rep.h_top_spectral <= 0.05
    assert any(e["kind"] == "uncertified_minimality" for e in rep.events)
    js = rep.to_json()
    assert set(js) >= {"h_top_spectral", "h_submeasure", "gap", "passed", "component_table"}
