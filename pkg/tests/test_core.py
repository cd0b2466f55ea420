import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subdyn.core import (
    build_multimap,
    build_space,
    compose_multimaps,
    derive_cluster_multimap,
    discrete_space,
    identity_map,
    neighborhood,
    omega_infinity,
    relation_composition,
)
from subdyn.errors import (
    DegreeViolation,
    DimensionMismatch,
    DomainNotDense,
    EmptyImage,
    MetricViolation,
    SparseCompositionDomain,
)
from subdyn.systems import cremona, line_space, picard


def test_two_point_space():
    X = build_space(["a", "b"], [[0, 1], [1, 0]])
    assert X.n == 2 and X.index("b") == 1


def test_triangle_violation_names_triple():
    d = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
    with pytest.raises(MetricViolation) as exc:
        build_space(["0", "1", "2"], d)
    assert exc.value.points == (0, 1, 2)


def test_other_metric_violations():
    with pytest.raises(MetricViolation):
        build_space(["a", "b"], [[0, 1], [2, 0]])
    with pytest.raises(MetricViolation):
        build_space(["a", "b"], [[1, 1], [1, 0]])
    with pytest.raises(MetricViolation):
        build_space(["a", "b"], [[0, 0], [0, 0]])
    with pytest.raises(DimensionMismatch):
        build_space(["a", "b"], [[0]])


def test_chordal_circle_is_metric():
    ang = np.arange(4) * math.pi / 2
    pts = np.c_[np.cos(ang), np.sin(ang)]
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    for i in range(4):
        for j in range(4):
            for k in range(4):
                assert d[i, k] <= d[i, j] + d[j, k] + 1e-12
    X = build_space("abcd", d)
    assert X.dist[0, 2] == pytest.approx(2.0)
    assert X.dist[0, 1] == pytest.approx(math.sqrt(2))


def test_neighborhood_examples():
    X = line_space(3)
    assert neighborhood(X, 1, 0.0) == {1}
    assert neighborhood(X, 0, 10.0) == {0, 1, 2}
    assert neighborhood(X, 1, 1.5) == {0, 1, 2}
    with pytest.raises(ValueError):
        neighborhood(X, 0, -1)


@given(st.floats(0, 5), st.floats(0, 5), st.integers(0, 5))
def test_neighborhood_monotone(d1, d2, x):
    X = line_space(6, spacing=0.7)
    lo, hi = sorted((d1, d2))
    assert x in neighborhood(X, x, lo)
    assert neighborhood(X, x, lo) <= neighborhood(X, x, hi)


def test_multimap_domains():
    X = line_space(3)
    f = identity_map(X)
    assert f.open_domain == {0, 1, 2} and f.indeterminacy == frozenset()
    J = cremona().f
    e0 = J.source.index("e0")
    assert e0 in J.indeterminacy
    assert J.image_labels()["e0"] == ["e1", "e2", "s0"]
    P = picard(5).f
    assert P.indeterminacy == {0}
    assert P.images[0] == frozenset(range(5))
    for m in (f, J, P):
        assert m.open_domain | m.indeterminacy == set(range(m.source.n))
        assert not (m.open_domain & m.indeterminacy)


def test_empty_image_and_degree():
    X = discrete_space("abcd")
    with pytest.raises(EmptyImage):
        build_multimap(X, X, [[0], [], [1], [2]])
    with pytest.raises(EmptyImage):
        build_multimap(X, X, {"a": ["a"]})
    doubling = build_multimap(X, X, [[0], [1], [0], [1]], degree=2)
    assert doubling.degree == 2
    with pytest.raises(DegreeViolation) as exc:
        build_multimap(X, X, [[0], [0], [0], [1]], degree=2)
    assert exc.value.point == "a" and exc.value.count == 3


def test_cluster_derivation():
    X = line_space(3)
    f = derive_cluster_multimap(X, X, {0: 0, 1: 1, 2: 2}, 0.0)
    assert f.indeterminacy == frozenset()
    # point 1 excluded; its 1-ball meets 0 and 2, whose images differ
    g = derive_cluster_multimap(X, X, {0: 0, 2: 1}, 1.0)
    assert g.images[1] == {0, 1}
    with pytest.raises(DomainNotDense):
        derive_cluster_multimap(X, X, {0: 0, 2: 1}, 0.5)


@given(st.floats(1.0, 3.0), st.floats(1.0, 3.0))
def test_cluster_images_nested_in_delta(d1, d2):
    X = line_space(5)
    fine = {0: 4, 2: 1, 4: 0}
    lo, hi = sorted((d1, d2))
    a = derive_cluster_multimap(X, X, fine, lo)
    b = derive_cluster_multimap(X, X, fine, hi)
    assert all(a.images[x] <= b.images[x] for x in range(5))


def test_composition_continuous_case():
    X = discrete_space("abc")
    f = build_multimap(X, X, [[1], [2], [2]])
    g = build_multimap(X, X, [[0], [0], [1]])
    h = compose_multimaps(f, g)
    assert h.images == tuple(frozenset({g.value(f.value(x))}) for x in range(3))
    assert relation_composition(f, g).images == h.images


def test_composition_cremona():
    s = cremona()
    h = compose_multimaps(s.f, s.f, explicit_composite=s.composite)
    e0 = s.f.source.index("e0")
    assert h.images[e0] == {e0}
    rel = relation_composition(s.f, s.f)
    assert rel.images[e0] > {e0}
    assert {s.f.source.labels[y] for y in rel.images[e0]} == {"e0", "e1", "e2", "s1", "s2"}


def test_composition_cluster_five_points():
    # line 0..4; f undefined at 2, g undefined at 3
    X = line_space(5)
    f = derive_cluster_multimap(X, X, {0: 1, 1: 1, 3: 3, 4: 4}, 1.0)
    g = derive_cluster_multimap(X, X, {0: 0, 1: 0, 2: 2, 4: 4}, 1.0)
    assert f.images[2] == {1, 3} and g.images[3] == {2, 4}
    h = compose_multimaps(f, g, delta=1.0)
    # Omega = {0, 1, 4}; hand composite: 0->0, 1->0, 4->4; 2 sees {1}; 3 sees {4}
    assert [sorted(i) for i in h.images] == [[0], [0], [0], [4], [4]]
    rel = relation_composition(f, g)
    assert all(h.images[x] <= rel.images[x] for x in range(5))
    with pytest.raises(SparseCompositionDomain):
        compose_multimaps(f, g, delta=0.5)


def test_omega_infinity():
    X = discrete_space("123")
    f = build_multimap(X, X, [[1], [2], [2]])
    assert omega_infinity(f) == {0, 1, 2}
    J = cremona().f
    om = {J.source.labels[x] for x in omega_infinity(J)}
    assert om == {"g0", "g1", "g2"}


@settings(max_examples=50)
@given(st.integers(0, 10_000))
def test_relation_contains_composite_random(seed):
    from subdyn.systems import random_composable
    rng = np.random.default_rng(seed)
    f, g, h, _ = random_composable(rng)
    rel = relation_composition(f, g)
    assert all(h.images[x] <= rel.images[x] for x in range(f.source.n))
