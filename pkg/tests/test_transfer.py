import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import classical_pushforward, selection_max
from subdyn.core import build_multimap, discrete_space, relation_composition
from subdyn.errors import BadFiberSpec, DimensionMismatch, NotAMeasure, SelectionExplosion
from subdyn.submeasure import Submeasure, dirac, evaluate, from_measure, leq, top
from subdyn.systems import (
    blowup_base,
    cremona,
    line_space,
    picard,
    random_function,
    random_multimap,
    random_submeasure,
)
from subdyn.transfer import (
    blowup_construct,
    blowup_decompose,
    covering_pushforward_function,
    fiber_max,
    pullback_function,
    pullback_submeasure,
    pushforward,
    pushforward_value,
)


def test_pullback_function_takes_max_over_image():
    P = picard(4).f
    phi = np.array([0.1, -2.0, 3.0, 0.5])
    out = pullback_function(P, phi)
    assert out[0] == 3.0
    assert list(out[1:]) == [phi[2], phi[3], phi[0]]
    with pytest.raises(DimensionMismatch):
        pullback_function(P, phi[:2])


def test_pushforward_of_indeterminate_dirac_is_image_top():
    P = picard(5).f
    pushed = pushforward(P, dirac(P.source, 0))
    assert pushed.key() == top(P.source).key()


def test_selection_cap():
    X = discrete_space("abcdef")
    f = build_multimap(X, X, [[0, 1], [2, 3], [4, 5], [0, 2], [1, 3], [0]])
    mu = from_measure(X, [1, 1, 1, 1, 1, 0])
    with pytest.raises(SelectionExplosion) as exc:
        pushforward(f, mu, cap=20)
    assert exc.value.count == 32
    # lazy evaluation still works
    phi = np.arange(6.0)
    assert pushforward_value(f, mu, phi) == selection_max(mu.generators[0], f.images, phi)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_pushforward_matches_selection_oracle(seed):
    rng = np.random.default_rng(seed)
    f, _, _ = random_multimap(rng)
    mu = random_submeasure(rng, f.source)
    pushed = pushforward(f, mu)
    for _ in range(5):
        phi = random_function(rng, f.target.n)
        ref = max(selection_max(g, f.images, phi) for g in mu.generators)
        assert evaluate(pushed, phi) == pytest.approx(ref, abs=1e-12)
        assert pushforward_value(f, mu, phi) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_pushforward_classical_off_indeterminacy(seed):
    rng = np.random.default_rng(seed)
    f, _, _ = random_multimap(rng)
    dom = sorted(f.open_domain)
    w = np.zeros(f.source.n)
    w[dom] = rng.random(len(dom))
    pushed = pushforward(f, from_measure(f.source, w))
    table = {x: f.value(x) for x in dom}
    ref = classical_pushforward([w[x] if x in table else 0 for x in range(f.source.n)],
                                {x: table.get(x, 0) for x in range(f.source.n)}, f.target.n)
    assert len(pushed) == 1
    assert np.abs(pushed.generators[0] - ref).max() <= 1e-12


def test_cremona_strict_composition():
    s = cremona()
    X = s.f.source
    d = dirac(X, "e0")
    twice = pushforward(s.f, pushforward(s.f, d))
    once = pushforward(s.composite, d)
    assert once.key() == d.key()
    assert leq(once, twice)
    res = leq(twice, once)
    assert not res
    assert evaluate(twice, res.witness) - evaluate(once, res.witness) >= 1 - 1e-9


def test_covering_pushforward_and_pullback():
    # doubling map on 4 points onto the two even points, target line
    X = line_space(4)
    f = build_multimap(X, X, [[0], [2], [0], [2]], degree=2)
    phi = np.array([1.0, 2.0, 3.0, 4.0])
    g = covering_pushforward_function(f, phi, delta=1.0)
    # y=0 gets 1+3, y=2 gets 2+4, odd points take the max of nearby sums
    assert list(g) == [4.0, 6.0, 6.0, 6.0]
    nu = top(X)
    pb = pullback_submeasure(f, nu, delta=1.0)
    assert pb.mass == pytest.approx(2 * nu.mass)
    for _ in range(3):
        psi = np.random.default_rng(1).standard_normal(4)
        assert evaluate(pb, psi) == pytest.approx(
            evaluate(nu, covering_pushforward_function(f, psi, 1.0)), abs=1e-12)


def test_blowup_construction():
    base = blowup_base(4)
    model = blowup_construct(base, ["b1", "b3"], {"b1": 2, "b3": 3})
    assert model.total.n == 2 + 2 + 3
    assert len(model.fibers[base.index("b1")]) == 2
    Z = model.total
    for a, fib in model.fibers.items():
        for z in fib:
            assert model.projection.images[z] == {a}
        assert model.inverse.images[a] == frozenset(fib)
    assert model.inverse.indeterminacy == set(model.fibers)
    with pytest.raises(BadFiberSpec):
        blowup_construct(base, ["b1"], 0)
    with pytest.raises(BadFiberSpec):
        blowup_construct(base, ["b1"], 2, eps_fiber=5.0)
    assert Z.dist.min() == 0.0


@pytest.mark.parametrize("k", range(1, 11))
def test_center_dirac_pushes_to_fiber_max(k):
    base = blowup_base(4)
    model = blowup_construct(base, ["b1"], k)
    a = base.index("b1")
    pushed = pushforward(model.inverse, dirac(base, a))
    rng = np.random.default_rng(k)
    for _ in range(10):
        phi = rng.standard_normal(model.total.n)
        assert abs(evaluate(pushed, phi) - fiber_max(model, phi)[a]) <= 1e-12


def test_decomposition_rejects_submeasure():
    base = blowup_base(4)
    model = blowup_construct(base, ["b1"], 2)
    mu = Submeasure(base, [[1, 0, 0, 0], [0, 0, 0, 1]])
    with pytest.raises(NotAMeasure):
        blowup_decompose(model, mu, np.zeros(model.total.n))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_decomposition_two_centers(seed):
    rng = np.random.default_rng(seed)
    base = blowup_base(4)
    model = blowup_construct(base, ["b0", "b2"], [int(rng.integers(1, 5)), int(rng.integers(1, 5))])
    w = rng.random(4)
    phi = rng.standard_normal(model.total.n)
    dec = blowup_decompose(model, w, phi)
    oracle = selection_max(w, model.inverse.images, phi)
    assert dec.residual <= 1e-12
    assert abs(dec.lhs - oracle) <= 1e-12


def test_fiber_self_map_pushes_to_fiber_top():
    base = blowup_base(4)
    model = blowup_construct(base, ["b1"], 3)
    g = relation_composition(model.projection, model.inverse)
    fib = model.fibers[base.index("b1")]
    pushed = pushforward(g, dirac(model.total, fib[0]))
    phi = np.arange(model.total.n, dtype=float)
    assert evaluate(pushed, phi) == max(phi[list(fib)])
