import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subdyn.core import build_multimap, discrete_space
from subdyn.errors import PreconditionFailed
from subdyn.invariant import (
    cesaro_sequence,
    check_invariance,
    cycle_invariant_measures,
    find_cycles,
    inv_geq,
    inv_leq,
    lift_invariant,
    pushforward_defect,
)
from subdyn.markov import EdgePolytope, orbit_graph
from subdyn.submeasure import (
    Submeasure,
    canonicalize,
    dirac,
    evaluate,
    from_measure,
    leq,
    norm,
    sup_combine,
    top,
    weak_distance,
)
from subdyn.systems import picard, random_multimap, random_submeasure
from subdyn.transfer import pushforward


def _two_cycle_with_tail():
    # a -> b -> c -> b, d -> d
    X = discrete_space("abcd")
    return build_multimap(X, X, [[1], [2], [1], [3]])


def test_find_cycles():
    f = _two_cycle_with_tail()
    assert find_cycles(f) == [[1, 2], [3]]
    ms = cycle_invariant_measures(f)
    assert [list(m.generators[0]) for m in ms] == [[0, 0.5, 0.5, 0], [0, 0, 0, 1]]
    for m in ms:
        assert check_invariance(f, m).status == "invariant"


def test_check_invariance_statuses():
    f = _two_cycle_with_tail()
    X = f.source
    assert check_invariance(f, dirac(X, "d")).status == "invariant"
    assert check_invariance(f, dirac(X, "a")).status == "none"
    mu = sup_combine(dirac(X, "a"), dirac(X, "b"), dirac(X, "c"))
    assert check_invariance(f, mu).status == "subinvariant"


def test_pushforward_defect_is_weak_distance():
    f = _two_cycle_with_tail()
    mu = sup_combine(dirac(f.source, "a"), dirac(f.source, "d", 0.5))
    assert pushforward_defect(f, mu) == pytest.approx(weak_distance(pushforward(f, mu), mu), abs=1e-12)


def test_cesaro_period_two():
    f = _two_cycle_with_tail()
    res = cesaro_sequence(f, dirac(f.source, "b"), n_max=10)
    assert res.period == 2 and res.preperiod == 0
    assert np.allclose(res.terminal.generators, [[0, 0.5, 0.5, 0]])
    assert len(res.trace) == 10
    assert res.trace_csv().splitlines()[0] == "step,generator_count,mass,defect,pruned"
    # the running averages approach the limit
    assert weak_distance(res.iterates[-1], res.terminal) <= 1e-12


def test_cesaro_prunes_and_logs():
    P = picard(5).f
    mu0 = sup_combine(dirac(P.source, 0), dirac(P.source, 2, 0.5))
    res = cesaro_sequence(P, mu0, n_max=8, prune_cap=2)
    assert any(e["kind"] == "prune" for e in res.events)
    assert any(row["pruned"] for row in res.trace)
    with pytest.raises(ValueError):
        cesaro_sequence(P, Submeasure(P.source, np.zeros(5)))


def test_inv_leq_and_geq_preconditions():
    f = _two_cycle_with_tail()
    X = f.source
    with pytest.raises(PreconditionFailed) as exc:
        inv_leq(f, dirac(X, "a"))
    assert exc.value.witness is not None
    with pytest.raises(PreconditionFailed):
        inv_geq(f, dirac(X, "a"))


def test_inv_leq_from_top():
    f = _two_cycle_with_tail()
    res = inv_leq(f, top(f.source))
    # the tail point a drops out
    assert evaluate(res, [1, 0, 0, 0]) == 0.0
    assert check_invariance(f, res).status == "invariant"


def test_picard_top_is_invariant():
    P = picard(6).f
    assert pushforward(P, top(P.source)).key() == top(P.source).key()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000))
def test_invariant_constructions_random(seed):
    rng = np.random.default_rng(seed)
    f, _, _ = random_multimap(rng)
    X = f.source
    mu0 = random_submeasure(rng, X, max_generators=2)
    res = cesaro_sequence(f, mu0, n_max=8)
    assert leq(res.terminal, pushforward(f, res.terminal))
    inv = inv_leq(f, top(X))
    assert check_invariance(f, inv).status == "invariant"
    for c in cycle_invariant_measures(f):
        assert leq(c, inv)
    seed_mu = sup_combine(*cycle_invariant_measures(f)) if cycle_invariant_measures(f) else None
    if seed_mu is not None:
        up = inv_geq(f, seed_mu)
        assert check_invariance(f, up).status == "invariant"
        assert leq(seed_mu, up)


def test_lift_of_cycle_measure_is_unique():
    f = _two_cycle_with_tail()
    for c in cycle_invariant_measures(f):
        lift = lift_invariant(f, c)
        assert lift.mass == pytest.approx(1.0) and not lift.mass_deficit
        assert lift.entropy == pytest.approx(0.0, abs=1e-12)
        poly = EdgePolytope(orbit_graph(f), c.generators)
        lo, hi = poly.occupation_range(1.0)
        assert np.allclose(lo, hi, atol=1e-9)


def test_lift_mass_deficit():
    # p -> q -> r -> r, s -> s; mu = sup(delta_p, 0.5 delta_s) is not invariant
    X = discrete_space("pqrs")
    f = build_multimap(X, X, [[1], [2], [2], [3]])
    mu = sup_combine(dirac(X, "p"), dirac(X, "s", 0.5))
    lift = lift_invariant(f, mu)
    assert lift.mass == pytest.approx(0.5)
    assert lift.mass_deficit
    assert lift_invariant(f, dirac(X, "p")) is None


def test_lift_of_invariant_has_full_mass():
    P = picard(4).f
    lift = lift_invariant(P, top(P.source))
    assert lift.mass == pytest.approx(norm(top(P.source)))
    assert not lift.mass_deficit
    assert lift.entropy > 0
    assert canonicalize(from_measure(P.source, lift.markov.pi)).mass == pytest.approx(1.0)
