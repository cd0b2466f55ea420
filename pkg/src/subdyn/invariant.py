"""Invariant submeasures: Cesaro averages, monotone iterations, cycle measures, lifts."""

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NoConvergence, PreconditionFailed
from .markov import EdgePolytope, MarkovMeasure, orbit_graph
from .core import omega_infinity
from .optim import DEFAULT_TOL
from .submeasure import (
    Submeasure,
    add,
    canonicalize,
    default_basis,
    evaluate_many,
    from_measure,
    leq,
    norm,
    scale,
    sup_combine,
    weak_distance,
)
from .transfer import DEFAULT_CAP, pullback_function, pushforward

STATUSES = ("invariant", "subinvariant", "superinvariant", "none")


def pushforward_defect(f, mu, basis=None):
    """``weak_distance(f_* mu, mu)`` computed lazily through pulled-back test functions."""
    B = default_basis(mu.space.n) if basis is None else np.atleast_2d(basis)
    pulled = np.array([pullback_function(f, phi) for phi in B])
    return float(np.abs(evaluate_many(mu, pulled) - evaluate_many(mu, B)).max())


def _prune(mu, cap):
    """Merge closest generator pairs into midpoints until at most ``cap`` remain."""
    G = [row for row in mu.generators]
    merged = 0
    while len(G) > cap:
        arr = np.array(G)
        d = np.abs(arr[:, None, :] - arr[None, :, :]).sum(axis=2)
        d[np.tril_indices(len(G))] = np.inf
        i, j = np.unravel_index(np.argmin(d), d.shape)
        mid = 0.5 * (G[i] + G[j])
        G = [g for k, g in enumerate(G) if k not in (i, j)]
        G.insert(i, mid)
        merged += 1
    return canonicalize(Submeasure(mu.space, np.array(G))), merged


@dataclass
class CesaroResult:
    iterates: list
    limit: Optional[Submeasure]
    preperiod: Optional[int]
    period: Optional[int]
    trace: list = field(default_factory=list)
    events: list = field(default_factory=list)

    @property
    def terminal(self):
        """The cluster point when the orbit closed up, else the last average."""
        return self.limit if self.limit is not None else self.iterates[-1]

    def trace_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "generator_count", "mass", "defect", "pruned"])
        for row in self.trace:
            w.writerow([row["step"], row["generator_count"], repr(row["mass"]),
                        repr(row["defect"]), str(row["pruned"]).lower()])
        return buf.getvalue()


def _capped_add(a, b, prune_cap, events, step):
    if a is None:
        return b, False
    total = add(a, b)
    if len(total) > prune_cap:
        total, merged = _prune(total, prune_cap)
        events.append({"kind": "prune", "step": step, "merged": merged})
        return total, True
    return total, False


def _closed_orbit(f, mu0, horizon, cap):
    """Push ``mu0`` until a canonical iterate repeats or ``horizon`` pushes are spent."""
    orbit = [mu0]
    seen = {mu0.key(): 0}
    while len(orbit) <= horizon:
        nxt = pushforward(f, orbit[-1], cap=cap)
        key = nxt.key()
        if key in seen:
            return orbit, seen[key], len(orbit) - seen[key]
        seen[key] = len(orbit)
        orbit.append(nxt)
    return orbit, None, None


def cesaro_sequence(f, mu0, n_max=64, prune_cap=64, cap=DEFAULT_CAP):
    """Cesaro averages ``mu_n = (1/n) sum_{j<n} (f_*)^j mu0`` for ``n <= n_max``.

    The orbit ``nu_j = (f_*)^j mu0`` of canonical submeasures is eventually
    periodic on a finite space. With preperiod ``t`` and period ``p`` the sum
    of the first ``n = t + q p + r`` iterates is the Minkowski sum of the
    preperiod part, ``q`` times one full period and the first ``r`` terms of
    the next one, because ``q`` Minkowski copies of a convex hull equal its
    ``q``-fold dilate. The averages converge to the mean over one period,
    returned as ``limit``; it satisfies ``f_*(limit) >= limit``.

    Partial sums are capped at ``prune_cap`` generators; every merge is
    logged in ``events`` and flagged in the trace.
    """
    if norm(mu0) == 0:
        raise ValueError("mu0 must be nonzero")
    mu0 = canonicalize(mu0)
    orbit, preperiod, period = _closed_orbit(f, mu0, max(n_max, 1) * 4, cap)
    events, trace, iterates = [], [], []
    if period is None:
        events.append({"kind": "orbit_not_closed", "steps": len(orbit)})

    # prefix sums of the preperiod and of partial periods, built on demand
    head = [None]
    head_pruned = [False]
    for j in range(len(orbit) if period is None else preperiod):
        total, pruned = _capped_add(head[-1], orbit[j], prune_cap, events, j + 1)
        head.append(total)
        head_pruned.append(pruned or head_pruned[-1])
    partial = [None]
    cycle_sum = None
    if period is not None:
        for j in range(period):
            total, _ = _capped_add(partial[-1], orbit[preperiod + j], prune_cap, events, "period")
            partial.append(total)
        cycle_sum = partial[-1]

    for n in range(1, n_max + 1):
        if period is None or n <= preperiod:
            if n >= len(head):
                break
            total, pruned = head[n], head_pruned[n]
        else:
            q, r = divmod(n - preperiod, period)
            total, pruned = head[preperiod], head_pruned[preperiod]
            total, p1 = _capped_add(total, scale(cycle_sum, q), prune_cap, events, n) if q else (total, False)
            total, p2 = _capped_add(total, partial[r], prune_cap, events, n) if r else (total, False)
            pruned = pruned or p1 or p2
        mu_n = scale(total, 1.0 / n)
        iterates.append(mu_n)
        trace.append({"step": n, "generator_count": len(mu_n), "mass": norm(mu_n),
                      "defect": pushforward_defect(f, mu_n), "pruned": pruned})
    limit = scale(cycle_sum, 1.0 / period) if period is not None else None
    return CesaroResult(iterates, limit, preperiod, period, trace, events)


@dataclass
class InvarianceReport:
    status: str
    defect: float
    witness: Optional[np.ndarray] = None
    pushed: Optional[Submeasure] = None


def check_invariance(f, mu, tol=DEFAULT_TOL, cap=DEFAULT_CAP):
    """Classify ``mu`` as invariant, subinvariant (``f_* mu <= mu``), superinvariant or none."""
    pushed = pushforward(f, mu, cap=cap)
    sub = leq(pushed, mu, tol)
    sup = leq(mu, pushed, tol)
    if sub and sup:
        status = "invariant"
    elif sub:
        status = "subinvariant"
    elif sup:
        status = "superinvariant"
    else:
        status = "none"
    if status == "subinvariant" and len(canonicalize(mu)) == 1:
        # a measure that dominates its pushforward equals it: masses agree
        raise AssertionError("subinvariant single measure that is not invariant")
    witness = sup.witness if not sup else sub.witness
    return InvarianceReport(status, weak_distance(pushed, mu), witness, pushed)


def inv_leq(f, mu0, tol=DEFAULT_TOL, n_max=10_000, cap=DEFAULT_CAP):
    """Largest invariant submeasure below a subinvariant ``mu0``: the limit of ``(f_*)^k mu0``."""
    first = pushforward(f, mu0, cap=cap)
    pre = leq(first, mu0, tol)
    if not pre:
        raise PreconditionFailed("f_*(mu0) <= mu0 fails", witness=pre.witness)
    mu = canonicalize(mu0)
    nxt = first
    for _ in range(n_max):
        if weak_distance(nxt, mu) <= tol and leq(mu, nxt, tol):
            return nxt
        mu, nxt = nxt, pushforward(f, nxt, cap=cap)
    raise NoConvergence(f"inv_leq did not settle within {n_max} steps")


def inv_geq(f, mu0, tol=DEFAULT_TOL, n_max=10_000, cap=DEFAULT_CAP):
    """Invariant candidate above a superinvariant ``mu0`` by sup-accumulation.

    Iterates ``mu_{k+1} = sup(mu_k, f_* mu_k)``. The result is invariant and
    dominates ``mu0``; minimality among such submeasures is not certified.
    """
    mu = canonicalize(mu0)
    pushed = pushforward(f, mu, cap=cap)
    pre = leq(mu, pushed, tol)
    if not pre:
        raise PreconditionFailed("mu0 <= f_*(mu0) fails", witness=pre.witness)
    for _ in range(n_max):
        if leq(pushed, mu, tol):
            return mu
        mu = sup_combine(mu, pushed)
        pushed = pushforward(f, mu, cap=cap)
    raise NoConvergence(f"inv_geq did not settle within {n_max} steps")


def find_cycles(f, points=None):
    """Cycles of the single-valued part of ``f`` inside ``points``, each starting at its least point."""
    pts = sorted(f.open_domain if points is None else points)
    allowed = set(pts)
    state = {}
    cycles = []
    for start in pts:
        path = []
        x = start
        while x in allowed and x not in state:
            state[x] = start
            path.append(x)
            x = f.value(x)
        if x in allowed and state.get(x) == start:
            cyc = path[path.index(x):]
            k = cyc.index(min(cyc))
            cycles.append(cyc[k:] + cyc[:k])
    return sorted(cycles)


def cycle_invariant_measures(f):
    """Uniform measures on the cycles that never meet the indeterminacy set."""
    out = []
    for cyc in find_cycles(f, omega_infinity(f)):
        w = np.zeros(f.source.n)
        w[cyc] = 1.0 / len(cyc)
        out.append(from_measure(f.source, w))
    return out


@dataclass
class LiftResult:
    markov: MarkovMeasure
    mass: float
    mass_deficit: bool
    entropy: float
    gap: float


def lift_invariant(f, mu, tol=DEFAULT_TOL):
    """Maximal-mass, then maximal-entropy, stationary Markov lift with marginal in the hull of ``mu``.

    Returns ``None`` when no stationary occupation with positive mass has its
    marginal in the hull. ``mass_deficit`` flags a lift lighter than ``norm(mu)``.
    """
    shift = orbit_graph(f)
    poly = EdgePolytope(shift, canonicalize(mu).generators)
    best = poly.max_mass()
    if best is None or best <= tol:
        return None
    res = poly.maximize_entropy(best, tol=tol)
    nu = MarkovMeasure.from_occupation(shift, poly.occupation(res.x))
    deficit = norm(mu) - best > 1e-7
    return LiftResult(nu, best, bool(deficit), res.value, res.gap)
