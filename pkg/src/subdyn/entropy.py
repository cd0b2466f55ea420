"""Topological, Markov, partition and submeasure entropies on orbit shifts."""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .errors import Infeasible, ReducibleGraph, SelectionExplosion
from .invariant import cycle_invariant_measures, inv_geq
from .markov import (
    EdgePolytope,
    MarkovMeasure,
    OrbitShift,
    markov_entropy,
    orbit_graph,
    shift_from_adjacency,
    stationary_distribution,
)
from .optim import power_iteration, spectral_radius
from .submeasure import canonicalize, from_measure, norm, sup_combine, top

__all__ = [
    "MarkovMeasure",
    "OrbitShift",
    "markov_entropy",
    "orbit_graph",
    "shift_from_adjacency",
    "stationary_distribution",
    "top_entropy",
    "word_count",
    "parry_measure",
    "cylinder_entropy",
    "cylinder_entropy_bruteforce",
    "submeasure_entropy",
    "solve_submeasure_entropy",
    "refined_partition_entropy",
    "edge_occupation_range",
    "variational_check",
]


def word_count(shift, L):
    """Number of admissible paths visiting ``L`` vertices, in exact integers."""
    if L < 1:
        raise ValueError("L must be at least 1")
    succ = [np.flatnonzero(row).tolist() for row in shift.adjacency]
    counts = [1] * shift.n
    for _ in range(L - 1):
        counts = [sum(counts[j] for j in succ[i]) for i in range(shift.n)]
    return sum(counts)


def top_entropy(shift, mode="spectral", L=None, tol=1e-12):
    """``log`` of the spectral radius, or ``log(N_L)/L`` in words mode."""
    if mode == "spectral":
        rho = spectral_radius(shift.adjacency, tol=tol)
        return math.log(rho) if rho > 0 else 0.0
    if mode == "words":
        if L is None:
            raise ValueError("words mode needs L")
        return math.log(word_count(shift, L)) / L
    raise ValueError(f"unknown mode {mode!r}")


def _parry_on(shift, comp, tol):
    A = shift.adjacency[np.ix_(comp, comp)].astype(float)
    lam, r = power_iteration(A, tol=tol)
    _, l = power_iteration(A.T, tol=tol)
    P = A * r[None, :] / (lam * r[:, None])
    P /= P.sum(axis=1, keepdims=True)
    pi = l * r
    pi /= pi.sum()
    return lam, pi, P


def parry_measure(shift, allow_reducible=False, tol=1e-13):
    """Maximal-entropy Markov measure ``P_ij = A_ij r_j / (lambda r_i)``, ``pi ~ l r``.

    On a reducible shift the measure lives on the component of largest
    spectral radius (first in label order on ties); this needs
    ``allow_reducible=True``.
    """
    comps = [c for c in shift.components if shift.adjacency[np.ix_(c, c)].any()]
    if len(shift.components) > 1 and not allow_reducible:
        raise ReducibleGraph(f"shift has {len(shift.components)} strong components")
    best = None
    for comp in comps:
        lam, pi_c, P_c = _parry_on(shift, list(comp), tol)
        if best is None or lam > best[0] + 1e-12:
            best = (lam, comp, pi_c, P_c)
    _, comp, pi_c, P_c = best
    n = shift.n
    pi = np.zeros(n)
    pi[list(comp)] = pi_c
    adj = shift.adjacency.astype(float)
    P = adj / adj.sum(axis=1, keepdims=True)
    P[np.ix_(comp, comp)] = P_c
    for i in comp:
        P[i, [j for j in range(n) if j not in comp]] = 0.0
    return MarkovMeasure(shift, pi, P, tol=1e-10)


def _entropy_bits(p):
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def cylinder_entropy(nu, L):
    """Entropy of the length-``L`` cylinder law divided by ``L``.

    For a stationary Markov measure the chain rule gives
    ``H(pi) + (L - 1) h`` for the cylinder entropy.
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    m = nu.mass
    pi = nu.pi / m
    h = markov_entropy(nu) / m
    return (_entropy_bits(pi) + (L - 1) * h) / L


def cylinder_entropy_bruteforce(nu, L):
    """The same quantity by enumerating cylinders (exponential in ``L``)."""
    m = nu.mass
    probs = {(i,): p / m for i, p in enumerate(nu.pi) if p > 0}
    for _ in range(L - 1):
        nxt = {}
        for word, p in probs.items():
            row = nu.P[word[-1]]
            for j in np.flatnonzero(row > 0):
                nxt[word + (int(j),)] = p * row[j]
        probs = nxt
    return _entropy_bits(np.array(list(probs.values()))) / L


@dataclass
class EntropySolution:
    value: float
    markov: MarkovMeasure
    gap: float
    weights: np.ndarray
    polytope: EdgePolytope = field(repr=False)
    x: np.ndarray = field(repr=False)


def solve_submeasure_entropy(f, mu, tol=1e-9, shift=None):
    """Maximize Markov entropy over stationary lifts whose marginal lies in the hull of ``mu``.

    Raises
    ------
    Infeasible
        When no lift reaches mass 1; ``max_mass`` carries the largest mass
        that is reachable (``None`` if the polytope is empty).
    """
    if abs(norm(mu) - 1.0) > max(tol, 1e-9):
        raise ValueError(f"submeasure must have norm 1, got {norm(mu)}")
    shift = orbit_graph(f) if shift is None else shift
    poly = EdgePolytope(shift, canonicalize(mu).generators)
    best = poly.max_mass()
    if best is None or best < 1.0 - 1e-9:
        raise Infeasible("no stationary Markov lift of mass 1 has a dominated marginal",
                         max_mass=best)
    res = poly.maximize_entropy(1.0, tol=tol)
    nu = MarkovMeasure.from_occupation(shift, poly.occupation(res.x))
    return EntropySolution(res.value, nu, res.gap, res.x[poly.n_edges:], poly, res.x)


def submeasure_entropy(f, mu, tol=1e-9):
    return solve_submeasure_entropy(f, mu, tol).value


def _partition_bound(Q, blocks_of, L):
    """``H(Y_L | Y_1..Y_{L-1}, X_1)`` for the block process of the Markov chain with occupation ``Q``."""
    pi = Q.sum(axis=1)
    mass = pi.sum()
    if mass <= 0:
        return 0.0
    pi = pi / mass
    with np.errstate(invalid="ignore", divide="ignore"):
        P = np.where(pi[:, None] > 0, Q / mass / np.where(pi > 0, pi, 1.0)[:, None], 0.0)
    n = len(pi)
    k = int(blocks_of.max()) + 1
    masks = np.array([blocks_of == b for b in range(k)], dtype=float)

    def joint_entropy(length):
        # forward vectors alpha over the current state, one per (x1, block word)
        total = 0.0
        for x in range(n):
            if pi[x] == 0:
                continue
            layer = [np.eye(n)[x] * pi[x]]
            for _ in range(length - 1):
                step = []
                for a in layer:
                    moved = a @ P
                    for b in range(k):
                        v = moved * masks[b]
                        if v.sum() > 1e-300:
                            step.append(v)
                layer = step
            p = np.array([a.sum() for a in layer])
            total += _entropy_bits(p)
        return total

    return max(joint_entropy(L) - joint_entropy(L - 1), 0.0)


def refined_partition_entropy(f, mu, alpha, L=8, tol=1e-9, polish=False):
    """Partition entropy of the entropy-maximizing dominated lift.

    ``alpha`` is a list of disjoint vertex blocks. The per-symbol entropy of
    the block process is bounded below by ``H(Y_L | Y_1..Y_{L-1}, X_1)``;
    that bound never exceeds the Markov entropy and equals it for the vertex
    partition. A lift whose marginal charges a point outside every block
    scores 0. With ``polish=True`` the bound is further increased by local
    search over the feasible polytope.
    """
    n = f.source.n
    blocks_of = np.full(n, -1)
    for b, block in enumerate(alpha):
        for x in block:
            x = f.source.index(x) if isinstance(x, str) else int(x)
            if blocks_of[x] != -1:
                raise ValueError("partition blocks overlap")
            blocks_of[x] = b
    sol = solve_submeasure_entropy(f, mu, tol)
    poly = sol.polytope

    def score(x):
        Q = poly.occupation(x)
        if np.any((Q.sum(axis=1) > 1e-12) & (blocks_of < 0)):
            return 0.0
        return _partition_bound(Q, np.where(blocks_of < 0, 0, blocks_of), L)

    if L < 2:
        raise ValueError("L must be at least 2")
    value = score(sol.x)
    if polish:
        A, b = poly.with_mass(1.0)
        res = minimize(lambda x: -score(x), sol.x, method="SLSQP",
                       constraints=[{"type": "eq", "fun": lambda x: A @ x - b}],
                       bounds=[(0, None)] * poly.n_vars, options={"maxiter": 50})
        if res.success and np.abs(A @ res.x - b).max() < 1e-8:
            value = max(value, score(np.clip(res.x, 0, None)))
    return value


def edge_occupation_range(f, mu, mass=None):
    """Min and max of each edge occupation among dominated stationary lifts."""
    shift = orbit_graph(f)
    poly = EdgePolytope(shift, canonicalize(mu).generators)
    lo, hi = poly.occupation_range(norm(mu) if mass is None else mass)
    return poly.edges, lo, hi


@dataclass
class VariationalReport:
    h_top_spectral: float
    h_top_words: dict
    h_submeasure: float
    gap: float
    passed: bool
    component_table: list
    mu_inv: Optional[object] = None
    events: list = field(default_factory=list)

    def to_json(self):
        return {
            "h_top_spectral": self.h_top_spectral,
            "h_top_words": {str(k): v for k, v in self.h_top_words.items()},
            "h_submeasure": self.h_submeasure,
            "gap": self.gap,
            "passed": self.passed,
            "component_table": self.component_table,
            "events": self.events,
        }


def variational_check(f, tol=1e-3, words_L=(8, 16, 20), cap=10_000):
    """Compare ``submeasure_entropy(f, mu_X)`` with ``h_top``."""
    shift = orbit_graph(f)
    h_top = top_entropy(shift)
    table = []
    for comp in shift.components:
        sub = shift.adjacency[np.ix_(comp, comp)]
        rho = spectral_radius(sub) if sub.any() else 0.0
        table.append({"vertices": [f.source.labels[i] for i in comp],
                      "spectral_radius": rho,
                      "entropy": math.log(rho) if rho > 0 else 0.0})
    sol = solve_submeasure_entropy(f, top(f.source), tol=1e-9)
    events = []
    seeds = list(cycle_invariant_measures(f))
    for comp in shift.components:
        sub = shift.adjacency[np.ix_(comp, comp)]
        if sub.any() and len(comp) > 1:
            _, pi_c, _ = _parry_on(shift, list(comp), 1e-13)
            w = np.zeros(f.source.n)
            w[list(comp)] = pi_c
            seeds.append(from_measure(f.source, w))
    mu_inv = None
    if seeds:
        try:
            mu_inv = inv_geq(f, sup_combine(*seeds), cap=cap)
            events.append({"kind": "uncertified_minimality", "generators": len(mu_inv)})
        except SelectionExplosion as exc:
            events.append({"kind": "cap_hit", "count": exc.count, "cap": exc.cap})
    gap = abs(sol.value - h_top)
    return VariationalReport(h_top, {L: top_entropy(shift, "words", L) for L in words_L},
                             sol.value, gap, gap <= tol, table, mu_inv, events)
