"""Orbit graphs of multimaps and stationary Markov measures on them.

Markov measures are parameterized by their edge occupation ``Q`` (the joint
law of two consecutive symbols). Rows sums of ``Q`` give the stationary
marginal, and stationarity is the linear condition rowsum = colsum.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .core import discrete_space
from .errors import DimensionMismatch, Infeasible
from .optim import maximize_concave_over_polytope, strong_components

TINY = 1e-300


@dataclass(frozen=True, eq=False)
class OrbitShift:
    space: object
    adjacency: np.ndarray
    components: tuple

    @property
    def n(self):
        return self.adjacency.shape[0]

    @property
    def edges(self):
        return [tuple(e) for e in np.argwhere(self.adjacency).tolist()]

    def is_irreducible(self):
        return len(self.components) == 1


def orbit_graph(f):
    """Vertex shift with an edge ``x -> y`` for every ``y`` in ``images(x)``."""
    if not f.is_self_map:
        raise DimensionMismatch("orbit graphs need a self-map")
    A = np.zeros((f.source.n, f.source.n), dtype=np.int64)
    for x, img in enumerate(f.images):
        A[x, list(img)] = 1
    A.setflags(write=False)
    return OrbitShift(f.source, A, tuple(tuple(c) for c in strong_components(A)))


def shift_from_adjacency(adjacency, labels=None):
    A = (np.asarray(adjacency) != 0).astype(np.int64)
    if np.any(A.sum(axis=1) == 0):
        raise ValueError("every vertex needs an outgoing edge")
    labels = [str(i) for i in range(len(A))] if labels is None else labels
    A.setflags(write=False)
    return OrbitShift(discrete_space(labels), A, tuple(tuple(c) for c in strong_components(A)))


class MarkovMeasure:
    """Stationary Markov measure: marginal ``pi`` and transition matrix ``P``."""

    def __init__(self, shift, pi, P, tol=1e-12):
        pi = np.asarray(pi, dtype=float)
        P = np.asarray(P, dtype=float)
        n = shift.n
        if pi.shape != (n,) or P.shape != (n, n):
            raise DimensionMismatch("pi and P must match the number of vertices")
        if np.any(pi < -tol) or np.any(P < -tol):
            raise ValueError("negative probabilities")
        if np.any((P > 0) & (shift.adjacency == 0)):
            raise ValueError("transition outside the graph edges")
        if np.abs(P.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("P is not row-stochastic")
        scale = max(1.0, float(np.abs(pi).max()))
        if np.abs(pi @ P - pi).max() > tol * scale * 10:
            raise ValueError("pi is not stationary for P")
        self.shift = shift
        self.pi = np.clip(pi, 0.0, None)
        self.P = np.clip(P, 0.0, None)

    @property
    def Q(self):
        return self.pi[:, None] * self.P

    @property
    def mass(self):
        return float(self.pi.sum())

    @classmethod
    def from_occupation(cls, shift, Q):
        """Markov measure with edge occupation ``Q``; empty rows move uniformly."""
        Q = np.clip(np.asarray(Q, dtype=float), 0.0, None)
        pi = Q.sum(axis=1)
        P = np.zeros_like(Q)
        adj = shift.adjacency.astype(float)
        for i in range(shift.n):
            if pi[i] > 0:
                P[i] = Q[i] / pi[i]
            else:
                P[i] = adj[i] / adj[i].sum()
        return cls(shift, pi, P, tol=1e-8)


def _closed_classes(P):
    A = (P > 0).astype(np.int8)
    comps = strong_components(A)
    label = np.empty(len(P), dtype=int)
    for c, comp in enumerate(comps):
        label[comp] = c
    closed = []
    for c, comp in enumerate(comps):
        out = np.flatnonzero(A[comp].any(axis=0))
        if np.all(label[out] == c):
            closed.append(comp)
    return closed


def stationary_distribution(P):
    """Average of the stationary laws of the closed classes of ``P``."""
    P = np.asarray(P, dtype=float)
    n = len(P)
    pi = np.zeros(n)
    classes = _closed_classes(P)
    for comp in classes:
        sub = P[np.ix_(comp, comp)]
        k = len(comp)
        M = np.vstack([sub.T - np.eye(k), np.ones((1, k))])
        rhs = np.zeros(k + 1)
        rhs[-1] = 1.0
        sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        pi[comp] = np.clip(sol, 0.0, None) / len(classes)
    return pi / pi.sum()


def markov_entropy(nu):
    """``-sum pi_i P_ij log P_ij``."""
    P = nu.P
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log(P), 0.0)
    return float(-(nu.pi[:, None] * terms).sum())


class EdgePolytope:
    """Stationary edge occupations whose marginal lies in a generator hull.

    Variables are ``(Q_e for each edge, lambda_k for each generator)`` with

    - ``rowsum(Q) = colsum(Q)`` (stationarity),
    - ``rowsum(Q) = G^T lambda``, ``sum(lambda) = 1``, ``lambda >= 0``,
    - optionally ``sum(Q) = mass``.
    """

    def __init__(self, shift, generators):
        self.shift = shift
        self.edges = shift.edges
        G = np.atleast_2d(np.asarray(generators, dtype=float))
        n, E, m = shift.n, len(self.edges), G.shape[0]
        self.G = G
        self.n_edges, self.n_vars = E, E + m
        row = np.zeros((n, E))
        col = np.zeros((n, E))
        for e, (i, j) in enumerate(self.edges):
            row[i, e] = 1.0
            col[j, e] = 1.0
        A = np.zeros((2 * n + 1, E + m))
        A[:n, :E] = row - col
        A[n:2 * n, :E] = row
        A[n:2 * n, E:] = -G.T
        A[2 * n, E:] = 1.0
        b = np.zeros(2 * n + 1)
        b[-1] = 1.0
        self.A_eq, self.b_eq = A, b
        self._row = row

    def with_mass(self, mass):
        A = np.vstack([self.A_eq, np.concatenate([np.ones(self.n_edges), np.zeros(self.n_vars - self.n_edges)])])
        return A, np.concatenate([self.b_eq, [mass]])

    def occupation(self, x):
        Q = np.zeros((self.shift.n, self.shift.n))
        for e, (i, j) in enumerate(self.edges):
            Q[i, j] = max(x[e], 0.0)
        return Q

    def max_mass(self):
        """Largest total occupation, or ``None`` when the polytope is empty."""
        c = np.concatenate([-np.ones(self.n_edges), np.zeros(self.n_vars - self.n_edges)])
        res = linprog(c, A_eq=self.A_eq, b_eq=self.b_eq, bounds=(0, None), method="highs")
        if res.status == 2:
            return None
        if res.status != 0:
            raise RuntimeError(f"mass LP failed: {res.message}")
        return float(-res.fun)

    def entropy(self, x):
        """Value and gradient of ``sum Q_ij log(pi_i / Q_ij)``."""
        q = x[:self.n_edges]
        pi = self._row @ q
        qe = np.maximum(q, TINY)
        pe = np.maximum(pi[[i for i, _ in self.edges]], TINY)
        logs = np.log(pe / qe)
        value = float(np.where(q > 0, q * logs, 0.0).sum())
        grad = np.zeros(self.n_vars)
        grad[:self.n_edges] = logs
        return value, grad

    def maximize_entropy(self, mass, tol=1e-9, max_iters=20_000):
        A, b = self.with_mass(mass)
        return maximize_concave_over_polytope(self.entropy, self.n_vars, A_eq=A, b_eq=b,
                                              bounds=(0, None), tol=tol, max_iters=max_iters,
                                              raise_on_stall=False)

    def occupation_range(self, mass):
        """Per-edge min and max of ``Q`` over the polytope at a given mass."""
        A, b = self.with_mass(mass)
        lo, hi = np.zeros(self.n_edges), np.zeros(self.n_edges)
        for e in range(self.n_edges):
            c = np.zeros(self.n_vars)
            c[e] = 1.0
            r1 = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
            r2 = linprog(-c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
            if r1.status != 0 or r2.status != 0:
                raise Infeasible("no stationary occupation at this mass")
            lo[e], hi[e] = r1.fun, -r2.fun
        return lo, hi
