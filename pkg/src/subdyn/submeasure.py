"""Positive strong submeasures stored as finite generator lists.

A submeasure is the pointwise maximum of finitely many positive measures,
``mu(phi) = max_k  G[k] . phi``. Two generator lists describe the same
submeasure exactly when their convex hulls coincide, so the canonical form
keeps only hull vertices.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import neighborhood
from .errors import DimensionMismatch, DomainNotDense, NegativeScalar
from .optim import DEFAULT_TOL, hull_membership

KEY_DECIMALS = 12


class Submeasure:
    """Sup of finitely many positive measures on a finite space."""

    __slots__ = ("space", "generators", "canonical")

    def __init__(self, space, generators, canonical=False):
        G = np.array(generators, dtype=float)
        if G.ndim == 1:
            G = G[None, :]
        if G.shape[0] == 0:
            raise ValueError("a submeasure needs at least one generator")
        if G.shape[1] != space.n:
            raise DimensionMismatch(f"generators have {G.shape[1]} weights, space has {space.n} points")
        if not np.all(np.isfinite(G)):
            raise ValueError("generator weights must be finite")
        if np.any(G < 0):
            raise ValueError("generator weights must be nonnegative")
        G.setflags(write=False)
        self.space = space
        self.generators = G
        self.canonical = bool(canonical)

    def __call__(self, phi):
        return evaluate(self, phi)

    def __len__(self):
        return self.generators.shape[0]

    def __repr__(self):
        return f"Submeasure(n={self.space.n}, generators={len(self)}, canonical={self.canonical})"

    @property
    def mass(self):
        return float(self.generators.sum(axis=1).max())

    def key(self):
        """Hashable form of the sorted, rounded generator set."""
        G = np.round(self.generators, KEY_DECIMALS) + 0.0
        rows = sorted(map(tuple, G.tolist()))
        return tuple(rows)


def dirac(space, x, weight=1.0):
    if isinstance(x, str):
        x = space.index(x)
    w = np.zeros(space.n)
    w[x] = weight
    return Submeasure(space, w, canonical=True)


def from_measure(space, weights):
    return Submeasure(space, np.asarray(weights, dtype=float), canonical=True)


def top(space):
    """The sup of all Dirac masses, ``mu_X(phi) = max phi``."""
    return Submeasure(space, np.eye(space.n), canonical=True)


def zero(space):
    return Submeasure(space, np.zeros(space.n), canonical=True)


def _as_function(mu, phi):
    phi = np.asarray(phi, dtype=float)
    if phi.shape[-1] != mu.space.n:
        raise DimensionMismatch(f"function has {phi.shape[-1]} values, space has {mu.space.n} points")
    if not np.all(np.isfinite(phi)):
        raise ValueError("ground functions must be finite")
    return phi


def evaluate(mu, phi):
    phi = _as_function(mu, phi)
    return float((mu.generators @ phi).max())


def evaluate_many(mu, phis):
    """Evaluate on the rows of a 2-d array of ground functions."""
    phis = _as_function(mu, np.atleast_2d(phis))
    return (mu.generators @ phis.T).max(axis=0)


def _probe_vertices(G):
    """Flags rows that are the unique maximizer of some probe direction."""
    m, n = G.shape
    rng = np.random.default_rng(12345)
    probes = np.vstack([np.eye(n), -np.eye(n), np.ones(n), -np.ones(n),
                        rng.standard_normal((max(16 * n + 32, 8 * m), n))])
    scores = G @ probes.T
    certified = np.zeros(m, dtype=bool)
    order = np.argsort(-scores, axis=0, kind="stable")
    best, second = order[0], order[1] if m > 1 else order[0]
    cols = np.arange(scores.shape[1])
    gap = scores[best, cols] - scores[second, cols]
    certified[best[gap > 1e-7]] = True
    if m == 1:
        certified[:] = True
    return certified


def canonicalize(mu, tol=DEFAULT_TOL):
    """Drop generators lying in the convex hull of the others.

    Exact duplicates keep their first copy. The remaining generators are
    visited in stored order and each is tested against the current
    survivors; evaluation is unchanged.
    """
    if mu.canonical:
        return mu
    G = mu.generators
    _, first = np.unique(np.round(G, KEY_DECIMALS), axis=0, return_index=True)
    G = G[np.sort(first)]
    keep = np.ones(len(G), dtype=bool)
    certified = _probe_vertices(G) if len(G) > 1 else np.ones(1, dtype=bool)
    for i in range(len(G)):
        if certified[i]:
            continue
        others = keep.copy()
        others[i] = False
        if not others.any():
            continue
        if hull_membership(G[i], G[others], tol=tol, certificate=False).member:
            keep[i] = False
    return Submeasure(mu.space, G[keep], canonical=True)


def _check_same(mu1, mu2):
    if not mu1.space.same_as(mu2.space):
        raise DimensionMismatch("submeasures live on different spaces")


def sup_combine(*mus, canonical=True):
    for other in mus[1:]:
        _check_same(mus[0], other)
    out = Submeasure(mus[0].space, np.vstack([m.generators for m in mus]))
    return canonicalize(out) if canonical else out


def add(mu1, mu2, canonical=True):
    """Minkowski sum of generator lists; evaluation is additive."""
    _check_same(mu1, mu2)
    G = (mu1.generators[:, None, :] + mu2.generators[None, :, :]).reshape(-1, mu1.space.n)
    out = Submeasure(mu1.space, G)
    return canonicalize(out) if canonical else out


def scale(mu, lam):
    if lam < 0:
        raise NegativeScalar(f"scale factor {lam} is negative")
    if lam == 0:
        return zero(mu.space)
    return Submeasure(mu.space, lam * mu.generators, canonical=mu.canonical)


def norm(mu):
    ones = np.ones(mu.space.n)
    return max(abs(evaluate(mu, ones)), abs(evaluate(mu, -ones)))


@dataclass
class LeqResult:
    holds: bool
    witness: Optional[np.ndarray] = None
    margin: float = 0.0

    def __bool__(self):
        return self.holds


def leq(mu1, mu2, tol=DEFAULT_TOL):
    """Decide ``mu1 <= mu2`` functional-wise via per-generator hull membership.

    On failure the witness ``phi`` satisfies ``mu1(phi) > mu2(phi) + tol``.
    """
    _check_same(mu1, mu2)
    H = mu2.generators
    for g in mu1.generators:
        # cheap sufficient test before the LP
        if np.abs(H - g).sum(axis=1).min() <= tol:
            continue
        cert = hull_membership(g, H, tol=tol)
        if not cert.member:
            phi = cert.separator
            return LeqResult(False, phi, evaluate(mu1, phi) - evaluate(mu2, phi))
    return LeqResult(True)


def indicator(space, points):
    v = np.zeros(space.n)
    idx = [space.index(p) if isinstance(p, str) else int(p) for p in points]
    v[idx] = 1.0
    return v


def set_value(mu, A, kind="closed"):
    """``mu(A)`` through the indicator of ``A``.

    Every subset of a finite space is both closed and open, so the closed
    (inf over continuous majorants) and open (sup over compact subsets)
    definitions coincide; ``kind`` is accepted for either.
    """
    if kind not in ("closed", "open"):
        raise ValueError("kind must be 'closed' or 'open'")
    return evaluate(mu, indicator(mu.space, A))


def usc_extend(space, U, g, delta):
    """Extend ``g`` from ``U`` by the max over ``delta``-neighbours inside ``U``."""
    U = sorted({space.index(u) if isinstance(u, str) else int(u) for u in U})
    if not U:
        raise DomainNotDense(None, delta)
    if isinstance(g, dict):
        vals = {int(k): float(v) for k, v in g.items()}
    else:
        arr = np.asarray(g, dtype=float)
        vals = {u: float(arr[u]) for u in U}
    in_u = set(U)
    out = np.empty(space.n)
    for x in range(space.n):
        if x in in_u:
            out[x] = vals[x]
            continue
        near = [y for y in neighborhood(space, x, delta) if y in in_u]
        if not near:
            raise DomainNotDense(space.labels[x], delta)
        out[x] = max(vals[y] for y in near)
    return out


def default_basis(n):
    eye = np.eye(n)
    ones = np.ones((1, n))
    return np.vstack([eye, 1.0 - eye, ones, -ones])


def weak_distance(mu1, mu2, basis=None):
    _check_same(mu1, mu2)
    B = default_basis(mu1.space.n) if basis is None else np.atleast_2d(np.asarray(basis, dtype=float))
    if B.shape[0] == 0:
        raise ValueError("test basis is empty")
    return float(np.abs(evaluate_many(mu1, B) - evaluate_many(mu2, B)).max())


def to_json(mu):
    labels = mu.space.labels
    gens = []
    for row in mu.generators:
        gens.append({labels[i]: float(w) for i, w in enumerate(row) if w != 0.0})
    return {"generators": gens}


def from_json(space, obj):
    rows = []
    for gen in obj["generators"]:
        w = np.zeros(space.n)
        for lab, val in gen.items():
            w[space.index(lab)] = float(val)
        rows.append(w)
    return Submeasure(space, np.array(rows))
