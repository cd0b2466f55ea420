"""Numeric kernel: hull membership certificates, Perron roots, conditional gradient."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog, nnls
from scipy.sparse.csgraph import connected_components

from .errors import DimensionMismatch, Infeasible, NoConvergence

DEFAULT_TOL = 1e-9


@dataclass
class HullCertificate:
    member: bool
    distance: float
    coefficients: Optional[np.ndarray] = None
    separator: Optional[np.ndarray] = None
    margin: Optional[float] = None

    def verify(self, v, vertices, tol=DEFAULT_TOL):
        """Recheck the certificate by direct arithmetic."""
        v = np.asarray(v, dtype=float)
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        if self.member:
            c = self.coefficients
            return bool(np.all(c >= 0) and abs(c.sum() - 1.0) <= 1e-12
                        and np.abs(c @ V - v).sum() <= tol + 1e-12)
        phi = self.separator
        return bool(self.margin > 0 and phi @ v > (V @ phi).max() + self.margin - 1e-12)


def _margin(phi, v, V):
    return float(phi @ v - (V @ phi).max())


def _sparsify(phi, v, V, target):
    # zero coordinates in index order while the margin stays at target
    phi = phi.copy()
    for j in range(len(phi)):
        if phi[j] == 0.0:
            continue
        old = phi[j]
        phi[j] = 0.0
        if _margin(phi, v, V) < target - 1e-12:
            phi[j] = old
    return phi


def _separate(v, V, lower):
    """Maximize ``phi.v - max_i phi.v_i`` over the box ``lower <= phi <= 1``."""
    m, n = V.shape
    # variables (phi, s); maximize phi.v - s  s.t.  V phi - s <= 0
    c = np.concatenate([-v, [1.0]])
    A = np.hstack([V, -np.ones((m, 1))])
    bounds = [(lower, 1.0)] * n + [(None, None)]
    res = linprog(c, A_ub=A, b_ub=np.zeros(m), bounds=bounds, method="highs")
    if res.status != 0:
        return None, -np.inf
    phi = np.clip(res.x[:n], lower, 1.0)
    return phi, _margin(phi, v, V)


def _nnls_screen(v, V, tol):
    """Cheap pre-decision by nonnegative least squares on the lifted system.

    Solves ``min ||[V^T; w 1^T] c - [v; w]||_2`` over ``c >= 0``. A point within
    l1 distance ``tol`` of the hull has residual at most ``tol``, so a clearly
    larger residual proves non-membership. Returns ``(True, coef)``,
    ``(False, None)`` or ``(None, None)`` when undecided.
    """
    m, n = V.shape
    w = max(1.0, float(np.abs(V).max()))
    A = np.vstack([V.T, np.full((1, m), w)])
    b = np.concatenate([v, [w]])
    try:
        c, rnorm = nnls(A, b)
    except RuntimeError:
        return None, None
    s = c.sum()
    if s > 0:
        coef = c / s
        if np.abs(coef @ V - v).sum() <= tol:
            return True, coef
    if rnorm > max(100.0 * tol, 1e-7):
        return False, None
    return None, None


def hull_membership(v, vertices, tol=DEFAULT_TOL, certificate=True):
    """Decide whether ``v`` lies in the convex hull of ``vertices``.

    The decision solves the bounded LP ``min ||sum_i c_i v_i - v||_1`` over the
    probability simplex. Its optimal value is the l1 distance from ``v`` to the
    hull, and membership is declared when it is at most ``tol``. Otherwise the
    LP dual furnishes a separating test function ``phi`` with ``|phi| <= 1``.
    A second small LP first looks for a nonnegative separator, which makes
    witnesses read as weighted indicators whenever one exists. With
    ``certificate=False`` only the decision is made and no separator is built.

    Returns
    -------
    HullCertificate
        Convex coefficients when ``member``; separator and margin otherwise.
    """
    v = np.asarray(v, dtype=float)
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    if V.shape[0] == 0:
        raise ValueError("vertex list is empty")
    if V.shape[1] != v.shape[0]:
        raise DimensionMismatch(
            f"query has dimension {v.shape[0]}, vertices have {V.shape[1]}")
    m, n = V.shape
    diffs = np.abs(V - v).sum(axis=1)
    k = int(np.argmin(diffs))
    if diffs[k] <= tol:
        coef = np.zeros(m)
        coef[k] = 1.0
        return HullCertificate(True, float(diffs[k]), coefficients=coef)
    verdict, coef = _nnls_screen(v, V, tol)
    if verdict:
        return HullCertificate(True, float(np.abs(coef @ V - v).sum()), coefficients=coef)
    if verdict is False and not certificate:
        return HullCertificate(False, float("nan"))
    # variables (c, p, q): V^T c + p - q = v, sum c = 1
    A_eq = np.zeros((n + 1, m + 2 * n))
    A_eq[:n, :m] = V.T
    A_eq[:n, m:m + n] = np.eye(n)
    A_eq[:n, m + n:] = -np.eye(n)
    A_eq[n, :m] = 1.0
    b_eq = np.concatenate([v, [1.0]])
    cost = np.concatenate([np.zeros(m), np.ones(2 * n)])
    res = linprog(cost, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"hull LP failed: {res.message}")
    coef = np.clip(res.x[:m], 0.0, None)
    coef /= coef.sum()
    dist = float(np.abs(coef @ V - v).sum())
    if dist <= tol:
        return HullCertificate(True, dist, coefficients=coef)
    if not certificate:
        return HullCertificate(False, dist)
    phi, margin = _separate(v, V, 0.0)
    if margin <= tol:
        phi = np.clip(res.eqlin.marginals[:n], -1.0, 1.0)
        margin = _margin(phi, v, V)
        if margin <= tol:
            phi, margin = _separate(v, V, -1.0)
    phi = _sparsify(phi, v, V, margin)
    return HullCertificate(False, dist, separator=phi, margin=_margin(phi, v, V))


def strong_components(adjacency):
    """Strongly connected components as sorted index lists, in label order."""
    A = np.asarray(adjacency) != 0
    count, labels = connected_components(A.astype(np.int8), directed=True, connection="strong")
    comps = [sorted(np.flatnonzero(labels == c).tolist()) for c in range(count)]
    comps.sort(key=lambda c: c[0])
    return comps


def power_iteration(A, tol=DEFAULT_TOL, max_iters=100_000, v0=None):
    """Perron root and eigenvector of a nonnegative matrix.

    The iteration runs on ``A + I``, which shares the Perron vector with ``A``
    and is primitive whenever ``A`` is irreducible, so periodic components do
    not stall. Stops once ``|A v - lambda v|_inf <= tol |v|_inf``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch("power_iteration needs a square matrix")
    if np.any(A < 0):
        raise ValueError("matrix must be nonnegative")
    n = A.shape[0]
    v = np.ones(n) if v0 is None else np.asarray(v0, dtype=float).copy()
    v /= np.abs(v).max()
    B = A + np.eye(n)
    lam = 0.0
    for _ in range(max_iters):
        Av = A @ v
        lam = float(v @ Av / (v @ v))
        if np.abs(Av - lam * v).max() <= tol * np.abs(v).max():
            return lam, v
        w = B @ v
        v = w / np.abs(w).max()
    raise NoConvergence(f"power iteration did not converge in {max_iters} steps (last {lam})")


def spectral_radius(A, tol=DEFAULT_TOL, max_iters=100_000):
    """Spectral radius of a nonnegative matrix, maximized over strong components."""
    A = np.asarray(A, dtype=float)
    best = 0.0
    for comp in strong_components(A):
        sub = A[np.ix_(comp, comp)]
        if not np.any(sub):
            continue
        lam, _ = power_iteration(sub, tol=tol, max_iters=max_iters)
        best = max(best, lam)
    return best


@dataclass
class ConcaveMaxResult:
    x: np.ndarray
    value: float
    gap: float
    iterations: int
    history: list = field(default_factory=list)


class _Polytope:
    """Linear minimization oracle over ``{x : A_eq x = b_eq, A_ub x <= b_ub, bounds}``."""

    def __init__(self, n, A_eq, b_eq, A_ub, b_ub, bounds):
        self.n = n
        self.A_eq, self.b_eq = A_eq, b_eq
        self.A_ub, self.b_ub = A_ub, b_ub
        self.bounds = bounds

    def argmax(self, direction):
        res = linprog(-np.asarray(direction, dtype=float), A_ub=self.A_ub, b_ub=self.b_ub,
                      A_eq=self.A_eq, b_eq=self.b_eq, bounds=self.bounds, method="highs")
        if res.status == 2:
            raise Infeasible("feasible region is empty")
        if res.status == 3:
            raise ValueError("feasible region is unbounded in the search direction")
        if res.status != 0:
            raise RuntimeError(f"LP oracle failed: {res.message}")
        return res.x


def _line_search(objective, x, d, gmax, iters=80):
    """Exact line search for a concave function: bisection on the slope."""
    def slope(g):
        with np.errstate(all="ignore"):
            s = float(objective(x + g * d)[1] @ d)
        return s if np.isfinite(s) else (np.inf if g < gmax / 2 else -np.inf)

    if slope(gmax) >= 0:
        return gmax
    if slope(0.0) <= 0:
        return 0.0
    lo, hi = 0.0, gmax
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def maximize_concave_over_polytope(objective, n, A_eq=None, b_eq=None, A_ub=None,
                                   b_ub=None, bounds=(0, None), tol=DEFAULT_TOL,
                                   max_iters=20_000, raise_on_stall=True):
    """Maximize a concave function over a bounded polytope with away-step Frank-Wolfe.

    Parameters
    ----------
    objective : callable
        ``objective(x) -> (value, gradient)``. Entries of the gradient may be
        huge near the boundary; they must not be NaN.
    n : int
        Number of variables.
    A_eq, b_eq, A_ub, b_ub, bounds
        Polytope description in :func:`scipy.optimize.linprog` form.
    tol : float
        Target Frank-Wolfe duality gap.

    Returns
    -------
    ConcaveMaxResult
        ``gap`` is the final duality gap, an upper bound on the suboptimality.

    Notes
    -----
    The starting point is the average of the oracle vertices for the
    directions ``+e_j`` and ``-e_j``, which is deterministic and lies in the
    relative interior of their hull.
    """
    poly = _Polytope(n, A_eq, b_eq, A_ub, b_ub, bounds)
    # active set as {key: (vertex, weight)}
    active = {}
    for j in range(n):
        for sign in (1.0, -1.0):
            e = np.zeros(n)
            e[j] = sign
            s = poly.argmax(e)
            key = tuple(np.round(s, 12))
            if key not in active:
                active[key] = [s, 0.0]
    for item in active.values():
        item[1] = 1.0 / len(active)
    x = sum(w * s for s, w in active.values())

    value, grad = objective(x)
    history = [float(value)]
    gap = np.inf
    for it in range(1, max_iters + 1):
        s = poly.argmax(grad)
        fw_dir = s - x
        gap = float(grad @ fw_dir)
        if gap <= tol:
            return ConcaveMaxResult(x, float(value), max(gap, 0.0), it - 1, history)
        away_key = min(active, key=lambda k: float(grad @ active[k][0]))
        v, alpha_v = active[away_key]
        away_dir = x - v
        away_gap = float(grad @ away_dir)
        if gap >= away_gap or len(active) == 1:
            d, gmax, fw_step = fw_dir, 1.0, True
        else:
            d, gmax, fw_step = away_dir, alpha_v / (1.0 - alpha_v), False
        gamma = _line_search(objective, x, d, gmax)
        if gamma <= 0.0:
            if fw_step:
                break
            # away step made no progress, fall back to a FW step
            d, gmax, fw_step = fw_dir, 1.0, True
            gamma = _line_search(objective, x, d, gmax)
            if gamma <= 0.0:
                break
        x = x + gamma * d
        if fw_step:
            for item in active.values():
                item[1] *= (1.0 - gamma)
            key = tuple(np.round(s, 12))
            if key in active:
                active[key][1] += gamma
            else:
                active[key] = [s, gamma]
            if gamma >= 1.0 - 1e-15:
                active = {key: [s, 1.0]}
        else:
            for item in active.values():
                item[1] *= (1.0 + gamma)
            active[away_key][1] -= gamma
            if active[away_key][1] <= 1e-15:
                del active[away_key]
        new_value, grad = objective(x)
        # exact line search never decreases a concave objective; guard round-off
        value = max(float(new_value), value) if new_value >= value - 1e-12 else float(new_value)
        history.append(float(new_value))
    s = poly.argmax(grad)
    gap = max(float(grad @ (s - x)), 0.0)
    if gap > tol and raise_on_stall:
        raise NoConvergence(f"duality gap {gap:.3e} above tol {tol:.1e} after {max_iters} iterations")
    return ConcaveMaxResult(x, float(objective(x)[0]), gap, max_iters, history)
