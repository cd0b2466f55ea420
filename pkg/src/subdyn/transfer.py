"""Moving functions and submeasures along partially defined maps."""

import itertools
from dataclasses import dataclass

import numpy as np

from .core import Multimap, build_multimap, build_space, check_degree, neighborhood
from .errors import (
    BadFiberSpec,
    DimensionMismatch,
    DomainNotDense,
    NotAMeasure,
    SelectionExplosion,
)
from .submeasure import Submeasure, canonicalize, evaluate, usc_extend

DEFAULT_CAP = 10_000


def pullback_function(f, phi):
    """``(f^* phi)(x) = max of phi over images(x)``."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (f.target.n,):
        raise DimensionMismatch(f"function has shape {phi.shape}, target has {f.target.n} points")
    return np.array([phi[list(img)].max() for img in f.images])


def pushforward_value(f, mu, phi):
    """Evaluate ``f_*(mu)(phi)`` without materializing generators."""
    return evaluate(mu, pullback_function(f, phi))


def _generator_pushforward(f, chi, cap):
    """All selection pushforwards of one measure, in lexicographic order.

    Indeterminacy points sharing an image set are pooled: the Minkowski sum
    of scaled copies of one simplex is a single scaled simplex, so pooling
    leaves the hull, and hence the evaluation, unchanged.
    """
    base = np.zeros(f.target.n)
    pools = {}
    for x in np.flatnonzero(chi):
        img = f.images[x]
        if len(img) == 1:
            base[next(iter(img))] += chi[x]
        else:
            key = tuple(sorted(img))
            pools[key] = pools.get(key, 0.0) + chi[x]
    keys = sorted(pools)
    count = 1
    for key in keys:
        count *= len(key)
        if count > cap:
            raise SelectionExplosion(count, cap)
    rows = []
    for choice in itertools.product(*keys):
        w = base.copy()
        for key, y in zip(keys, choice):
            w[y] += pools[key]
        rows.append(w)
    return rows


def pushforward(f, mu, cap=DEFAULT_CAP):
    """Materialize ``f_*(mu)`` as a generator list.

    Each generator ``chi`` contributes the classical pushforwards of every
    selection ``s(x) in images(x)`` on the indeterminacy part of its support.
    The result is canonicalized when the total count stays within ``cap``.

    Raises
    ------
    SelectionExplosion
        If one generator needs more than ``cap`` selections.
        :func:`pushforward_value` still evaluates in that case.
    """
    if not mu.space.same_as(f.source):
        raise DimensionMismatch("submeasure does not live on the source of the map")
    rows = []
    for chi in mu.generators:
        rows.extend(_generator_pushforward(f, chi, cap))
    out = Submeasure(f.target, np.array(rows))
    if len(rows) == 1:
        out.canonical = True
        return out
    return canonicalize(out) if len(rows) <= cap else out


def _covering_parts(f, delta):
    if f.degree is None:
        raise ValueError("the map carries no covering degree")
    check_degree(f, f.degree)
    pre = {}
    for x in sorted(f.open_domain):
        pre.setdefault(f.value(x), []).append(x)
    return pre


def covering_pushforward_function(f, phi, delta):
    """Sum of ``phi`` over preimages, extended upper-semicontinuously.

    On ``f(open_domain)`` the value is the sum over the ``degree`` preimages;
    other target points take the max of those sums over their
    ``delta``-neighbourhood.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (f.source.n,):
        raise DimensionMismatch(f"function has shape {phi.shape}, source has {f.source.n} points")
    pre = _covering_parts(f, delta)
    sums = {y: float(phi[xs].sum()) for y, xs in pre.items()}
    return usc_extend(f.target, list(sums), sums, delta)


def pullback_submeasure(f, nu, delta, cap=DEFAULT_CAP):
    """Generators of ``f^*(nu)``, with ``f^*(nu)(phi) = nu(covering_pushforward_function(f, phi))``.

    A target point ``y`` outside ``f(open_domain)`` picks one neighbour ``z``
    in ``f(open_domain)``; its weight is spread as the indicator of the
    preimages of ``z``. Every generator therefore has ``degree`` times the
    mass of the generator it comes from.
    """
    if not nu.space.same_as(f.target):
        raise DimensionMismatch("submeasure does not live on the target of the map")
    pre = _covering_parts(f, delta)
    T = sorted(pre)
    ind = {y: np.bincount(xs, minlength=f.source.n).astype(float) for y, xs in pre.items()}
    choices = {}
    for y in range(f.target.n):
        if y in pre:
            continue
        near = sorted(z for z in neighborhood(f.target, y, delta) if z in pre)
        if not near:
            raise DomainNotDense(f.target.labels[y], delta)
        choices[y] = near
    rows = []
    for chi in nu.generators:
        base = sum((chi[y] * ind[y] for y in T), np.zeros(f.source.n))
        free = [y for y in sorted(choices) if chi[y] > 0]
        count = int(np.prod([len(choices[y]) for y in free])) if free else 1
        if count > cap:
            raise SelectionExplosion(count, cap)
        for sel in itertools.product(*(choices[y] for y in free)):
            w = base.copy()
            for y, z in zip(free, sel):
                w += chi[y] * ind[z]
            rows.append(w)
    out = Submeasure(f.source, np.array(rows))
    return canonicalize(out) if len(rows) <= cap else out


@dataclass(frozen=True, eq=False)
class BlowupModel:
    base: object
    center: frozenset
    total: object
    projection: Multimap
    inverse: Multimap
    fibers: dict

    def embed(self, x):
        """Index in ``total`` of a base point off the center."""
        (z,) = self.inverse.images[x]
        return z


def _fiber_sizes(base, center, fiber_sizes):
    if isinstance(fiber_sizes, dict):
        sizes = {}
        for lab, k in fiber_sizes.items():
            a = base.index(lab) if isinstance(lab, str) else int(lab)
            if a not in center:
                raise BadFiberSpec(f"fiber given for non-center point {base.labels[a]!r}")
            sizes[a] = k
        missing = [base.labels[a] for a in sorted(center) if a not in sizes]
        if missing:
            raise BadFiberSpec(f"no fiber size for center point {missing[0]!r}")
    elif isinstance(fiber_sizes, (list, tuple)):
        if len(fiber_sizes) != len(center):
            raise BadFiberSpec("one fiber size per center point is required")
        sizes = dict(zip(sorted(center), fiber_sizes))
    else:
        sizes = {a: fiber_sizes for a in center}
    for a, k in sizes.items():
        if isinstance(k, bool) or int(k) != k or k < 1:
            raise BadFiberSpec(f"fiber size {k!r} at {base.labels[a]!r} is not a positive integer")
        sizes[a] = int(k)
    return sizes


def blowup_construct(base, center, fiber_sizes, eps_fiber=None):
    """Replace each center point by a fiber of ``k`` points.

    Distances in the total space are base distances between projections;
    distinct points of one fiber sit ``eps_fiber`` apart (default: half the
    smallest base distance).
    """
    center = frozenset(base.index(a) if isinstance(a, str) else int(a) for a in center)
    if not center:
        raise BadFiberSpec("center is empty")
    sizes = _fiber_sizes(base, center, fiber_sizes)
    off = base.dist[~np.eye(base.n, dtype=bool)]
    dmin = float(off.min()) if off.size else 1.0
    eps = 0.5 * dmin if eps_fiber is None else float(eps_fiber)
    if not 0 < eps < dmin:
        raise BadFiberSpec(f"fiber distance {eps} must lie in (0, {dmin})")
    labels, proj, fibers = [], [], {}
    for x, lab in enumerate(base.labels):
        if x in center:
            fibers[x] = tuple(range(len(labels), len(labels) + sizes[x]))
            labels.extend(f"{lab}#{k}" for k in range(sizes[x]))
            proj.extend([x] * sizes[x])
        else:
            labels.append(lab)
            proj.append(x)
    proj = np.array(proj)
    dist = base.dist[np.ix_(proj, proj)].copy()
    same = (proj[:, None] == proj[None, :]) & ~np.eye(len(proj), dtype=bool)
    dist[same] = eps
    total = build_space(labels, dist)
    projection = build_multimap(total, base, [[int(x)] for x in proj])
    inverse = build_multimap(base, total, [list(fibers[x]) if x in center else [int(np.flatnonzero(proj == x)[0])]
                                           for x in range(base.n)])
    return BlowupModel(base, center, total, projection, inverse, fibers)


@dataclass
class Decomposition:
    lhs: float
    rhs: float
    split: tuple

    @property
    def residual(self):
        return abs(self.lhs - self.rhs)


def fiber_max(model, phi):
    """``pi_*(phi)`` on the center: the max of ``phi`` over each fiber."""
    phi = np.asarray(phi, dtype=float)
    return {a: float(phi[list(fib)].max()) for a, fib in model.fibers.items()}


def blowup_decompose(model, mu, phi, cap=DEFAULT_CAP):
    """Both sides of the blowup splitting for a single measure ``mu`` on the base.

    ``lhs`` evaluates the materialized pushforward of ``mu`` under the fiber
    map at ``phi``. ``rhs`` is the classical pullback of the part of ``mu``
    off the center plus the center part integrated against fiber maxima.
    """
    if isinstance(mu, Submeasure):
        mu = canonicalize(mu)
        if len(mu) != 1:
            raise NotAMeasure(f"submeasure has {len(mu)} non-redundant generators")
        w = mu.generators[0]
    else:
        w = np.asarray(mu, dtype=float)
        if w.ndim != 1 or np.any(w < 0):
            raise NotAMeasure("expected a nonnegative weight vector")
    phi = np.asarray(phi, dtype=float)
    on_center = np.zeros(model.base.n, dtype=bool)
    on_center[list(model.center)] = True
    mu1 = np.where(on_center, 0.0, w)
    mu2 = np.where(on_center, w, 0.0)
    pushed = pushforward(model.inverse, Submeasure(model.base, w), cap=cap)
    lhs = evaluate(pushed, phi)
    first = sum(mu1[x] * phi[model.embed(x)] for x in range(model.base.n) if not on_center[x])
    second = sum(mu2[a] * m for a, m in fiber_max(model, phi).items())
    return Decomposition(float(lhs), float(first + second), (mu1, mu2))
