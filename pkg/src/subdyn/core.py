"""Finite metric spaces and partially defined maps between them.

A partially defined map is stored as a multimap: every source point carries a
nonempty set of target points. Points with a singleton image form the open
domain, the others form the indeterminacy set and their image set plays the
role of the cluster set of the map at that point.
"""

from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DegreeViolation,
    DimensionMismatch,
    DomainNotDense,
    EmptyImage,
    MetricViolation,
    SparseCompositionDomain,
)

METRIC_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FiniteSpace:
    labels: tuple
    dist: np.ndarray = field(repr=False)

    @property
    def n(self):
        return len(self.labels)

    def index(self, label):
        try:
            return self._lookup[label]
        except KeyError:
            raise KeyError(f"unknown point label {label!r}") from None

    @property
    def _lookup(self):
        # cached lazily, the dataclass is frozen
        cache = self.__dict__.get("_label_index")
        if cache is None:
            cache = {lab: i for i, lab in enumerate(self.labels)}
            object.__setattr__(self, "_label_index", cache)
        return cache

    def same_as(self, other):
        return self is other or (
            self.labels == other.labels and np.array_equal(self.dist, other.dist))


def build_space(labels, dist, tol=METRIC_TOL):
    """Validate a distance matrix and wrap it as a :class:`FiniteSpace`.

    Raises
    ------
    MetricViolation
        On a nonzero diagonal, asymmetry, a non-positive off-diagonal entry or
        a failed triangle inequality. The first offending triple in
        lexicographic order is reported.
    """
    labels = tuple(str(lab) for lab in labels)
    if len(set(labels)) != len(labels):
        raise ValueError("point labels must be unique")
    d = np.array(dist, dtype=float)
    n = len(labels)
    if d.shape != (n, n):
        raise DimensionMismatch(f"dist has shape {d.shape}, expected {(n, n)}")
    if n == 0:
        raise ValueError("a space needs at least one point")
    if not np.all(np.isfinite(d)):
        raise ValueError("distances must be finite")
    for i in range(n):
        if abs(d[i, i]) > tol:
            raise MetricViolation((i, i, i), "nonzero diagonal")
    for i in range(n):
        for j in range(i + 1, n):
            if abs(d[i, j] - d[j, i]) > tol:
                raise MetricViolation((i, j, i), "asymmetric distance")
            if d[i, j] <= tol:
                raise MetricViolation((i, j, i), "non-positive distance between distinct points")
    # d[i, k] > d[i, j] + d[j, k]
    excess = d[:, None, :] - d[:, :, None] - d.T[None, :, :]
    bad = np.argwhere(excess > tol)
    if len(bad):
        i, j, k = bad[0]
        raise MetricViolation((i, j, k), "triangle inequality fails")
    d.setflags(write=False)
    return FiniteSpace(labels, d)


def discrete_space(labels, scale=1.0):
    """Every pair of distinct points at distance ``scale``."""
    n = len(labels)
    return build_space(labels, scale * (1.0 - np.eye(n)))


def neighborhood(space, x, delta):
    """Indices within ``delta`` of point ``x`` (always contains ``x``)."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    return frozenset(np.flatnonzero(space.dist[x] <= delta).tolist()) | {x}


@dataclass(frozen=True, eq=False)
class Multimap:
    source: FiniteSpace
    target: FiniteSpace
    images: tuple
    degree: Optional[int] = None

    @property
    def open_domain(self):
        return frozenset(x for x, img in enumerate(self.images) if len(img) == 1)

    @property
    def indeterminacy(self):
        return frozenset(x for x, img in enumerate(self.images) if len(img) > 1)

    @property
    def is_self_map(self):
        return self.source.same_as(self.target)

    def value(self, x):
        """The single image of an open-domain point."""
        (y,) = self.images[x]
        return y

    def preimages(self, y):
        """Preimages of ``y`` inside the open domain."""
        return [x for x, img in enumerate(self.images) if img == {y}]

    def image_labels(self):
        lab_s, lab_t = self.source.labels, self.target.labels
        return {lab_s[x]: sorted(lab_t[y] for y in img)
                for x, img in enumerate(self.images)}


def _coerce_images(source, target, images):
    if isinstance(images, Mapping):
        out = [None] * source.n
        for key, vals in images.items():
            x = source.index(key) if isinstance(key, str) else int(key)
            out[x] = [target.index(v) if isinstance(v, str) else int(v) for v in vals]
        missing = [source.labels[x] for x, img in enumerate(out) if img is None]
        if missing:
            raise EmptyImage(missing[0])
        return out
    images = list(images)
    if len(images) != source.n:
        raise DimensionMismatch(
            f"{len(images)} image sets for {source.n} source points")
    return [[target.index(v) if isinstance(v, str) else int(v) for v in img]
            for img in images]


def check_degree(f, degree):
    od = f.open_domain
    counts = {}
    for x in od:
        y = f.value(x)
        counts[y] = counts.get(y, 0) + 1
    for y in sorted(counts):
        if counts[y] != degree:
            raise DegreeViolation(f.target.labels[y], counts[y], degree)


def build_multimap(source, target, images, degree=None):
    """Build a multimap from per-point image sets.

    ``images`` is either a sequence (indexed by source point) of iterables of
    target indices or labels, or a mapping from source label to such an
    iterable.
    """
    raw = _coerce_images(source, target, images)
    sets = []
    for x, img in enumerate(raw):
        s = frozenset(img)
        if not s:
            raise EmptyImage(source.labels[x])
        if min(s) < 0 or max(s) >= target.n:
            raise IndexError(f"image of {source.labels[x]!r} leaves the target space")
        sets.append(s)
    f = Multimap(source, target, tuple(sets), degree)
    if degree is not None:
        if int(degree) < 1:
            raise ValueError("degree must be a positive integer")
        check_degree(f, int(degree))
    return f


def identity_map(space):
    return build_multimap(space, space, [[x] for x in range(space.n)])


def derive_cluster_multimap(source, target, fine_map, delta):
    """Multimap whose indeterminacy images are cluster sets at resolution ``delta``.

    ``fine_map`` maps source indices of the defined set ``U`` to single target
    indices. Points outside ``U`` receive the images of all points of ``U``
    within ``delta``.
    """
    fine = {int(x): int(y) for x, y in dict(fine_map).items()}
    if not fine:
        raise DomainNotDense(None, delta)
    defined = np.zeros(source.n, dtype=bool)
    defined[list(fine)] = True
    images = []
    for x in range(source.n):
        if defined[x]:
            images.append([fine[x]])
            continue
        near = [y for y in sorted(neighborhood(source, x, delta)) if defined[y]]
        if not near:
            raise DomainNotDense(source.labels[x], delta)
        images.append(sorted({fine[y] for y in near}))
    return build_multimap(source, target, images)


def relation_composition(f, g):
    """Union of ``g``-images over ``f``-images: the diagnostic composite."""
    if not f.target.same_as(g.source):
        raise DimensionMismatch("f.target must equal g.source")
    images = [sorted(set().union(*(g.images[y] for y in img))) for img in f.images]
    return build_multimap(f.source, g.target, images)


def compose_multimaps(f, g, explicit_composite=None, delta=None):
    """The composite ``g o f`` as a partially defined map.

    The composite is taken from ``explicit_composite`` when given. Otherwise
    the single-valued composite on
    ``{x in OpenDom(f) : f(x) in OpenDom(g)}`` is extended to the remaining
    points through cluster sets at resolution ``delta``. Relation composition
    is never used here; see :func:`relation_composition`.
    """
    if not f.target.same_as(g.source):
        raise DimensionMismatch("f.target must equal g.source")
    if explicit_composite is not None:
        h = explicit_composite
        if not (h.source.same_as(f.source) and h.target.same_as(g.target)):
            raise DimensionMismatch("explicit composite has the wrong source or target")
        return h
    god = g.open_domain
    fine = {}
    for x in sorted(f.open_domain):
        y = f.value(x)
        if y in god:
            fine[x] = g.value(y)
    if not fine:
        raise SparseCompositionDomain("no point survives both maps")
    try:
        return derive_cluster_multimap(f.source, g.target, fine, 0.0 if delta is None else delta)
    except DomainNotDense as exc:
        raise SparseCompositionDomain(
            f"composition domain is not dense at delta={delta}: {exc}") from exc


def omega_infinity(f, max_depth=None):
    """Points whose first ``max_depth`` iterates stay in the open domain.

    On a finite space orbits are eventually periodic, so the default depth
    ``n`` gives the exact set of points whose forward orbit avoids ``I(f)``.
    """
    if not f.is_self_map:
        raise DimensionMismatch("omega_infinity needs a self-map")
    depth = f.source.n if max_depth is None else int(max_depth)
    od = f.open_domain
    good = set()
    for x in range(f.source.n):
        y, ok = x, True
        for _ in range(depth):
            if y not in od:
                ok = False
                break
            y = f.value(y)
        if ok:
            good.add(x)
    return frozenset(good)
