"""Curated finite models and seeded random systems."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    Multimap,
    build_multimap,
    build_space,
    compose_multimaps,
    derive_cluster_multimap,
    discrete_space,
    identity_map,
    neighborhood,
)
from .errors import SparseCompositionDomain
from .markov import shift_from_adjacency
from .submeasure import Submeasure


@dataclass(frozen=True, eq=False)
class System:
    name: str
    f: Multimap
    composite: Optional[Multimap] = None

    @property
    def space(self):
        return self.f.source


def line_space(n, spacing=1.0, prefix="x"):
    pos = spacing * np.arange(n)
    return build_space([f"{prefix}{i}" for i in range(n)], np.abs(pos[:, None] - pos[None, :]))


def cremona():
    """Nine-point model of the standard quadratic involution.

    ``e_i`` are the three indeterminacy points, each blown up onto the
    opposite line ``s_i``; ``J`` sends ``e_i`` to ``{s_i, e_j, e_k}`` and
    ``s_i`` back to ``e_i``. ``g0, g1, g2`` are generic points with ``g0``
    fixed and ``g1, g2`` swapped. The true composite ``J o J`` is the
    identity.
    """
    X = discrete_space(["e0", "e1", "e2", "s0", "s1", "s2", "g0", "g1", "g2"])
    images = {}
    for i in range(3):
        j, k = [m for m in range(3) if m != i]
        images[f"e{i}"] = [f"s{i}", f"e{j}", f"e{k}"]
        images[f"s{i}"] = [f"e{i}"]
    images.update({"g0": ["g0"], "g1": ["g2"], "g2": ["g1"]})
    J = build_multimap(X, X, images)
    return System("cremona", J, identity_map(X))


def picard(n=6):
    """``x0`` maps onto the whole space; ``x1 -> x2 -> ... -> x_{n-1} -> x0``."""
    if n < 2:
        raise ValueError("picard model needs at least 2 points")
    X = discrete_space([f"x{i}" for i in range(n)])
    images = [list(range(n))] + [[(i + 1) % n] for i in range(1, n)]
    return System(f"picard{n}", build_multimap(X, X, images))


def shift_system(name, adjacency, labels=None):
    shift = shift_from_adjacency(adjacency, labels)
    images = [np.flatnonzero(row).tolist() for row in shift.adjacency]
    return System(name, build_multimap(shift.space, shift.space, images))


def golden_mean():
    return shift_system("goldenmean", [[1, 1], [1, 0]], ["1", "2"])


def full_shift(k=2):
    return shift_system(f"fullshift{k}", np.ones((k, k)), [str(i) for i in range(k)])


def battery():
    """Small subshifts of finite type used by the entropy checks.

    The reducible members are flagged so callers can select the
    irreducible ones.
    """
    items = [
        ("goldenmean", [[1, 1], [1, 0]]),
        ("fullshift2", np.ones((2, 2))),
        ("fullshift3", np.ones((3, 3))),
        ("cycle3", [[0, 1, 0], [0, 0, 1], [1, 0, 0]]),
        ("even", [[1, 1, 0], [0, 0, 1], [1, 1, 0]]),
        ("debruijn4", [[1, 1, 0, 0], [0, 0, 1, 1], [1, 1, 0, 0], [0, 0, 1, 1]]),
        ("ring5", [[1, 1, 0, 0, 0], [0, 0, 1, 0, 0], [0, 0, 0, 1, 0], [0, 0, 0, 0, 1], [1, 0, 1, 0, 0]]),
        ("mixed6", [[0, 1, 1, 0, 0, 0], [0, 0, 1, 1, 0, 0], [1, 0, 0, 0, 1, 0],
                    [0, 0, 0, 0, 1, 1], [1, 1, 0, 0, 0, 0], [0, 0, 1, 0, 0, 1]]),
        ("shift2_plus_fixed", [[1, 1, 0], [1, 1, 0], [0, 0, 1]]),
    ]
    rng = np.random.default_rng(2024)
    while len(items) < 12:
        k = int(rng.integers(3, 7))
        A = (rng.random((k, k)) < 0.45).astype(int)
        A[np.arange(k), (np.arange(k) + 1) % k] = 1
        items.append((f"random{len(items)}_{k}", A))
    return [shift_system(name, A) for name, A in items]


def blowup_base(n=4):
    return line_space(n, prefix="b")


# ---- random systems -------------------------------------------------------

def random_space(rng, n):
    pts = rng.random((n, 2))
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
    return build_space([f"p{i}" for i in range(n)], d)


def _density_radius(space, U):
    U = sorted(U)
    out = [x for x in range(space.n) if x not in set(U)]
    if not out:
        return 0.0
    return float(space.dist[np.ix_(out, U)].min(axis=1).max())


def _settle(space, fine, delta):
    """Grow the fine table by every point whose cluster image is a singleton.

    At the fixed point the open domain of the derived multimap is exactly
    the domain of the table.
    """
    fine = dict(fine)
    while True:
        added = False
        for x in range(space.n):
            if x in fine:
                continue
            vals = {fine[y] for y in neighborhood(space, x, delta) if y in fine}
            if len(vals) == 1:
                fine[x] = vals.pop()
                added = True
        if not added:
            return fine


def _modulus(space, fine, delta):
    U = sorted(fine)
    worst = 0.0
    for x in U:
        for y in U:
            if space.dist[x, y] <= delta:
                worst = max(worst, space.dist[fine[x], fine[y]])
    return worst


def random_multimap(rng, n=None, n_max=8, defined_frac=0.7, space=None):
    """Cluster multimap of a random table defined on a random subset."""
    if space is None:
        n = int(rng.integers(3, n_max + 1)) if n is None else n
        space = random_space(rng, n)
    n = space.n
    k = max(1, int(round(defined_frac * n)))
    U = sorted(rng.choice(n, size=k, replace=False).tolist())
    fine = {x: int(rng.integers(n)) for x in U}
    delta = _density_radius(space, U)
    fine = _settle(space, fine, delta)
    return derive_cluster_multimap(space, space, fine, delta), fine, delta


def random_composable(rng, n=None, n_max=8):
    """Random ``f, g`` and the cluster composite ``g o f`` on a shared space.

    ``g`` is derived at the continuity modulus of ``f``'s table so that every
    composite image lies inside the relation composition.
    """
    while True:
        f, F, delta = random_multimap(rng, n=n, n_max=n_max)
        space = f.source
        V = sorted(rng.choice(space.n, size=max(1, int(round(0.7 * space.n))), replace=False).tolist())
        Gt = {y: int(rng.integers(space.n)) for y in V}
        delta_g = max(_modulus(space, F, delta), _density_radius(space, V))
        Gt = _settle(space, Gt, delta_g)
        g = derive_cluster_multimap(space, space, Gt, delta_g)
        try:
            comp = compose_multimaps(f, g, delta=delta)
        except SparseCompositionDomain:
            continue
        return f, g, comp, delta


def random_submeasure(rng, space, max_generators=3, max_support=3, mass=None):
    """Sup of a few sparse random measures."""
    m = int(rng.integers(1, max_generators + 1))
    rows = []
    for _ in range(m):
        k = int(rng.integers(1, min(max_support, space.n) + 1))
        idx = rng.choice(space.n, size=k, replace=False)
        w = np.zeros(space.n)
        w[idx] = rng.random(k) + 0.05
        w *= (rng.random() + 0.5 if mass is None else mass) / w.sum()
        rows.append(w)
    return Submeasure(space, np.array(rows))


def random_function(rng, n, low=-1.0, high=1.0):
    return rng.uniform(low, high, size=n)
