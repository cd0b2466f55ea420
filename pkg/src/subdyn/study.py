"""Refinement studies: one row of diagnostics per discretization level."""

import csv
import io

import numpy as np

from . import systems
from .core import build_multimap, build_space, relation_composition
from .entropy import top_entropy
from .invariant import inv_leq
from .markov import orbit_graph
from .scenario import load, validate
from .submeasure import dirac, evaluate, norm, top
from .transfer import blowup_construct, fiber_max, pushforward

COLUMNS = ["resolution", "n_points", "push_indicator", "push_ramp", "reference",
           "invariant_mass", "h_top", "h_top_trend"]


def _ramp(n):
    return np.arange(n) / max(n - 1, 1)


def _row_for_map(resolution, f, mu, reference=None):
    """Diagnostics for a self-map ``f`` and test submeasure ``mu``."""
    X = f.source
    pushed = pushforward(f, mu)
    ind = np.zeros(X.n)
    ind[0] = 1.0
    inv = inv_leq(f, top(X))
    return {"resolution": resolution, "n_points": X.n,
            "push_indicator": evaluate(pushed, ind),
            "push_ramp": evaluate(pushed, _ramp(X.n)),
            "reference": "" if reference is None else reference,
            "invariant_mass": norm(inv),
            "h_top": top_entropy(orbit_graph(f))}


def _picard_row(r):
    f = systems.picard(int(r)).f
    return _row_for_map(r, f, dirac(f.source, 0))


def _fullshift_row(r):
    f = systems.full_shift(int(r)).f
    return _row_for_map(r, f, dirac(f.source, 0))


def _blowup_row(r):
    base = systems.blowup_base(4)
    model = blowup_construct(base, ["b1"], int(r))
    Z = model.total
    phi = _ramp(Z.n)
    a = base.index("b1")
    # self-map of the total space that sends a point to its whole fiber
    g = relation_composition(model.projection, model.inverse)
    row = _row_for_map(r, g, dirac(Z, model.fibers[a][0]), reference=fiber_max(model, phi)[a])
    pushed = pushforward(model.inverse, dirac(base, a))
    row["push_ramp"] = evaluate(pushed, phi)
    ind = np.zeros(Z.n)
    ind[0] = 1.0
    row["push_indicator"] = evaluate(pushed, ind)
    return row


FAMILIES = {"picard": _picard_row, "fullshift": _fullshift_row, "blowup": _blowup_row}


def _constant_family(doc):
    validate(doc)
    sd = doc["system"]
    X = build_space(sd["labels"], sd["dist"])
    f = build_multimap(X, X, sd["map"])
    return lambda r: _row_for_map(r, f, dirac(X, 0))


def refinement_study(scenario, resolutions, delta_rule=None):
    """Rows of diagnostics across ``resolutions``.

    ``scenario`` is a family name (``picard``, ``fullshift``, ``blowup``), a
    scenario file path, or a scenario document; files and documents form a
    constant family. ``delta_rule`` is accepted for families whose cluster
    sets depend on resolution; the curated families do not use it.
    """
    if isinstance(scenario, dict):
        make = _constant_family(scenario)
    elif scenario in FAMILIES:
        make = FAMILIES[scenario]
    else:
        make = _constant_family(load(scenario))
    rows = []
    prev = None
    for r in resolutions:
        row = make(r)
        if prev is None:
            trend = ""
        elif row["h_top"] > prev + 1e-12:
            trend = "increasing"
        elif row["h_top"] < prev - 1e-12:
            trend = "decreasing"
        else:
            trend = "constant"
        row["h_top_trend"] = trend
        prev = row["h_top"]
        rows.append(row)
    return rows


def to_csv(rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()
