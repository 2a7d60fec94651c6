"""Seeded random geometry generators backing the verify suites and tests.

Everything produced here is an exact polynomial jet (INF_ORDER), so downstream
truncation orders are governed entirely by the operations applied to the data.
Coefficients are small rationals to keep exact arithmetic bounded.
"""

from __future__ import annotations

import random

from .jets import INF_ORDER, Jet, JetMatrix, monomials_up_to
from .scalars import Q


def _small(rng, scale=6):
    return Q(rng.randint(-2, 2), rng.randint(2, scale))


def _pad(m, nvars):
    return m + (0,) * (nvars - len(m))


def random_boundary_jet(rng: random.Random, n, deg, min_deg=0, density=0.5, active=None):
    """Polynomial jet in the n tangential variables.

    `active` restricts the支 support to the first `active` variables; identities
    being tensorial, this loses no generality for oracle checks while keeping
    high-dimensional jets sparse.
    """
    k = n if active is None else min(active, n)
    coeffs = {}
    for m in monomials_up_to(k, deg):
        if sum(m) < min_deg:
            continue
        if rng.random() < density:
            c = _small(rng)
            if c:
                coeffs[_pad(m, n)] = c
    return Jet(n, INF_ORDER, coeffs)


def random_graph(rng: random.Random, n, deg=3, density=0.7, active=None):
    """Graph function phi(x) with phi(0)=0, dphi(0)=0 (degree >= 2 terms only)."""
    return random_boundary_jet(rng, n, deg, min_deg=2, density=density, active=active)


def random_ambient_metric(rng: random.Random, dim, deg=2, density=0.4, normal=0, active=None):
    """Symmetric perturbation of the identity with unit value at the base point.

    Variable `normal` is the distinguished y0/r/s direction of the chart;
    `active` counts the tangential variables allowed in the support (plus the
    normal one, which is always active).
    """
    k = dim if active is None else min(active + 1, dim)
    ms = [_pad(m, dim) for m in monomials_up_to(k, deg) if sum(m) >= 1]
    rows = [[None] * dim for _ in range(dim)]
    for i in range(dim):
        for j in range(i + 1):
            coeffs = {}
            for m in ms:
                if rng.random() < density:
                    c = _small(rng, 8)
                    if c:
                        coeffs[m] = c
            base = {(0,) * dim: Q(1)} if i == j else {}
            base.update(coeffs)
            rows[i][j] = rows[j][i] = Jet(dim, INF_ORDER, base, normal=normal)
    return JetMatrix(rows)


def random_ambient_scalar(rng: random.Random, dim, deg=2, density=0.5, normal=0,
                          zero_at_base=True, active=None):
    k = dim if active is None else min(active + 1, dim)
    coeffs = {}
    for m in monomials_up_to(k, deg):
        if zero_at_base and sum(m) == 0:
            continue
        if rng.random() < density:
            c = _small(rng)
            if c:
                coeffs[_pad(m, dim)] = c
    return Jet(dim, INF_ORDER, coeffs, normal=normal)


def random_conformal_factor(rng: random.Random, dim, deg=2, density=0.5, normal=0, active=None):
    """phi with phi(0) = 0, for conformal changes e^{2 phi} g."""
    return random_ambient_scalar(rng, dim, deg, density, normal, zero_at_base=True,
                                 active=active)
