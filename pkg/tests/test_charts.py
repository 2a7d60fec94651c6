"""Chart-layer tests: hypersurface data, both normal forms, model closed forms."""

import random
from fractions import Fraction as Q

import pytest

from yamabe.charts import (
    Composer,
    EmbeddingJet,
    adapted_normal_form,
    embed_boundary,
    geodesic_normal_form,
    hypersurface_data,
    invert_map,
    pullback_scalar,
)
from yamabe.geometry import MetricJet, curvature, inner_sym2, laplacian, sum_jets, trace
from yamabe.jets import INF_ORDER, Jet, JetMatrix, jet_sqrt
from yamabe.models import ball_sphere, build_model, cylinder, hyperbolic_shell, pe_toy, subsphere
from yamabe.randgeo import random_ambient_metric, random_graph


def flat(d):
    return MetricJet(JetMatrix.identity(d, d, normal=0))


def sphere_emb(n, order=8, positive_side=1):
    x2 = sum_jets(Jet.variable(i, n, order) ** 2 for i in range(n))
    return EmbeddingJet(jet_sqrt(1 - x2, order=order) - 1, positive_side)


# --- hypersurface data -----------------------------------------------------


def test_unit_sphere_exterior_distance():
    n = 2
    surf = hypersurface_data(flat(3), sphere_emb(n), order=6)
    assert surf.L == surf.h
    assert surf.H == Jet.constant(1, n, surf.H.order)
    assert not any(surf.lo[i, j] for i in range(n) for j in range(n))


def test_hyperplane_data():
    n = 3
    surf = hypersurface_data(flat(4), EmbeddingJet(Jet(n, INF_ORDER, {})), order=5)
    assert not surf.H
    assert not any(surf.L[i, j] for i in range(n) for j in range(n))
    assert surf.h == JetMatrix.identity(n, n, INF_ORDER)


def test_cylinder_data():
    m = cylinder(order=6)
    surf = hypersurface_data(m.metric, m.embedding, order=6)
    hM = MetricJet(surf.h)
    assert surf.H.constant_term() == Q(1, 2)
    lo2 = inner_sym2(hM, surf.lo, surf.lo)
    assert lo2.constant_term() == Q(1, 2)
    # principal curvatures {1, 0} at the base point
    assert surf.L[0, 0].constant_term() == 1
    assert not surf.L[1, 1].constant_term()
    assert not surf.L[0, 1].constant_term()


# --- geodesic normal form ----------------------------------------------------


def test_geodesic_sphere_parallel_surfaces():
    # h_r = (1+r)^2 h for the unit sphere flowed outward
    n = 2
    order = 6
    geo = geodesic_normal_form(flat(3), sphere_emb(n, order + 3), order)
    r = Jet.variable(0, 3, INF_ORDER, order, 0)
    surf = geo.surface
    fac = (1 + r) * (1 + r)
    for i in range(n):
        for j in range(n):
            assert geo.h_r[i, j] == fac * embed_boundary(surf.h[i, j])


def test_geodesic_hyperplane_constant():
    n = 2
    geo = geodesic_normal_form(flat(3), EmbeddingJet(Jet(n, INF_ORDER, {})), 5)
    assert geo.h_r == JetMatrix.identity(n, 3, INF_ORDER, None, 0)


def test_geodesic_h1_is_2L_flat_graph():
    rng = random.Random(3)
    n = 2
    phi = random_graph(rng, n, deg=3)
    geo = geodesic_normal_form(flat(3), EmbeddingJet(phi), 4)
    L = geo.surface.L
    for i in range(n):
        for j in range(n):
            assert geo.h_r[i, j].normal_coefficient(1) == 2 * L[i, j]


def test_geodesic_h_low_order_curved():
    # h_(2) = L^2 - R_{0..0} and h_(3) per the cubic formula, curved background
    rng = random.Random(17)
    n = 2
    order = 5
    g = MetricJet(random_ambient_metric(rng, n + 1, deg=2))
    phi = random_graph(rng, n, deg=3)
    geo = geodesic_normal_form(g, EmbeddingJet(phi), order)
    surf = geo.surface
    pack = geo.curvature()
    hM = MetricJet(surf.h)
    hi = hM.inverse()
    L = surf.L
    # R_{0ij0} of the chart metric dr^2 + h_r restricted to r=0
    R0 = [[pack.R(0, i + 1, j + 1, 0).restrict() for j in range(n)] for i in range(n)]
    L2 = [
        [
            sum_jets(L[i, k] * hi[k, l] * L[l, j] for k in range(n) for l in range(n))
            for j in range(n)
        ]
        for i in range(n)
    ]
    for i in range(n):
        for j in range(n):
            h2 = geo.h_r[i, j].normal_coefficient(2)
            assert h2 == L2[i][j] - R0[i][j]
    # cubic coefficient: 3 h_(3) = -nabla_r R_{0ij0} - 2 L_i^k R_{0jk0} - 2 L_j^k R_{0ik0}
    from yamabe.geometry import covariant_deriv_4tensor

    nabla_r = covariant_deriv_4tensor(geo.metric, pack.riemann, 0)
    for i in range(n):
        for j in range(n):
            h3 = geo.h_r[i, j].normal_coefficient(3)
            rhs = -nabla_r[0][i + 1][j + 1][0].restrict()
            for k in range(n):
                for l in range(n):
                    rhs = rhs - 2 * L[i, k] * hi[k, l] * R0[j][l] - 2 * L[j, k] * hi[k, l] * R0[i][l]
            assert 3 * h3 == rhs


def test_gauss_lemma_random():
    rng = random.Random(23)
    n = 2
    g = MetricJet(random_ambient_metric(rng, 3, deg=2))
    phi = random_graph(rng, n, deg=2)
    # geodesic_normal_form raises internally if the Gauss lemma fails
    geo = geodesic_normal_form(g, EmbeddingJet(phi), 4)
    assert geo.metric.g[0, 0] == 1


# --- adapted normal form ------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3])
def test_ball_model_adapted(n):
    K = 6
    m = ball_sphere(n, order=K + 2)
    ad = adapted_normal_form(m.metric, m.sigma, m.embedding, K)
    assert ad.a == m.expected["a"](K)
    exp_h = m.expected["h_s"](K)
    for i in range(n):
        for j in range(n):
            assert ad.h_s[i, j] == exp_h[i, j]
    assert ad.density_v() == m.expected["v"](K)
    assert ad.ring_v() == m.expected["ring_v"](K)


def test_shell_model_adapted():
    n = 2
    K = 6
    m = hyperbolic_shell(n, order=K + 3)
    ad = adapted_normal_form(m.metric, m.sigma, m.embedding, K)
    assert ad.a == m.expected["a"](K)
    exp_h = m.expected["h_s"](K)
    for i in range(n):
        for j in range(n):
            assert ad.h_s[i, j] == exp_h[i, j]
    assert ad.density_v() == m.expected["v"](K)


def test_subsphere_model_adapted():
    n = 2
    K = 5
    m = subsphere(n, order=K + 3)
    ad = adapted_normal_form(m.metric, m.sigma, m.embedding, K)
    assert ad.a == m.expected["a"](K)
    exp_h = m.expected["h_s"](K)
    for i in range(n):
        for j in range(n):
            assert ad.h_s[i, j] == exp_h[i, j]
    assert ad.density_v() == m.expected["v"](K)


def test_adapted_orthogonality_random_sigma():
    # a generic defining function on a flat background
    rng = random.Random(5)
    n = 2
    d = n + 1
    w = Jet.variable(0, d, INF_ORDER, normal=0)
    xs = [Jet.variable(i, d, INF_ORDER, normal=0) for i in range(1, d)]
    sigma = w + Q(1, 3) * w * xs[0] + Q(1, 2) * xs[0] * xs[1] * w - Q(1, 4) * w * w
    # zero set is {w=0} since sigma = w * unit
    ad = adapted_normal_form(flat(d), sigma, EmbeddingJet(Jet(n, INF_ORDER, {})), 4)
    s = Jet.variable(0, d, INF_ORDER, 4, 0)
    assert pullback_scalar(ad.transition, sigma, 4) == s


def test_pullback_intertwining():
    # d_s(eta* u) = eta*(X u) for the adapted flow field X
    m = ball_sphere(2, order=9)
    K = 5
    ad = adapted_normal_form(m.metric, m.sigma, m.embedding, K)
    rng = random.Random(9)
    from yamabe.randgeo import random_ambient_scalar

    u = random_ambient_scalar(rng, 3, deg=3, zero_at_base=False)
    g = m.metric
    gi = g.inverse(order=K + 2)
    dsig = [m.sigma.deriv(a) for a in range(3)]
    grad = [sum_jets(gi[a, b] * dsig[b] for b in range(3)) for a in range(3)]
    norm2 = sum_jets(grad[a] * dsig[a] for a in range(3))
    from yamabe.jets import jet_inverse

    inv = jet_inverse(norm2, order=K + 2)
    Xu = sum_jets(grad[a] * inv * u.deriv(a) for a in range(3))
    lhs = pullback_scalar(ad.transition, u, K).deriv(0)
    rhs = pullback_scalar(ad.transition, Xu, K)
    assert lhs == rhs


def test_pe_toy_geodesic_equals_adapted():
    m = pe_toy(2, order=8)
    K = 5
    ad = adapted_normal_form(m.metric, m.sigma, m.embedding, K)
    # for sigma = r in normal form, the adapted chart is the identity
    assert ad.a == Jet.constant(1, 3, K, None, 0)
    for i in range(2):
        for j in range(2):
            assert ad.h_s[i, j] == m.metric.g[i + 1, j + 1]


def test_invert_map_roundtrip():
    rng = random.Random(12)
    d = 3
    flow = [
        Jet.variable(a, d, 5, normal=0)
        + Jet(d, 5, {tuple(2 if k == a else 0 for k in range(d)): Q(1, 3)}, normal=0)
        for a in range(d)
    ]
    inv = invert_map(flow, 5)
    comp = Composer(inv, 5)
    for a in range(d):
        assert comp(flow[a]) == Jet.variable(a, d, 5, normal=0)
