"""Singular Yamabe tests: sigma recursion, rho Taylor data, obstructions."""

import random
from fractions import Fraction as Q

import pytest

from yamabe import closed_forms as cf
from yamabe.charts import EmbeddingJet
from yamabe.geometry import MetricJet, laplacian
from yamabe.jets import INF_ORDER, Jet, JetError, JetMatrix
from yamabe.models import ball_sphere, build_model, cylinder, hyperbolic_shell, subsphere
from yamabe.randgeo import random_ambient_metric, random_graph
from yamabe.scy import (
    YamabeData,
    b3_conformally_flat_check,
    basic_r_defect,
    bL_defect,
    obstruction_adapted,
    sc_functional,
    solve_sigma,
)


def flat_data(n, phi, **kw):
    d = n + 1
    return YamabeData(MetricJet(JetMatrix.identity(d, d, normal=0)), EmbeddingJet(phi), **kw)


def curved_data(rng, n, deg=2, **kw):
    d = n + 1
    g = MetricJet(random_ambient_metric(rng, d, deg=deg))
    return YamabeData(g, EmbeddingJet(random_graph(rng, n, deg=3)), **kw)


# --- SC on models -------------------------------------------------------------


def test_sc_ball_is_one():
    m = ball_sphere(2, order=8)
    sc = sc_functional(m.metric, m.sigma, 2)
    assert sc == 1


def test_sc_shell_is_one():
    m = hyperbolic_shell(3, order=8)
    sc = sc_functional(m.metric, m.sigma, 3)
    assert sc == 1


def test_sc_subsphere_is_one():
    m = subsphere(2, order=8)
    sc = sc_functional(m.metric, m.sigma, 2)
    assert sc == 1


def test_sc_distance_function():
    # sigma = r in the geodesic chart of a curved graph: SC = 1 + 2 r rho, rho != 0
    rng = random.Random(3)
    yd = flat_data(2, random_graph(rng, 2, deg=2))
    geo = yd.geo
    r = Jet.variable(0, 3, INF_ORDER, None, 0)
    from yamabe.scy import rho_of

    rho = rho_of(geo.metric, r, 2, geo.curvature().J)
    assert rho
    assert sc_functional(geo.metric, r, 2, geo.curvature().J) == 1 + 2 * r * rho


# --- sigma recursion -----------------------------------------------------------


def test_sigma2_is_half_H():
    rng = random.Random(7)
    yd = curved_data(rng, 2)
    sig = yd.sigma()
    assert sig.coefficients[2] == yd.surface.H / Q(2)


def test_hyperplane_sigma_vanishes():
    yd = flat_data(3, Jet(3, INF_ORDER, {}))
    sig = yd.sigma()
    for k in range(2, 5):
        assert not sig.coefficients[k]
    assert not yd.obstruction("direct").B


def test_sigma_flat_background():
    rng = random.Random(11)
    n = 3
    yd = flat_data(n, random_graph(rng, n, deg=3))
    sig = yd.sigma()
    bd = cf.BoundaryData(yd, chart="geodesic")
    assert sig.coefficients[3] == cf.sigma3_flat(bd)
    assert sig.coefficients[4] == cf.sigma4_flat(bd)


def test_sigma_obstructed_order_raises():
    yd = flat_data(2, Jet(2, INF_ORDER, {}))
    with pytest.raises(JetError):
        solve_sigma(yd.geo, upto=5)


@pytest.mark.parametrize("n", [3, 4])
def test_sigma_general_background_closed_forms(n):
    rng = random.Random(100 + n)
    yd = curved_data(rng, n)
    sig = yd.sigma(upto=min(5, n + 1))
    bd = cf.BoundaryData(yd, chart="geodesic")
    u = bd.u_coefficients(yd.geo, 4)
    s2 = cf.sigma2(bd)
    assert sig.coefficients[2] == s2
    assert sig.coefficients[3] == cf.sigma3_v(bd, u)
    assert sig.coefficients[3] == cf.sigma3(bd)
    assert sig.coefficients[4] == cf.sigma4_v(bd, u, s2)
    if n >= 4:
        assert sig.coefficients[5] == cf.sigma5_v(bd, u, s2, sig.coefficients[3])


# --- rho Taylor data -------------------------------------------------------------


def test_rho_taylor_low_order():
    rng = random.Random(19)
    n = 3
    yd = curved_data(rng, n)
    data = yd.rho_data()
    bd = cf.BoundaryData(yd)
    assert data.taylor[0] == -yd.surface.H
    assert data.taylor[1] == cf.rho0_prime(bd)
    assert data.taylor[2] == cf.rho0_doubleprime(bd)


def test_rho_pp_flat_n3():
    rng = random.Random(23)
    n = 3
    yd = flat_data(n, random_graph(rng, n, deg=3))
    data = yd.rho_data()
    bd = cf.BoundaryData(yd)
    assert data.taylor[2] == cf.rho0_doubleprime_flat_n3(bd)


def test_rho_recursion_stops_at_n():
    rng = random.Random(29)
    yd = curved_data(rng, 2)
    with pytest.raises(JetError):
        yd.rho_data(upto=2)


# --- obstructions ------------------------------------------------------------------


def test_B1_vanishes():
    rng = random.Random(31)
    for _ in range(5):
        yd = curved_data(rng, 1, deg=2)
        assert not yd.obstruction("direct").B
        assert not yd.obstruction("adapted").B


def test_B2_cylinder():
    m = cylinder(order=9)
    yd = YamabeData(m.metric, m.embedding)
    b = yd.obstruction("direct")
    assert b.B.constant_term() == Q(-1, 12)
    assert yd.obstruction("adapted").B == b.B


def test_B2_closed_forms_curved():
    rng = random.Random(37)
    yd = curved_data(rng, 2)
    b = yd.obstruction("direct").B
    bd = cf.BoundaryData(yd)
    assert b == cf.B2(bd, form=1)
    assert b == cf.B2(bd, form=2)
    assert yd.obstruction("adapted").B == b


def test_B3_flat_graphs():
    rng = random.Random(41)
    yd = flat_data(3, random_graph(rng, 3, deg=3))
    b = yd.obstruction("direct").B
    bd = cf.BoundaryData(yd)
    assert b == cf.B3_flat(bd)
    assert yd.obstruction("adapted").B == b


def test_B3_conformally_flat():
    from yamabe.jets import jet_exp
    from yamabe.randgeo import random_conformal_factor

    rng = random.Random(43)
    n = 3
    d = 4
    phi_c = random_conformal_factor(rng, d, deg=2).truncate(7)
    w = jet_exp(2 * phi_c)
    zero = w.zero_like()
    g = MetricJet(JetMatrix([[w if a == b else zero for b in range(d)] for a in range(d)]))
    yd = YamabeData(g, EmbeddingJet(random_graph(rng, n, deg=3, density=0.4)))
    got, closed = b3_conformally_flat_check(yd)
    assert got == closed


def test_B3_umbilic_zero():
    # sphere in flat space: totally umbilic, B_3 = 0
    m = ball_sphere(3, order=10)
    yd = YamabeData(m.metric, m.embedding)
    assert not yd.obstruction("direct").B.constant_term()


def test_Bn_sphere_vanishes():
    m = ball_sphere(2, order=9)
    yd = YamabeData(m.metric, m.embedding)
    assert not yd.obstruction("direct").B
    assert not yd.obstruction("adapted").B


def test_B2_conformal_covariance():
    from yamabe.charts import Composer
    from yamabe.jets import jet_exp
    from yamabe.randgeo import random_conformal_factor

    rng = random.Random(47)
    n = 2
    d = 3
    yd = curved_data(rng, n)
    b = yd.obstruction("direct").B
    phi_c = random_conformal_factor(rng, d, deg=2)
    conf = jet_exp((2 * phi_c).truncate(yd.geo_order + 2))
    ghat = MetricJet(
        JetMatrix([[conf * yd.background.g[a, bb] for bb in range(d)] for a in range(d)])
    )
    yd2 = YamabeData(ghat, yd.embedding)
    bhat = yd2.obstruction("direct").B
    # restrict phi to M through the graph
    comp = Composer(
        [yd.embedding.phi.truncate(8)] + [Jet.variable(i, n, INF_ORDER) for i in range(n)], 8
    )
    factor = jet_exp(((n + 1) * comp(phi_c)).truncate(8))
    assert factor * bhat == b


# --- identities -----------------------------------------------------------------


def test_basic_r_arbitrary_sigma():
    # (Basic-R) holds for any defining function, not just Yamabe solutions
    from yamabe.charts import adapted_normal_form

    d = 3
    w = Jet.variable(0, d, INF_ORDER, normal=0)
    x1 = Jet.variable(1, d, INF_ORDER, normal=0)
    x2 = Jet.variable(2, d, INF_ORDER, normal=0)
    sigma = w + w * x1 / Q(3) - w * w / Q(2) + w * x2 * x2 / Q(5)
    g = MetricJet(JetMatrix.identity(d, d, normal=0))
    ad = adapted_normal_form(g, sigma, EmbeddingJet(Jet(2, INF_ORDER, {})), 5)
    assert not basic_r_defect(ad)


def test_basic_r_on_models():
    for m in (ball_sphere(2, order=8), hyperbolic_shell(2, order=8), subsphere(2, order=8)):
        from yamabe.charts import adapted_normal_form

        ad = adapted_normal_form(m.metric, m.sigma, m.embedding, 5)
        assert not basic_r_defect(ad)


def test_bL_under_scy():
    rng = random.Random(53)
    n = 2
    yd = curved_data(rng, n)
    defect = bL_defect(yd.adapted)
    # O(s^n) under SCY
    for k in range(n):
        assert not defect.normal_coefficient(k)


def test_sc_conformal_invariance():
    from yamabe.jets import jet_exp
    from yamabe.randgeo import random_ambient_scalar, random_conformal_factor

    rng = random.Random(59)
    d = 3
    g = MetricJet(random_ambient_metric(rng, d, deg=2).map(lambda e: e.truncate(6)))
    w = Jet.variable(0, d, INF_ORDER, normal=0)
    sigma = w + w * w * Q(1, 3) + w * Jet.variable(1, d, INF_ORDER, normal=0) * Q(1, 2)
    phi_c = random_conformal_factor(rng, d, deg=2)
    conf = jet_exp((2 * phi_c).truncate(6))
    half = jet_exp(phi_c.truncate(6))
    ghat = MetricJet(JetMatrix([[conf * g.g[a, b] for b in range(d)] for a in range(d)]))
    assert sc_functional(ghat, half * sigma, d - 1) == sc_functional(g, sigma, d - 1)
