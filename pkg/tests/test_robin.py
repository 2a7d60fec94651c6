"""Laplace-Robin layer tests: models, conjugation, commutators, P_N, Q_N,
operator extraction and formal adjoints."""

import random
from fractions import Fraction as F

import pytest

from yamabe import closed_forms as cf
from yamabe.charts import EmbeddingJet, adapted_normal_form
from yamabe.geometry import MetricJet, laplacian
from yamabe.jets import INF_ORDER, Jet, JetError, JetMatrix, jet_exp
from yamabe.models import ball_sphere, height_sphere, hyperbolic_shell
from yamabe.randgeo import (
    random_ambient_metric,
    random_ambient_scalar,
    random_boundary_jet,
    random_conformal_factor,
    random_graph,
)
from yamabe.robin import (
    AdaptedRobin,
    ExtractedOperator,
    commutator_defect,
    commutator_ln_defect,
    conjugation_constant_term,
    conjugation_defect,
    extrinsic_laplacian,
    formal_adjoint,
    operator_extract,
    q_curvature,
    robin_adjoint_identity_defect,
    robin_apply,
    tangential_defect,
)
from yamabe.scalars import LAMBDA, LambdaRational, Q
from yamabe.scy import YamabeData
from yamabe.series import Series, SlicedChart


def flat(d):
    return MetricJet(JetMatrix.identity(d, d, normal=0))


def adapted_robin_for(model, order=6):
    ad = adapted_normal_form(model.metric, model.sigma, model.embedding, order)
    return AdaptedRobin(SlicedChart(ad))


def yamabe_robin(rng, n, curved=True, xb=2, active=None, deg=2):
    d = n + 1
    g = MetricJet(random_ambient_metric(rng, d, deg=deg, active=active)) if curved else flat(d)
    yd = YamabeData(g, EmbeddingJet(random_graph(rng, n, deg=3, active=active)),
                    tangential_order=xb)
    return yd, AdaptedRobin(SlicedChart(yd.adapted))


# --- robin_apply ----------------------------------------------------------------


def test_flat_model_form():
    # L = (n+2 lam-1) d_0 - y0 Delta on flat space with sigma = y0
    n = 2
    d = 3
    g = flat(d)
    sigma = Jet.variable(0, d, INF_ORDER, normal=0)
    rng = random.Random(1)
    u = random_ambient_scalar(rng, d, deg=3, zero_at_base=False).truncate(6)
    lam = LAMBDA
    got = robin_apply(g, sigma, lam, u)
    expected = (n + 2 * lam - 1) * u.deriv(0) - sigma * laplacian(g, u)
    assert got == expected


def test_L0_kills_constants():
    rng = random.Random(2)
    d = 3
    g = MetricJet(random_ambient_metric(rng, d, deg=2).map(lambda e: e.truncate(6)))
    sigma = random_ambient_scalar(rng, d, deg=2, zero_at_base=False)
    one = Jet.constant(1, d, 6, normal=0)
    assert not robin_apply(g, sigma, Q(0), one)


def test_L_lam_on_one():
    rng = random.Random(3)
    d = 3
    n = 2
    g = MetricJet(random_ambient_metric(rng, d, deg=2).map(lambda e: e.truncate(6)))
    sigma = random_ambient_scalar(rng, d, deg=2, zero_at_base=False)
    one = Jet.constant(1, d, 6, normal=0)
    from yamabe.geometry import ricci_scalar_j
    from yamabe.scy import rho_of

    J = ricci_scalar_j(g)[2]
    rho = rho_of(g, sigma, n, J)
    got = robin_apply(g, sigma, LAMBDA, one, J=J, rho=rho)
    assert got == LAMBDA * ((n + 2 * LAMBDA - 1) * rho - sigma * J)
    # lam-derivative at 0: (n-1) rho - sigma J
    dot = got.map_coeffs(lambda c: c.deriv()(0) if isinstance(c, LambdaRational) else Q(0))
    assert dot == (n - 1) * rho - sigma * J


def test_sphere_model_rho():
    # on S^{n+1} with the height function, rho = He/2 and J = (n+1)/2
    m = height_sphere(2, order=7)
    n = 2
    from yamabe.geometry import ricci_scalar_j
    from yamabe.scy import rho_of

    J = ricci_scalar_j(m.metric)[2]
    assert J == Jet.constant(Q(n + 1, 2), n + 1, J.order, normal=0)
    rho = rho_of(m.metric, m.sigma, n, J)
    assert rho == m.expected["ambient_rho"].truncate(rho.order)


# --- conjugation ----------------------------------------------------------------


def test_conjugation_defect_models():
    for m in (ball_sphere(2, order=7), hyperbolic_shell(2, order=7)):
        robin = adapted_robin_for(m, order=5)
        rng = random.Random(11)
        u = random_ambient_scalar(rng, 3, deg=2, zero_at_base=False, normal=0).truncate(5)
        assert not conjugation_defect(robin, LAMBDA, u)
        assert not conjugation_defect(robin, Q(1, 3), u)


def test_conjugation_defect_general_sigma():
    # the conjugation formula holds for every pair (g, sigma)
    rng = random.Random(13)
    d = 3
    w = Jet.variable(0, d, INF_ORDER, normal=0)
    x1 = Jet.variable(1, d, INF_ORDER, normal=0)
    sigma = w + w * w * Q(1, 3) + w * x1 * Q(1, 2)
    g = MetricJet(random_ambient_metric(rng, d, deg=2))
    ad = adapted_normal_form(g, sigma, EmbeddingJet(Jet(2, INF_ORDER, {})), 5)
    robin = AdaptedRobin(SlicedChart(ad))
    u = random_ambient_scalar(rng, d, deg=2, zero_at_base=False).truncate(5)
    assert not conjugation_defect(robin, LAMBDA, u)
    # constant-term identity: s*CT(Con)(lam) = lam(n+lam)(a-1) - lam s Delta(s)
    lhs, rhs = conjugation_constant_term(robin, LAMBDA)
    assert lhs == rhs


def test_conjugation_pe_form():
    # Poincare-Einstein form: -L(lam) = s^{lam-1}(Delta_{g+} - lam(n+lam)) s^{-lam}
    from yamabe.models import pe_toy

    m = pe_toy(2, order=8)
    ad = adapted_normal_form(m.metric, m.sigma, m.embedding, 5)
    robin = AdaptedRobin(SlicedChart(ad))
    rng = random.Random(17)
    u_j = random_ambient_scalar(rng, 3, deg=2, zero_at_base=False).truncate(5)
    u = Series.from_chart_jet(u_j, 5)
    w = u.with_offset_shift(-LAMBDA)
    rhs = (robin.singular_laplacian(w) - (LAMBDA * (2 + LAMBDA)) * w).with_offset_shift(
        LAMBDA - 1
    ).deoffset()
    lhs = -robin.apply(LAMBDA, u)
    # identity multiplied by s (both sides lifted by one power)
    assert robin.s * lhs == robin.s * rhs


# --- commutators -----------------------------------------------------------------


def test_sl2_commutator_general():
    rng = random.Random(19)
    d = 3
    w = Jet.variable(0, d, INF_ORDER, normal=0)
    x2 = Jet.variable(2, d, INF_ORDER, normal=0)
    sigma = w - w * w * Q(1, 4) + w * x2 * x2 * Q(1, 5)
    g = MetricJet(random_ambient_metric(rng, d, deg=2))
    ad = adapted_normal_form(g, sigma, EmbeddingJet(Jet(2, INF_ORDER, {})), 5)
    robin = AdaptedRobin(SlicedChart(ad))
    u = Series.from_chart_jet(
        random_ambient_scalar(rng, d, deg=2, zero_at_base=False).truncate(5), 5
    )
    assert not commutator_defect(robin, LAMBDA, u)


def test_sl2_commutator_sc1_model():
    robin = adapted_robin_for(ball_sphere(2, order=7), order=5)
    rng = random.Random(23)
    u = Series.from_chart_jet(
        random_ambient_scalar(rng, 3, deg=2, zero_at_base=False).truncate(5), 5
    )
    assert not commutator_defect(robin, Q(2, 3), u)


def test_ln_commutator_general():
    rng = random.Random(29)
    yd, robin = yamabe_robin(rng, 2, curved=True)
    u = Series.from_chart_jet(
        random_ambient_scalar(rng, 3, deg=2, zero_at_base=False).truncate(4), 4
    )
    assert not commutator_ln_defect(robin, LAMBDA, 2, u)
    assert not commutator_ln_defect(robin, Q(1, 2), 3, u)


@pytest.mark.parametrize("n", [2, 3])
def test_tangentiality_under_scy(n):
    rng = random.Random(31 + n)
    yd, robin = yamabe_robin(rng, n, curved=(n == 2), xb=2 if n == 2 else 1)
    psi = Series.from_chart_jet(
        random_ambient_scalar(rng, n + 1, deg=2, zero_at_base=False).truncate(4), 4
    )
    for N in range(1, n + 1):
        defect = tangential_defect(robin, N, psi)
        assert defect.order >= 0
        assert not defect


# --- extrinsic Laplacians and Q ---------------------------------------------------


def test_P1_vanishes():
    rng = random.Random(37)
    yd, robin = yamabe_robin(rng, 2)
    f = random_boundary_jet(rng, 2, 3)
    assert not extrinsic_laplacian(robin, 1, f)


def test_P2_closed_form():
    rng = random.Random(41)
    yd, robin = yamabe_robin(rng, 2)
    f = random_boundary_jet(rng, 2, 3)
    got = extrinsic_laplacian(robin, 2, f)
    bd = cf.BoundaryData(yd)
    expected = cf.P2_apply(bd, f)
    assert got.order >= 0
    assert got == expected


def test_P3_closed_form():
    rng = random.Random(43)
    yd, robin = yamabe_robin(rng, 3, xb=1, active=2)
    f = random_boundary_jet(rng, 3, 3, active=2)
    got = extrinsic_laplacian(robin, 3, f)
    bd = cf.BoundaryData(yd)
    expected = cf.P3_apply(bd, f)
    assert got.order >= 0
    assert got == expected


def test_Q2_closed_form_and_sphere():
    rng = random.Random(47)
    yd, robin = yamabe_robin(rng, 2)
    rec = q_curvature(robin, 2)
    bd = cf.BoundaryData(yd)
    assert rec.value == cf.Q2(bd)
    # unit sphere: Q_2 = -1 (J^h = 1, lo = 0); interior orientation
    m = ball_sphere(2, order=8)
    robin_s = adapted_robin_for(m, order=6)
    rec_s = q_curvature(robin_s, 2)
    assert rec_s.value.constant_term() == -1


def test_Q3_closed_forms():
    rng = random.Random(53)
    yd, robin = yamabe_robin(rng, 3, xb=1, active=2)
    rec = q_curvature(robin, 3)
    bd = cf.BoundaryData(yd)
    assert rec.value == cf.Q3(bd)
    rho_pp = yd.rho_data().taylor[2]
    assert rec.value == cf.Q3_rho(bd, rho_pp)


def test_Q3_subcritical_general_n():
    rng = random.Random(59)
    yd, robin = yamabe_robin(rng, 4, xb=1, active=2)
    rec = q_curvature(robin, 3)
    bd = cf.BoundaryData(yd)
    assert rec.value == cf.Q3(bd)


def test_Q3_umbilic_zero():
    m = ball_sphere(3, order=9)
    robin = adapted_robin_for(m, order=6)
    rec = q_curvature(robin, 3)
    assert not rec.value.constant_term()


# --- conformal covariance ----------------------------------------------------------


def test_L_conformal_covariance_symbolic():
    rng = random.Random(61)
    d = 3
    n = 2
    g = MetricJet(random_ambient_metric(rng, d, deg=2).map(lambda e: e.truncate(6)))
    w = Jet.variable(0, d, INF_ORDER, normal=0)
    sigma = (w + w * w * Q(1, 5)).truncate(7)
    phi = random_conformal_factor(rng, d, deg=2).truncate(6)
    u = random_ambient_scalar(rng, d, deg=2, zero_at_base=False).truncate(6)
    conf = jet_exp(2 * phi)
    ghat = MetricJet(JetMatrix([[conf * g.g[a, b] for b in range(d)] for a in range(d)]))
    sig_hat = jet_exp(phi) * sigma
    e_lam_phi = jet_exp(phi * LAMBDA)
    lhs = robin_apply(ghat, sig_hat, LAMBDA, e_lam_phi * u)
    rhs = jet_exp(phi * (LAMBDA - 1)) * robin_apply(g, sigma, LAMBDA, u)
    assert lhs.order >= 2 and lhs == rhs


@pytest.mark.parametrize("N", [2, 3])
def test_PN_conformal_covariance(N):
    # e^{((n+N)/2) iota*phi} Phat_N(e^{((-n+N)/2) iota*phi} f) = P_N(f), n = 3
    rng = random.Random(67 + N)
    n = 3
    d = 4
    yd = YamabeData(flat(d), EmbeddingJet(random_graph(rng, n, deg=2, active=2)),
                    tangential_order=1)
    robin = AdaptedRobin(SlicedChart(yd.adapted))
    f = random_boundary_jet(rng, n, 2, active=2)
    pn = extrinsic_laplacian(robin, N, f, check_extension=False)

    phi = random_conformal_factor(rng, d, deg=2, active=2)
    conf = jet_exp((2 * phi).truncate(yd.geo_order + 2))
    ghat = MetricJet(
        JetMatrix([[conf * e for e in row] for row in flat(d).g.entries]),
        check=False,
    )
    yd2 = YamabeData(ghat, yd.embedding, tangential_order=1)
    robin2 = AdaptedRobin(SlicedChart(yd2.adapted))
    # restrict phi to M through the graph
    from yamabe.charts import Composer

    comp = Composer(
        [yd.embedding.phi.truncate(8)] + [Jet.variable(i, n, INF_ORDER) for i in range(n)], 8
    )
    iphi = comp(phi)
    fhat = jet_exp((Q(-n + N, 2) * iphi).truncate(8)) * f
    pn_hat = extrinsic_laplacian(robin2, N, fhat, check_extension=False)
    lhs = jet_exp((Q(n + N, 2) * iphi).truncate(8)) * pn_hat
    assert lhs.order >= 0
    assert lhs == pn


def test_critical_Q_transformation_n2():
    # e^{2 iota*phi} Qhat_2 = Q_2 + P_2(iota*phi) at n = 2
    rng = random.Random(71)
    n = 2
    d = 3
    g = MetricJet(random_ambient_metric(rng, d, deg=2))
    emb = EmbeddingJet(random_graph(rng, n, deg=3))
    yd = YamabeData(g, emb)
    robin = AdaptedRobin(SlicedChart(yd.adapted))
    q2 = q_curvature(robin, 2).value
    phi = random_conformal_factor(rng, d, deg=2)
    conf = jet_exp((2 * phi).truncate(yd.geo_order + 2))
    ghat = MetricJet(JetMatrix([[conf * g.g[a, b] for b in range(d)] for a in range(d)]))
    yd2 = YamabeData(ghat, emb)
    robin2 = AdaptedRobin(SlicedChart(yd2.adapted))
    q2_hat = q_curvature(robin2, 2).value
    from yamabe.charts import Composer

    comp = Composer(
        [emb.phi.truncate(8)] + [Jet.variable(i, n, INF_ORDER) for i in range(n)], 8
    )
    iphi = comp(phi)
    lhs = jet_exp((n * iphi).truncate(8)) * q2_hat
    rhs = q2 + extrinsic_laplacian(robin, 2, iphi, check_extension=False)
    assert lhs.order >= 0
    assert lhs == rhs


# --- operator extraction and adjoints ----------------------------------------------


def test_extract_laplacian():
    rng = random.Random(73)
    h = MetricJet(random_ambient_metric(rng, 2, deg=2, normal=None).map(lambda e: e.truncate(6)))
    op = operator_extract(lambda u: laplacian(h, u), 2, 2, 6)
    hi = h.inverse()
    assert op.coefficient((2, 0)) == hi[0, 0]
    assert op.coefficient((0, 2)) == hi[1, 1]
    assert op.coefficient((1, 1)) == 2 * hi[0, 1]


def test_extract_roundtrip_synthesized():
    rng = random.Random(79)
    n = 2
    coeffs = {
        m: random_boundary_jet(rng, n, 3)
        for m in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1)]
    }
    op = ExtractedOperator(n, 2, coeffs)
    got = operator_extract(op.apply, n, 2, 6)
    for m, c in coeffs.items():
        cc = got.coefficient(m)
        assert (cc if cc is not None else c.zero_like()) == c


def test_extract_underestimated_order_raises():
    h = MetricJet(JetMatrix.identity(2, 2))
    with pytest.raises(JetError):
        operator_extract(lambda u: laplacian(h, u), 2, 1, 6)


def test_adjoint_of_partial():
    n = 2
    one = Jet.constant(1, n, 8)
    op = ExtractedOperator(n, 1, {(1, 0): Jet.constant(1, n)})
    adj = formal_adjoint(op, one)
    assert adj.coefficient((1, 0)) == Jet.constant(-1, n)
    assert not adj.coefficient((0, 0))


def test_laplacian_self_adjoint():
    rng = random.Random(83)
    h = MetricJet(random_ambient_metric(rng, 2, deg=2, normal=None).map(lambda e: e.truncate(6)))
    op = operator_extract(lambda u: laplacian(h, u), 2, 2, 6)
    w = h.sqrt_det()
    adj = formal_adjoint(op, w)
    u = random_boundary_jet(rng, 2, 4)
    assert adj.apply(u) == op.apply(u)


def test_double_adjoint_involution():
    rng = random.Random(89)
    n = 2
    coeffs = {
        m: random_boundary_jet(rng, n, 3)
        for m in [(0, 0), (1, 0), (2, 0), (1, 1), (0, 2)]
    }
    op = ExtractedOperator(n, 2, coeffs)
    w = 1 + random_boundary_jet(rng, n, 2, min_deg=1).truncate(6)
    dd = formal_adjoint(formal_adjoint(op, w), w)
    u = random_boundary_jet(rng, n, 4)
    assert dd.apply(u) == op.apply(u)


def test_robin_formal_adjoint_identity():
    # L(lam)* = L(-lam-n) w.r.t. dvol_g, as extracted operators
    rng = random.Random(97)
    yd, robin = yamabe_robin(rng, 2)
    diff = robin_adjoint_identity_defect(robin, LAMBDA, order=2, probe_order=3)
    u = random_ambient_scalar(rng, 3, deg=3, zero_at_base=False, normal=0).truncate(4)
    assert not diff.apply(u)


# --- leading terms ------------------------------------------------------------------


def test_P4_leading_symbol():
    # LT(P_4) = 9 Delta_h^2 at n = 4 (coefficients of orders 3 and 4 match)
    rng = random.Random(101)
    n = 4
    yd = YamabeData(flat(n + 1), EmbeddingJet(random_graph(rng, n, deg=2, active=2)),
                    tangential_order=2)
    robin = AdaptedRobin(SlicedChart(yd.adapted))
    bd = cf.BoundaryData(yd)
    h = bd.h

    def p4(f):
        return extrinsic_laplacian(robin, 4, f, check_extension=False)

    def delta2(f):
        return laplacian(h, laplacian(h, f))

    op = operator_extract(p4, n, 4, 4, normal=None)
    ref = operator_extract(delta2, n, 4, 4, normal=None)
    # principal symbol: exact jet equality of all fourth-order coefficients
    for m in {mm for mm in list(op.coeffs) + list(ref.coeffs) if sum(mm) == 4}:
        c_op = op.coefficient(m)
        c_ref = ref.coefficient(m)
        z = (c_op if c_op is not None else c_ref).zero_like()
        assert (c_op if c_op is not None else z) == 9 * (c_ref if c_ref is not None else z)
    # third-order parts agree where the symbol is evaluated, i.e. at the base point
    for m in {mm for mm in list(op.coeffs) + list(ref.coeffs) if sum(mm) == 3}:
        c_op = op.coefficient(m)
        c_ref = ref.coefficient(m)
        b_op = c_op.constant_term() if c_op is not None else 0
        b_ref = c_ref.constant_term() if c_ref is not None else 0
        assert b_op == 9 * b_ref


def test_P3_leading_symbol():
    # LT(P_3) = 8 delta(lo d): all first- and higher-order coefficients match
    rng = random.Random(103)
    yd, robin = yamabe_robin(rng, 3, xb=1, active=2)
    bd = cf.BoundaryData(yd)

    def p3(f):
        return extrinsic_laplacian(robin, 3, f, check_extension=False)

    op = operator_extract(p3, 3, 2, 2, normal=None)
    ref = operator_extract(lambda f: 8 * cf.delta_lo_d(bd, f), 3, 2, 2, normal=None)
    for m in set(op.coeffs) | set(ref.coeffs):
        if sum(m) == 0:
            continue
        a = op.coefficient(m)
        b = ref.coefficient(m)
        za = a if a is not None else Jet(3, 0, {})
        zb = b if b is not None else Jet(3, 0, {})
        assert za == zb
