"""Closed-form reference expressions for low-order coefficients.

These are independent oracles: each function rebuilds a quantity from raw
curvature/surface data, for exact comparison against the recursive engine.
Everything returns boundary jets over M.
"""

from __future__ import annotations

from .geometry import (
    MetricJet,
    curvature,
    divergence_form,
    divergence_sym2,
    hessian,
    inner_form,
    inner_sym2,
    laplacian,
    sum_jets,
    sym2_square,
    trace,
    trace_free,
    tr_power,
)
from .jets import Jet, JetError, JetMatrix, jet_inverse, jet_sqrt
from .scalars import Q


class BoundaryData:
    """Restrictions to M of chart curvature plus surface data, ready for formulas.

    Built from a YamabeData pipeline; `chart` selects the geodesic or adapted
    chart for the normal-derivative quantities (they agree at the orders the
    formulas use whenever the formula's statement allows either).
    """

    def __init__(self, yd, chart="adapted"):
        self.n = yd.n
        n = self.n
        surf = yd.surface
        self.h = MetricJet(surf.h)
        self.L = surf.L
        self.H = surf.H
        self.lo = surf.lo
        nf = yd.adapted if chart == "adapted" else yd.geo
        self.nf = nf
        from .geometry import ricci_scalar_j

        ricci, scal, J = ricci_scalar_j(nf.metric)
        d = n + 1
        # normal direction is variable 0 of the chart; restriction drops it
        self.Ric00 = ricci[0, 0].restrict()
        self.Ric0 = [ricci[0, i + 1].restrict() for i in range(n)]
        self.scal0 = scal.restrict()
        self.Jbar0 = J.restrict()
        self.Jbar0p = J.normal_coefficient(1)        # d_s J |_0
        self.Jbar0pp = 2 * J.normal_coefficient(2)   # d_s^2 J |_0
        inv = Q(1, d - 2) if d > 2 else None
        if inv is not None:
            self.P00 = (ricci[0, 0].restrict() - self.Jbar0) * inv
            self.P_tan = JetMatrix(
                [
                    [
                        (ricci[i + 1, j + 1].restrict()
                         - self.Jbar0 * nf.metric.g[i + 1, j + 1].restrict()) * inv
                        for j in range(n)
                    ]
                    for i in range(n)
                ]
            )
        self._pack_h = None
        self._G0 = None
        self._W0 = None

    @property
    def pack_h(self):
        if self._pack_h is None:
            self._pack_h = curvature(self.h)
        return self._pack_h

    @property
    def G0(self):
        """Restricted normal-normal curvature block R_{0 i j 0}."""
        if self._G0 is None:
            pack = self.nf.curvature()
            n = self.n
            self._G0 = JetMatrix(
                [[pack.riemann[0][i + 1][j + 1][0].restrict() for j in range(n)]
                 for i in range(n)]
            )
        return self._G0

    @property
    def W0(self):
        if self._W0 is None:
            pack = self.nf.curvature()
            n = self.n
            self._W0 = JetMatrix(
                [
                    [
                        (pack.weyl[0][i + 1][j + 1][0].restrict() if pack.weyl
                         else self.H.zero_like())
                        for j in range(n)
                    ]
                    for i in range(n)
                ]
            )
        return self._W0

    # -- derived scalars -----------------------------------------------------

    def lo_sq(self):
        return inner_sym2(self.h, self.lo, self.lo)

    def tr_lo3(self):
        return tr_power(self.h, self.lo, 3)

    def fialkow(self):
        """F = iota* P^g - P^h + H lo + 1/2 H^2 h."""
        n = self.n
        return JetMatrix(
            [
                [
                    self.P_tan[i, j]
                    - self.pack_h.schouten[i, j]
                    + self.H * self.lo[i, j]
                    + self.H * self.H * self.h.g[i, j] / Q(2)
                    for j in range(n)
                ]
                for i in range(n)
            ]
        )

    def delta_delta_lo(self):
        return divergence_form(self.h, divergence_sym2(self.h, self.lo))

    def laplace_H(self):
        return laplacian(self.h, self.H)

    def u_coefficients(self, geo, upto):
        """u_k of u(r) = dvol_{h_r}/dvol_h from the geodesic chart."""
        det = geo.h_r.det()
        det0 = det.restrict()
        from .charts import embed_boundary

        ratio = det * jet_inverse(embed_boundary(det0), order=det.order)
        u = jet_sqrt(ratio, order=det.order)
        return [u.normal_coefficient(k) for k in range(upto + 1)]


# -- sigma coefficients -------------------------------------------------------


def sigma2(bd: BoundaryData):
    return bd.H / Q(2)


def sigma3(bd: BoundaryData):
    """6 sigma_(3) = -2 P00 - 2 |lo|^2/(n-1)."""
    n = bd.n
    return (-2 * bd.P00 - 2 * bd.lo_sq() / Q(n - 1)) / Q(6)


def sigma3_v(bd, u):
    n = bd.n
    return u[2] * Q(2, 3 * (n - 1)) - u[1] * u[1] / Q(3 * n) + bd.Jbar0 / Q(3 * (n - 1))


def sigma4_v(bd, u, sig2):
    """Lemma sigma-v, general backgrounds (n >= 3)."""
    n = bd.n
    lap_s2 = laplacian(bd.h, sig2)
    return (
        u[3] * Q(3, 4 * (n - 2))
        - u[1] * u[2] * Q(9 * n * n - 20 * n + 7, 12 * n * (n - 1) * (n - 2))
        + u[1] ** 3 * Q(6 * n * n - 11 * n + 1, 24 * n * n * (n - 2))
        + u[1] * bd.Jbar0 * Q(2 * n - 1, 6 * n * (n - 1) * (n - 2))
        + bd.Jbar0p * Q(1, 4 * (n - 2))
        + lap_s2 * Q(1, 4 * (n - 2))
    )


def sigma4_flat(bd: BoundaryData):
    """Lemma sigma-flat: flat background, any n >= 3."""
    n = bd.n
    return (
        6 * bd.tr_lo3()
        + bd.H * bd.lo_sq() * Q(7 * n - 11, n - 1)
        + 3 * bd.laplace_H()
    ) / Q(24 * (n - 2))


def sigma3_flat(bd: BoundaryData):
    n = bd.n
    return -bd.lo_sq() / Q(3 * (n - 1))


def laplace_variation(bd: BoundaryData, u):
    """Delta'(u): first variation of Delta_h along h_s' = 2L:

    -2 H Delta u + (n-2)(dH, du) - 2 delta(lo du).
    """
    n = bd.n
    h = bd.h
    du = [u.deriv(i) for i in range(n)]
    dH = [bd.H.deriv(i) for i in range(n)]
    lo_du = _form_times_sym2(h, bd.lo, du)
    return (
        -2 * bd.H * laplacian(h, u)
        + (n - 2) * inner_form(h, dH, du)
        - 2 * divergence_form(h, lo_du)
    )


def _form_times_sym2(h, b, omega):
    """(b omega)_i = b_ij h^{jk} omega_k."""
    n = h.dim
    hi = h.inverse()
    return [
        sum_jets(b[i, j] * hi[j, k] * omega[k] for j in range(n) for k in range(n))
        for i in range(n)
    ]


def sigma5_v(bd, u, sig2, sig3):
    """Lemma sigma-5, general backgrounds (n not in {1, 2, 3})."""
    n = bd.n
    h = bd.h
    ds2 = [sig2.deriv(i) for i in range(n)]
    lap_s2 = laplacian(h, sig2)
    lap_s3 = laplacian(h, sig3)
    var_s2 = laplace_variation(bd, sig2)
    J, Jp, Jpp = bd.Jbar0, bd.Jbar0p, bd.Jbar0pp
    return (
        -inner_form(h, ds2, ds2) * Q(n + 1, 10 * (n - 3))
        + var_s2 * Q(1, 5 * (n - 3))
        + lap_s3 * Q(1, 5 * (n - 3))
        + lap_s2 * u[1] * Q(3 * n - 1, 20 * (n - 3) * (n - 2) * n)
        + Jpp * Q(1, 10 * (n - 3))
        + Jp * u[1] * Q(n - 1, 4 * (n - 3) * (n - 2) * n)
        + J * u[2] * Q(2 * (3 * n - 5), 15 * (n - 3) * (n - 1) ** 2)
        - J * u[1] ** 2 * Q(4 * n - 3, 20 * (n - 2) * (n - 1) * n)
        + J * J * Q(1, 30 * (n - 1) ** 2)
        + u[1] ** 2 * u[2] * Q(48 * n**4 - 247 * n**3 + 387 * n**2 - 179 * n + 3,
                               60 * (n - 3) * (n - 2) * (n - 1) * n**2)
        - u[2] ** 2 * Q(2 * (3 * n**2 - 11 * n + 10), 15 * (n - 3) * (n - 1) ** 2)
        - u[1] ** 4 * Q(24 * n**4 - 110 * n**3 + 133 * n**2 - 24 * n - 3,
                        120 * (n - 3) * (n - 2) * n**3)
        - u[1] * u[3] * Q(16 * n**2 - 53 * n + 27, 20 * (n - 3) * (n - 2) * n)
        + u[4] * Q(4, 5 * (n - 3))
    )


# -- rho Taylor coefficients ---------------------------------------------------


def rho0(bd: BoundaryData):
    return -bd.H


def rho0_prime(bd: BoundaryData):
    return bd.P00 + bd.lo_sq() / Q(bd.n - 1)


def rho0_doubleprime(bd: BoundaryData):
    """Lemma for the second s-derivative of rho at s=0, n >= 3."""
    n = bd.n
    dd_lo = bd.delta_delta_lo()
    div_ric = divergence_form(bd.h, bd.Ric0)
    F = bd.fialkow()
    return (
        -dd_lo / Q((n - 1) * (n - 2))
        - div_ric / Q(n - 1)
        - inner_sym2(bd.h, bd.lo, F) * Q(n - 1, n - 2)
        + inner_sym2(bd.h, bd.lo, bd.pack_h.schouten) * Q(n - 3, n - 2)
        - bd.H * bd.Ric00 * Q(n + 1, n - 1)
        + bd.H * bd.scal0 / Q(n - 1)
        - bd.H * bd.lo_sq() * Q(n + 1, n - 1)
        + bd.Jbar0p
    )


def rho0_doubleprime_flat_n3(bd: BoundaryData):
    """rho_0'' = -Delta H - 2 tr(lo^3) - 2 H |lo|^2 (flat background, n=3)."""
    return -bd.laplace_H() - 2 * bd.tr_lo3() - 2 * bd.H * bd.lo_sq()


# -- obstructions ---------------------------------------------------------------


def B1(bd: BoundaryData):
    return bd.H.zero_like()


def B2(bd: BoundaryData, form=1):
    """eq. for the surface obstruction, both displayed forms (n=2)."""
    common = bd.H * bd.lo_sq() + inner_sym2(bd.h, bd.lo, bd.P_tan)
    if form == 1:
        return -(bd.delta_delta_lo() + common) / Q(3)
    div_ric = divergence_form(bd.h, bd.Ric0)
    return -(bd.laplace_H() + div_ric + common) / Q(3)


def B3_flat(bd: BoundaryData):
    """12 B_3 = Delta|lo|^2 + 12 |dH|^2 + 6 (lo, Hess H) + |lo|^4 + 6 H tr(lo^3)."""
    h = bd.h
    n = bd.n
    lo2 = bd.lo_sq()
    dH = [bd.H.deriv(i) for i in range(n)]
    return (
        laplacian(h, lo2)
        + 12 * inner_form(h, dH, dH)
        + 6 * inner_sym2(h, bd.lo, hessian(h, bd.H))
        + lo2 * lo2
        + 6 * bd.H * bd.tr_lo3()
    ) / Q(12)


def B3_conformally_flat(bd: BoundaryData):
    """6 B_3 = 3 (delta delta + (P^h, .))((lo^2)o) + |lo|^4."""
    h = bd.h
    lo2m = sym2_square(h, bd.lo)
    lo2_tf = trace_free(h, lo2m)
    dd = divergence_form(h, divergence_sym2(h, lo2_tf))
    lo2 = bd.lo_sq()
    return (3 * dd + 3 * inner_sym2(h, bd.pack_h.schouten, lo2_tf) + lo2 * lo2) / Q(6)


# -- renormalized volume coefficients -------------------------------------------


def v1(bd: BoundaryData):
    return (bd.n - 1) * bd.H


def v2(bd: BoundaryData):
    """-2 v_2 = Jbar_0 + (n-3) rho_0' - (n-3)(n-1) H^2."""
    n = bd.n
    return -(bd.Jbar0 + (n - 3) * rho0_prime(bd) - (n - 3) * (n - 1) * bd.H**2) / Q(2)


def v3(bd: BoundaryData, rho_pp):
    """6 v_3 = (n-5)(n-3)(n-1)H^3 - (n-5)(3n-5) H rho_0' - (3n-7) H Jbar_0
               - (n-5) rho_0'' - 2 Jbar_0'."""
    n = bd.n
    return (
        (n - 5) * (n - 3) * (n - 1) * bd.H**3
        - (n - 5) * (3 * n - 5) * bd.H * rho0_prime(bd)
        - (3 * n - 7) * bd.H * bd.Jbar0
        - (n - 5) * rho_pp
        - 2 * bd.Jbar0p
    ) / Q(6)


def w1(bd: BoundaryData):
    return (bd.n - 1) * bd.H / Q(2)


def w2(bd: BoundaryData):
    """2(n-1)(n-2) w_2 from the stated curvature combination (n >= 3)."""
    n = bd.n
    Jh = bd.pack_h.J
    comb = (
        -bd.lo_sq() * Q(n - 5, n - 1)
        - 2 * (n - 2) * bd.Jbar0
        + 2 * (n - 5) * Jh
        + bd.H**2 * Q((n - 2) * (n - 3), 2)
    )
    return comb * Q(1, 12)


# -- extrinsic Q and P ------------------------------------------------------------


def Q2(bd: BoundaryData):
    """-Q_2 = J^h - |lo|^2 / (2(n-1))."""
    n = bd.n
    return -(bd.pack_h.J - bd.lo_sq() / Q(2 * (n - 1)))


def P2_apply(bd: BoundaryData, f: Jet):
    """P_2 = Delta_h - (n/2 - 1)(J^h - |lo|^2/(2(n-1)))."""
    n = bd.n
    return laplacian(bd.h, f) + Q(n - 2, 2) * Q2(bd) * f


def Q3(bd: BoundaryData):
    """(1/4) Q_3 = (dd(lo) - (n-3)(lo, P^h) + (n-1)(lo, F)) / (n-2)."""
    n = bd.n
    return 4 * (
        bd.delta_delta_lo()
        - (n - 3) * inner_sym2(bd.h, bd.lo, bd.pack_h.schouten)
        + (n - 1) * inner_sym2(bd.h, bd.lo, bd.fialkow())
    ) / Q(n - 2)


def Q3_rho(bd: BoundaryData, rho_pp):
    """(1/4) Q_3 = Delta H + H Jbar_0 + nabla_N(Jbar) - (n-1) H nabla_N(rho) - nabla_N^2(rho).

    Iterated gradients translate to s-derivatives via nabla_N = d_s and
    nabla_N^2 = d_s^2 + 2 H d_s at s=0.
    """
    n = bd.n
    grad_J = bd.Jbar0p
    grad_rho = rho0_prime(bd)
    grad2_rho = rho_pp + 2 * bd.H * grad_rho
    return 4 * (
        bd.laplace_H()
        + bd.H * bd.Jbar0
        + grad_J
        - (n - 1) * bd.H * grad_rho
        - grad2_rho
    )


def P3_apply(bd: BoundaryData, f: Jet):
    """P_3 = 8 delta(lo d) + ((n-3)/2)(4/(n-2))(dd(lo) - (n-3)(lo,P^h) + (n-1)(lo,F))."""
    n = bd.n
    h = bd.h
    df = [f.deriv(i) for i in range(n)]
    lo_df = _form_times_sym2(h, bd.lo, df)
    lead = 8 * divergence_form(h, lo_df)
    zeroth = Q(n - 3, 2) * Q(4, n - 2) * (
        bd.delta_delta_lo()
        - (n - 3) * inner_sym2(h, bd.lo, bd.pack_h.schouten)
        + (n - 1) * inner_sym2(h, bd.lo, bd.fialkow())
    )
    return lead + zeroth * f


def delta_lo_d(bd: BoundaryData, f: Jet):
    """delta(lo d f)."""
    df = [f.deriv(i) for i in range(bd.n)]
    return divergence_form(bd.h, _form_times_sym2(bd.h, bd.lo, df))
