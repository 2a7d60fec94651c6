"""Singular Yamabe machinery: SC functional, the sigma_F recursion, rho Taylor
coefficients, and the obstruction B_n by two independent routes.

All SCY-dependent computations run in the geodesic chart of the pair
(background, embedding): the metric there is dr^2 + h_r, the hypersurface is
{r = 0} and sigma_F is a polynomial in r with boundary-jet coefficients.  The
adapted chart is constructed on top of that.
"""

from __future__ import annotations

from math import comb, factorial

from .charts import (
    EmbeddingJet,
    NormalFormAdapted,
    NormalFormGeodesic,
    adapted_normal_form,
    embed_boundary,
    geodesic_normal_form,
)
from .geometry import (
    MetricJet,
    divergence_form,
    divergence_sym2,
    inner_sym2,
    laplacian,
    sum_jets,
    trace,
)
from .jets import INF_ORDER, Jet, JetError, JetMatrix, jet_inverse
from .scalars import Q
from .series import Series, SlicedChart


def rho_of(metric: MetricJet, sigma: Jet, n: int, J: Jet | None = None) -> Jet:
    """(n+1) rho = -Delta_g sigma - sigma J, in the given chart (dim n+1)."""
    if J is None:
        from .geometry import curvature

        J = curvature(metric).J
    return -(laplacian(metric, sigma) + sigma * J) / Q(n + 1)


def sc_functional(metric: MetricJet, sigma: Jet, n: int, J: Jet | None = None) -> Jet:
    """SC(g, sigma) = |d sigma|^2 + 2 sigma rho."""
    gi = metric.inverse()
    d = metric.dim
    ds = [sigma.deriv(a) for a in range(d)]
    norm2 = sum_jets(gi[a, b] * ds[a] * ds[b] for a in range(d) for b in range(d))
    return norm2 + 2 * sigma * rho_of(metric, sigma, n, J)


class SigmaExpansion:
    """sigma_F = r + sigma_(2) r^2 + ... + sigma_(m) r^m in the geodesic chart."""

    def __init__(self, n, coefficients, sigma_jet, residual=None):
        self.n = n
        self.coefficients = coefficients  # {k: boundary jet}, k = 2..m
        self.sigma_jet = sigma_jet        # chart jet in (r, x)
        self.residual = residual          # (SC - 1)/r^{n+1} when solved to m = n+1

    @property
    def order(self):
        return max(self.coefficients, default=1)


class Obstruction:
    """B_n (tangential jet on M) and the induced log coefficient."""

    def __init__(self, n, B):
        self.n = n
        self.B = B

    @property
    def log_coefficient(self):
        return self.B * Q(n := self.n + 1, 2 * (self.n + 2))


def solve_sigma(geo: NormalFormGeodesic, upto=None, chart=None) -> SigmaExpansion:
    """Recursively determine sigma_(k), k <= upto (default n+1), from SC = 1 + O(r^upto).

    The recursion runs slice-wise so that the tangential order of each
    coefficient degrades only through the Laplacians that genuinely act on it.
    """
    n = geo.n
    if upto is None:
        upto = n + 1
    if upto > n + 1:
        raise JetError(
            f"sigma_({n + 2}) is obstructed: the recursion coefficient n-k+2 vanishes at k={n + 2}"
        )
    sl = chart if chart is not None else SlicedChart(geo, bound=upto + 2)
    S = Series.coordinate(n)
    coeffs = {}
    for k in range(2, upto + 1):
        scs = sl.sc(S)
        c = scs.slice(k - 1)
        if c.order < 0:
            raise JetError(f"insufficient chart order for sigma_({k})")
        sig_k = c * Q(-(n + 1), 2 * k * (n - k + 2))
        coeffs[k] = sig_k
        S = S + Series(n, INF_ORDER, {k: sig_k})
    residual = None
    if upto == n + 1:
        defect = sl.sc(S) - 1
        for k in range(n + 1):
            if defect.slice(k):
                raise JetError(f"nonvanishing residual at order r^{k}; upstream bug")
        residual = defect.shift(-(n + 1))
    return SigmaExpansion(n, coeffs, S.to_chart_jet(), residual)


def obstruction_direct(geo: NormalFormGeodesic, sig: SigmaExpansion) -> Obstruction:
    """B_n = (r^{-n-1}(SC(g, sigma_F) - 1))|_{r=0}, by exact coefficient shift."""
    n = geo.n
    if sig.order < n + 1:
        raise JetError("sigma must be solved through sigma_(n+1)")
    if sig.residual is None:
        raise JetError("sigma expansion carries no residual")
    B = sig.residual.restrict()
    if B.order < 0:
        raise JetError("insufficient order for the obstruction; raise the chart orders")
    return Obstruction(n, B)


class RhoData:
    """rho in adapted coordinates plus its Taylor coefficients at s=0."""

    def __init__(self, rho_jet, taylor, J_jet, ring_v_log_deriv):
        self.rho = rho_jet
        self.taylor = taylor            # [rho_0, rho_0', rho_0'', ...] boundary jets
        self.J = J_jet
        self.f = ring_v_log_deriv       # ring_v'/ring_v as a chart jet

    def coefficient(self, k):
        return self.taylor[k]


def _log_deriv(jet, order):
    return jet.deriv(0) * jet_inverse(jet, order=order)


def _normal_derivative_at_zero(jet, k):
    return jet.normal_coefficient(k) * factorial(k)


def sliced_rho_data(sl: SlicedChart):
    """(rho, ring_v'/ring_v) as slice series over the adapted chart."""
    n = sl.n
    s = Series.coordinate(n)
    rho = sl.rho(s)
    ring_v = _det_sqrt_series(sl)
    f = ring_v.deriv_s() * ring_v.inverse()
    return rho, f


def _det_sqrt_series(sl: SlicedChart):
    """sqrt(det h_s / det h) slice-wise."""
    n = sl.n
    det = _slice_det([[sl.h[i][j] for j in range(n)] for i in range(n)])
    det0 = det.slice(0)
    det0_inv = jet_inverse(det0, order=det0.order)
    ratio = det * Series(n, det.bound, {0: det0_inv})
    return ratio.sqrt()


def _slice_det(rows):
    from .jets import det_subset_dp

    return det_subset_dp(rows)


def rho_taylor(ad: NormalFormAdapted, upto=None, cross_check=True, chart=None) -> RhoData:
    """Taylor coefficients of rho at s=0, directly and via the paper recursion.

    The recursion is only valid below order n (its coefficient n-k vanishes at
    k=n, which is the obstruction); requesting upto >= n raises.
    """
    n = ad.n
    if upto is None:
        upto = n - 1
    if cross_check and upto >= n:
        raise JetError(
            f"rho recursion hits the vanishing coefficient at k={n}; use the obstruction ops"
        )
    sl = chart if chart is not None else SlicedChart(ad)
    rho_s, f_s = sliced_rho_data(sl)
    if rho_s.min_slice_order(upto) < 0:
        raise JetError(f"adapted chart order too low for rho to order {upto}")
    taylor = [rho_s.normal_derivative_at_zero(k) for k in range(upto + 1)]
    if cross_check:
        fk = [f_s.normal_derivative_at_zero(k) for k in range(upto + 1)]
        Jk = [sl.J.normal_derivative_at_zero(k) for k in range(max(upto, 1))]
        rec = [taylor[0]]
        for k in range(1, upto + 1):
            rhs = -fk[k] - k * Jk[k - 1]
            for j in range(1, k + 1):
                rhs = rhs + 2 * j * comb(k, j) * rec[j - 1] * fk[k - j]
            rec.append(rhs / Q(n - k))
            if not (rec[k] == taylor[k]):
                raise JetError(f"rho recursion mismatch at order {k}")
    return RhoData(rho_s, taylor, sl.J, f_s)


def obstruction_adapted(ad: NormalFormAdapted) -> Obstruction:
    """Theorem-route obstruction from adapted data:

    (n+1)! B_n = -2 d_s^n(f)|0 + 4 sum_j j C(n,j) d_s^{j-1}(rho)|0 d_s^{n-j}(f)|0
                 - 2n d_s^{n-1}(J)|0,   f = ring_v'/ring_v.
    """
    n = ad.n
    data = rho_taylor(ad, upto=n - 1, cross_check=False)
    fk = [data.f.normal_derivative_at_zero(k) for k in range(n + 1)]
    if fk[n].order < 0 or any(t.order < 0 for t in data.taylor):
        raise JetError(f"adapted chart order too low for B_{n}")
    acc = -2 * fk[n] - 2 * n * data.J.normal_derivative_at_zero(n - 1)
    for j in range(1, n + 1):
        acc = acc + 4 * j * comb(n, j) * data.taylor[j - 1] * fk[n - j]
    return Obstruction(n, acc / Q(factorial(n + 1)))


def basic_r_defect(ad: NormalFormAdapted, rho_jet=None):
    """eq. (Basic-R) defect for arbitrary (g, sigma) in adapted coordinates:

    -s rho' + n rho + a ring_v'/ring_v + s J + (1/2) d_s(SC - 1)  == 0.
    """
    n = ad.n
    d = n + 1
    s = Jet.variable(0, d, INF_ORDER, None, 0)
    J = ad.scalar_j()
    rho = rho_jet if rho_jet is not None else rho_of(ad.metric, s, n, J)
    rv = ad.ring_v()
    f = _log_deriv(rv, rv.order)
    sc = ad.a + 2 * s * rho
    return -s * rho.deriv(0) + n * rho + ad.a * f + s * J + (sc - 1).deriv(0) / Q(2)


def bL_defect(ad: NormalFormAdapted):
    """Lemma rec: v'/v - (-(n-1) rho + 2 s rho' - s J)/(1-2 s rho), valid to O(s^n) under SCY."""
    n = ad.n
    d = n + 1
    s = Jet.variable(0, d, INF_ORDER, None, 0)
    J = ad.scalar_j()
    rho = rho_of(ad.metric, s, n, J)
    v = ad.density_v()
    lhs = _log_deriv(v, v.order)
    denom = 1 - 2 * s * rho
    rhs = (-(n - 1) * rho + 2 * s * rho.deriv(0) - s * J) * jet_inverse(denom, order=denom.order)
    return lhs - rhs


class YamabeData:
    """Full pipeline for one (background metric, embedding) pair at fixed n.

    Lazily builds: geodesic chart -> sigma_F -> adapted chart -> derived data.
    """

    def __init__(self, metric: MetricJet, embedding: EmbeddingJet, geo_order=None,
                 ad_order=None, xorder=None, ad_xorder=None, tangential_order=2,
                 sigma_order=None):
        self.n = embedding.n
        n = self.n
        xb = tangential_order
        target = n + 1 if sigma_order is None else sigma_order
        self.background = metric
        self.embedding = embedding
        # order policy: SC is needed slice-wise to r-degree target with the
        # B-coefficient still carrying xb tangential orders; the metric/J feed
        # costs ~3 orders (J + Laplacian + flow).  Boxes are isotropic -- cost
        # control for large n comes from active-variable-sparse inputs.
        self.geo_order = geo_order if geo_order is not None else target + xb + 3
        self.xorder = xorder
        self.ad_order = ad_order if ad_order is not None else n + 2 + xb
        self.ad_xorder = ad_xorder
        self._geo = None
        self._sigma = None
        self._adapted = None
        self._rho = None

    @property
    def geo(self) -> NormalFormGeodesic:
        if self._geo is None:
            self._geo = geodesic_normal_form(
                self.background, self.embedding, self.geo_order, self.xorder
            )
        return self._geo

    @property
    def surface(self):
        return self.geo.surface

    def sigma(self, upto=None) -> SigmaExpansion:
        if self._sigma is None or (upto is not None and self._sigma.order < upto):
            self._sigma = solve_sigma(self.geo, upto=upto)
        return self._sigma

    @property
    def adapted(self) -> NormalFormAdapted:
        """Adapted chart of (geodesic-chart metric, sigma_F)."""
        if self._adapted is None:
            sig = self.sigma()
            trivial = EmbeddingJet(Jet(self.n, INF_ORDER, {}))
            self._adapted = adapted_normal_form(
                self.geo.metric, sig.sigma_jet, trivial, self.ad_order, self.ad_xorder
            )
        return self._adapted

    def rho_data(self, upto=None) -> RhoData:
        if self._rho is None:
            self._rho = rho_taylor(self.adapted, upto=upto)
        return self._rho

    def obstruction(self, route="direct") -> Obstruction:
        if route == "direct":
            return obstruction_direct(self.geo, self.sigma())
        if route == "adapted":
            return obstruction_adapted(self.adapted)
        raise ValueError(f"unknown route {route!r}")


def b3_conformally_flat_check(data: YamabeData):
    """For n=3 and Weyl(g)=0: obstruction equals 6 B_3 = 3(dd + (P^h, .))((lo^2)o) + |lo|^4.

    Returns (B3_computed, B3_closed_form); both are boundary jets.
    """
    n = data.n
    if n != 3:
        raise JetError("the closed B_3 formula lives in n = 3")
    from .geometry import curvature as curv

    bg = MetricJet(data.background.g.map(lambda e: e.truncate(data.geo_order)), check=False)
    pack = curv(bg)
    d = n + 1
    if any(
        pack.W(i, j, k, l)
        for i in range(d) for j in range(d) for k in range(d) for l in range(d)
    ):
        raise JetError("background is not conformally flat (Weyl != 0)")
    B3 = data.obstruction("direct").B
    surf = data.surface
    hM = MetricJet(surf.h)
    pack_h = curv(hM)
    lo2 = _sym2_square(hM, surf.lo)
    lo2_tf = _trace_free(hM, lo2)
    dd = divergence_form(hM, divergence_sym2(hM, lo2_tf))
    lo_sq = inner_sym2(hM, surf.lo, surf.lo)
    closed = (3 * dd + 3 * inner_sym2(hM, pack_h.schouten, lo2_tf) + lo_sq * lo_sq) / Q(6)
    return B3, closed


def _sym2_square(metric, b):
    from .geometry import sym2_square

    return sym2_square(metric, b)


def _trace_free(metric, b):
    from .geometry import trace_free

    return trace_free(metric, b)
