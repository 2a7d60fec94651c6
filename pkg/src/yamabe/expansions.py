"""Renormalized volume coefficients, formal eigenfunction solution operators,
residue families by two independent representations, holographic Q-formulas,
and the (single, quarantined) floating-point volume-expansion check.
"""

from __future__ import annotations

from math import comb, factorial

from .jets import INF_ORDER, Jet, JetError, jet_inverse
from .robin import (
    AdaptedRobin,
    ExtractedOperator,
    extrinsic_laplacian,
    formal_adjoint,
    operator_extract,
    robin_apply,
)
from .scalars import LAMBDA, LambdaRational, Q, lambda_residue
from .scy import _det_sqrt_series
from .series import Series, SlicedChart


class VolumeCoeffs:
    """u_k (geodesic), v_k and ring-v (adapted), w_k (geodesic renormalized)."""

    def __init__(self, n, u, v, w, ring_v, v_series, ring_v_series):
        self.n = n
        self.u = u
        self.v = v
        self.w = w
        self.ring_v = ring_v
        self.v_series = v_series
        self.ring_v_series = ring_v_series

    def coefficient(self, family, k):
        return getattr(self, family)[k]


def volume_coeffs(yd, upto=None) -> VolumeCoeffs:
    """All three coefficient families of a Yamabe pipeline, slice-exact."""
    n = yd.n
    if upto is None:
        upto = n + 1
    geo_sl = SlicedChart(yd.geo, bound=upto + 1)
    u_series = _det_sqrt_series(geo_sl)
    u = [u_series.slice(k) for k in range(upto + 1)]
    ad_sl = SlicedChart(yd.adapted, bound=upto + 1)
    ring_v_series = _det_sqrt_series(ad_sl)
    a_inv_sqrt = ad_sl.a.inverse().sqrt()
    v_series = a_inv_sqrt * ring_v_series
    v = [v_series.slice(k) for k in range(upto + 1)]
    ring_v = [ring_v_series.slice(k) for k in range(upto + 1)]
    # w(r) = (sigma_F / r)^{-(n+1)} u(r) in the geodesic chart
    sig = yd.sigma()
    sig_series = Series.from_chart_jet(sig.sigma_jet, upto + 2).shift(-1)
    w_series = _series_inv_power(sig_series, n + 1) * u_series
    w = [w_series.slice(k) for k in range(upto + 1)]
    return VolumeCoeffs(n, u, v, w, ring_v, v_series, ring_v_series)


def _series_inv_power(series: Series, p: int) -> Series:
    inv = series.inverse()
    out = inv
    for _ in range(p - 1):
        out = out * inv
    return out


def adapted_volume_series(robin: AdaptedRobin):
    """(v, ring_v) series over an AdaptedRobin's chart."""
    sl = robin.sl
    ring_v = _det_sqrt_series(sl)
    return sl.a.inverse().sqrt() * ring_v, ring_v


# -- solution operators ---------------------------------------------------------


class SolutionSeries:
    """Sum_{j<=N} s^{lam+j} T_j(lam)(f) with exact lam-rational coefficients."""

    def __init__(self, robin, f, N, lam, terms):
        self.robin = robin
        self.f = f
        self.N = N
        self.lam = lam
        self.terms = terms  # list of boundary jets, terms[j] = T_j(lam)(f)

    def series(self) -> Series:
        return Series(self.robin.n, self.N, dict(enumerate(self.terms)),
                      LambdaRational.of(self.lam))

    def eigen_defect(self) -> Series:
        """(Delta_{s^{-2}g} + lam(n-lam)) u, which must vanish through s^{lam+N}."""
        robin = self.robin
        n = robin.n
        lam = LambdaRational.of(self.lam)
        u = self.series()
        return robin.singular_laplacian(u) + (lam * (n - lam)) * u


def solution_series(robin: AdaptedRobin, f: Jet, N, lam=LAMBDA) -> SolutionSeries:
    """Solve the eigenfunction recursion for T_j(lam)(f), j <= N.

    The coefficient of s^{lam+k} in the eigen-equation is
    k(2 lam + k - n) T_k + (known), which pins T_k with simple poles at
    lam = (n-k)/2.
    """
    n = robin.n
    if N > robin.sl.bound:
        raise JetError("solution series exceeds the chart bound")
    lam = LambdaRational.of(lam)
    terms = [f]
    for k in range(1, N + 1):
        u = Series(n, k, dict(enumerate(terms)), lam)
        defect = robin.singular_laplacian(u) + (lam * (n - lam)) * u
        c = _coefficient_at(defect, lam, k)
        denom = LambdaRational.of(k) * (2 * lam + k - n)
        if not denom:
            raise JetError(f"solution operator T_{k} hits its pole at lam={lam}")
        terms.append(c.map_coeffs(lambda x: -(LambdaRational.of(x) / denom)))
    return SolutionSeries(robin, f, N, lam, terms)


def _coefficient_at(series: Series, base, power):
    """Coefficient of s^{base+power} in a series graded by base + integer."""
    off = LambdaRational.of(series.offset if series.offset is not None else 0)
    delta = off - LambdaRational.of(base)
    if not delta.is_constant():
        raise JetError("series offset does not differ from base by an integer")
    c = delta.as_fraction()
    if c.denominator != 1:
        raise JetError("series offset does not differ from base by an integer")
    return series.slice(power - int(c))


def extract_solution_operators(robin: AdaptedRobin, N, lam=LAMBDA, probe_order=None):
    """T_0..T_N as ExtractedOperators on M (differential order 2 floor(j/2))."""
    n = robin.n
    if probe_order is None:
        probe_order = max(2, robin.sl.bound - 1)
    ops = []
    for j in range(N + 1):
        order = 2 * (j // 2)

        def fn(f, _j=j):
            return solution_series(robin, f, _j, lam).terms[_j]

        ops.append(operator_extract(fn, n, order, probe_order))
    return ops


def shift_operator_lambda(op: ExtractedOperator, c) -> ExtractedOperator:
    """Substitute lam -> lam + c in all coefficient jets."""
    return op.map_coeffs(
        lambda jet: jet.map_coeffs(
            lambda v: v.shift(c) if isinstance(v, LambdaRational) else v
        )
    )


def evaluate_operator_lambda(op: ExtractedOperator, x) -> ExtractedOperator:
    """Evaluate lam at a rational point in all coefficient jets."""
    return op.map_coeffs(
        lambda jet: jet.map_coeffs(
            lambda v: v(x) if isinstance(v, LambdaRational) else v
        )
    )


# -- residue families --------------------------------------------------------------


class ResidueFamilyValue:
    def __init__(self, N, lam, value):
        self.N = N
        self.lam = lam
        self.value = value  # boundary jet


def residue_family_direct(robin: AdaptedRobin, N, lam, psi) -> ResidueFamilyValue:
    """D_N^res(lam) via iota* L_N(lam) in the adapted chart."""
    if isinstance(psi, Jet):
        psi = Series.from_chart_jet(psi, robin.sl.bound)
    lam = LambdaRational.of(lam)
    return ResidueFamilyValue(N, lam, robin.compose(lam, N, psi).slice(0))


def pochhammer(a, N):
    out = LambdaRational.of(1)
    for i in range(N):
        out = out * (LambdaRational.of(a) + i)
    return out


def residue_family_solrep(robin: AdaptedRobin, N, lam, psi, v_coeffs=None,
                          t_ops=None, weight=None) -> ResidueFamilyValue:
    """D_N^res(lam) through solution operators and volume coefficients:

    N! (2 lam + n - 2N + 1)_N  sum_{j=0}^N (1/j!)
        sum_{k+m=N-j} T_k^*(lam+n-N)( v_m iota* d_s^j psi ).
    """
    n = robin.n
    lam = LambdaRational.of(lam)
    if isinstance(psi, Jet):
        psi = Series.from_chart_jet(psi, robin.sl.bound)
    if v_coeffs is None:
        v_series, _ = adapted_volume_series(robin)
        v_coeffs = [v_series.slice(k) for k in range(N + 1)]
    if t_ops is None:
        t_ops = extract_solution_operators(robin, N)
    if weight is None:
        weight = _boundary_weight(robin)
    if lam == LAMBDA:
        shifted = [shift_operator_lambda(op, n - N) for op in t_ops]
    else:
        shifted = [evaluate_operator_lambda(op, lam.as_fraction() + n - N) for op in t_ops]
    adj = [formal_adjoint(op, weight) for op in shifted]
    acc = None
    for j in range(N + 1):
        base = psi.slice(j) * factorial(j)  # iota* d_s^j psi
        inner = None
        for k in range(N - j + 1):
            m = N - j - k
            t = adj[k].apply(v_coeffs[m] * base)
            inner = t if inner is None else inner + t
        term = inner * Q(1, factorial(j))
        acc = term if acc is None else acc + term
    norm = pochhammer(2 * lam + n - 2 * N + 1, N) * factorial(N)
    if lam != LAMBDA:
        norm = norm.as_fraction() if norm.is_constant() else norm
    out = acc.map_coeffs(lambda c: c * norm)
    return ResidueFamilyValue(N, lam, out)


def _boundary_weight(robin: AdaptedRobin) -> Jet:
    """sqrt(det h) on M (the adapted chart has h(0) = id)."""
    h0 = robin.sl.nf.boundary_metric()
    from .geometry import MetricJet

    return MetricJet(h0).sqrt_det()


# -- extrinsic Q via holographic formulas ---------------------------------------------


def holographic_q_critical(robin: AdaptedRobin, t_ops=None, weight=None) -> Jet:
    """Q_n = (-1)^n (n-1)!^2 sum_{k<n} (1/(n-1-2k)) T_k*(0)((n-1)(n-k) v_{n-k}
    + 2k (vJ)_{n-k-2})."""
    n = robin.n
    v_series, _ = adapted_volume_series(robin)
    vJ = v_series * robin.sl.J
    if t_ops is None:
        t_ops = extract_solution_operators(robin, n - 1, lam=Q(0))
    else:
        t_ops = [evaluate_operator_lambda(op, Q(0)) for op in t_ops]
    if weight is None:
        weight = _boundary_weight(robin)
    adj = [formal_adjoint(op, weight) for op in t_ops]
    acc = None
    for k in range(n):
        arg = (n - 1) * (n - k) * v_series.slice(n - k)
        if k >= 1 and n - k - 2 >= 0:
            arg = arg + 2 * k * vJ.slice(n - k - 2)
        t = adj[k].apply(arg) * Q(1, n - 1 - 2 * k)
        acc = t if acc is None else acc + t
    sign = 1 if n % 2 == 0 else -1
    return acc * Q(sign * factorial(n - 1) ** 2)


def holographic_q_subcritical(robin: AdaptedRobin, N, t_ops=None, weight=None) -> Jet:
    """Q_N = (-1)^N (N-1)!^2 sum_{k<N} (1/(2N-n-1-2k))
    T_k*((n-N)/2)((N-1)(N-k) v_{N-k} + (n-N+2k)(vJ)_{N-k-2})."""
    n = robin.n
    mu = Q(n - N, 2)
    v_series, _ = adapted_volume_series(robin)
    vJ = v_series * robin.sl.J
    if t_ops is None:
        t_ops = extract_solution_operators(robin, N - 1, lam=mu)
    else:
        t_ops = [evaluate_operator_lambda(op, mu) for op in t_ops]
    if weight is None:
        weight = _boundary_weight(robin)
    adj = [formal_adjoint(op, weight) for op in t_ops]
    acc = None
    for k in range(N):
        arg = (N - 1) * (N - k) * v_series.slice(N - k)
        if k >= 1 and N - k - 2 >= 0:
            arg = arg + (n - N + 2 * k) * vJ.slice(N - k - 2)
        denom = 2 * N - n - 1 - 2 * k
        if denom == 0:
            raise JetError("holographic formula hits a vanishing fraction (odd n case)")
        t = adj[k].apply(arg) * Q(1, denom)
        acc = t if acc is None else acc + t
    sign = 1 if N % 2 == 0 else -1
    return acc * Q(sign * factorial(N - 1) ** 2)


def reduction_identity_defect(robin: AdaptedRobin, k) -> Jet:
    """eq.: iota* d_s^k(v Ldot(0)(1)) + (n-1)/(n-1-2k) iota* d_s^{k+1}(v)
            + 2k(n-1-k)/(n-1-2k) iota* d_s^{k-1}(vJ),  for k < n/2 under SCY."""
    n = robin.n
    v_series, _ = adapted_volume_series(robin)
    ldot = (n - 1) * robin.rho - robin.s * robin.sl.J
    lhs = (v_series * ldot).normal_derivative_at_zero(k)
    t1 = v_series.normal_derivative_at_zero(k + 1) * Q(n - 1, n - 1 - 2 * k)
    out = lhs + t1
    if k >= 1:
        vJ = v_series * robin.sl.J
        out = out + vJ.normal_derivative_at_zero(k - 1) * Q(2 * k * (n - 1 - k), n - 1 - 2 * k)
    return out


def help2_defect(robin: AdaptedRobin) -> Jet:
    """iota* d_s^{n-1}(v Ldot(0)(1)) - iota* d_s^n(v), under SCY."""
    n = robin.n
    v_series, _ = adapted_volume_series(robin)
    ldot = (n - 1) * robin.rho - robin.s * robin.sl.J
    return (v_series * ldot).normal_derivative_at_zero(n - 1) - v_series.normal_derivative_at_zero(n)


def myst_a_defect(robin: AdaptedRobin) -> Jet:
    """iota* d_s^{n-1}(v [((n-1)rho - sJ) SC^{-1} + a d_s(SC^{-1})]) - iota* d_s^n(v),
    for arbitrary (g, sigma)."""
    n = robin.n
    v_series, _ = adapted_volume_series(robin)
    sc_inv = robin.sc.truncate(robin.sl.bound).inverse()
    ldot = (n - 1) * robin.rho - robin.s * robin.sl.J
    E = ldot * sc_inv + robin.sl.a * sc_inv.deriv_s()
    return (v_series * E).normal_derivative_at_zero(n - 1) - v_series.normal_derivative_at_zero(n)


def qtilde2(robin: AdaptedRobin):
    """Generalized Q-tilde_2 for arbitrary (g, sigma) at n = 2, two ways.

    Returns (composition route, closed form):
      route 1: iota* SC^{-1/2} Ltilde_1(-1)(E),  E = Ldot(0)(1) SC^{-1} + a d_s SC^{-1}
      route 2: iota*(|grad|^{-5}(rho^2 - rho SC' - 2 SC'^2) + |grad|^{-3}(J - rho' + SC'')).
    """
    n = robin.n
    if n != 2:
        raise JetError("qtilde2 is the n = 2 case")
    sl = robin.sl
    bound = sl.bound
    sc = robin.sc.truncate(bound)
    sc_inv = sc.inverse()
    ldot = (n - 1) * robin.rho - robin.s * sl.J
    E = ldot * sc_inv + sl.a * sc_inv.deriv_s()
    arg = sc_inv * E
    # Ltilde(-1) = L(-1) o SC^{-1}; the restriction needs iota* SC^{-1/2}
    l_applied = robin.apply(Q(-1), arg)
    sc0 = sc.slice(0)
    from .jets import jet_sqrt

    sc0_inv_sqrt = jet_inverse(jet_sqrt(sc0, order=sc0.order), order=sc0.order)
    route1 = sc0_inv_sqrt * l_applied.slice(0)

    grad = sl.a  # |grad sigma|^2 pulled back
    g0 = grad.slice(0)
    g0_sqrt = jet_sqrt(g0, order=g0.order)
    g0_inv = jet_inverse(g0_sqrt, order=g0.order)
    inv3 = g0_inv * jet_inverse(g0, order=g0.order)
    inv5 = inv3 * jet_inverse(g0, order=g0.order)
    scp = sc.deriv_s()
    rho0 = robin.rho.slice(0)
    scp0 = scp.slice(0)
    scpp0 = scp.deriv_s().slice(0)
    rhop0 = robin.rho.deriv_s().slice(0)
    J0 = sl.J.slice(0)
    route2 = inv5 * (rho0 * rho0 - rho0 * scp0 - 2 * scp0 * scp0) + inv3 * (
        J0 - rhop0 + scpp0
    )
    return route1, route2


def w_identity_1(yd) -> tuple[Jet, Jet]:
    """(iota* L(-n+1)((r/sigma)^{n-1}), -(n-1)^2 H / 2) in the geodesic chart."""
    n = yd.n
    geo = yd.geo
    sig = yd.sigma()
    bound = n + 3
    sig_series = Series.from_chart_jet(sig.sigma_jet, bound).shift(-1)
    ratio = _series_inv_power(sig_series, n - 1) if n > 1 else Series.constant(1, n, bound)
    arg = ratio.to_chart_jet()
    from .geometry import ricci_scalar_j

    J = geo.scalar_j()
    r = Jet.variable(0, n + 1, INF_ORDER, None, 0)
    val = robin_apply(geo.metric, sig.sigma_jet, Q(-n + 1), arg, n=n, J=J)
    lhs = val.restrict()
    rhs = -Q((n - 1) ** 2, 2) * yd.surface.H
    return lhs, rhs


def w_identity_2(yd) -> tuple[Jet, Jet]:
    """(iota* L(-n+1)L(-n+2)((r/sigma)^{n-2}), 2(n-1)(n-2) w_2closed form)."""
    n = yd.n
    geo = yd.geo
    sig = yd.sigma()
    bound = n + 3
    sig_series = Series.from_chart_jet(sig.sigma_jet, bound).shift(-1)
    ratio = _series_inv_power(sig_series, n - 2) if n > 2 else Series.constant(1, n, bound)
    arg = ratio.to_chart_jet()
    J = geo.scalar_j()
    from .scy import rho_of

    rho = rho_of(geo.metric, sig.sigma_jet, n, J)
    inner = robin_apply(geo.metric, sig.sigma_jet, Q(-n + 2), arg, n=n, J=J, rho=rho)
    outer = robin_apply(geo.metric, sig.sigma_jet, Q(-n + 1), inner, n=n, J=J, rho=rho)
    lhs = outer.restrict()
    from . import closed_forms as cf

    bd = cf.BoundaryData(yd, chart="geodesic")
    rhs = 2 * (n - 1) * (n - 2) * cf.w2(bd)
    return lhs, rhs


# -- numeric volume expansion (the single floating-point check) -------------------------


def volume_expansion_numeric(model_name, n, eps_list=(0.1, 0.05, 0.025, 0.0125),
                             extra_orders=12, s_top=0.25):
    """Quadrature check of the renormalized volume expansion on a homogeneous model.

    For the three built-ins the volume of {sigma > eps} factorizes exactly as
    vol(M, h) * integral of s^{-n-1} v(s) over (eps, s_top) plus an eps-free
    remainder, with v in closed form.  The adaptive quadrature of that density
    minus the exact expansion Sum_k v_k/(n-k) eps^{k-n} - v_n log eps
    (positive-power tail included up to n+extra_orders) must be constant in
    eps to the reported relative accuracy.
    """
    from .models import build_model

    m = build_model(model_name, n=n, order=max(n + extra_orders + 1, 8))
    if "v1d" not in m.expected:
        raise JetError(f"model {model_name} has no closed-form density")
    K = n + extra_orders
    v1d = m.expected["v1d"](K)
    coeffs = [float(v1d.coefficient((k,))) for k in range(K + 1)]

    def density(s):
        return s ** (-n - 1) * _poly_eval_float(v1d, s)

    def expansion(eps):
        out = 0.0
        import math

        for k in range(K + 1):
            if k == n:
                out -= coeffs[k] * math.log(eps)
            else:
                out += coeffs[k] / (n - k) * eps ** (k - n)
        return out

    results = []
    for eps in eps_list:
        integral = _adaptive_simpson(density, eps, s_top)
        # integral = expansion(eps) + C(s_top) exactly, up to the o(1) tail
        results.append((eps, integral, integral - expansion(eps)))
    consts = [r[2] for r in results]
    scale = max(abs(c) for c in consts) or 1.0
    spread = (max(consts) - min(consts)) / max(scale, 1e-30)
    # recover the coefficients by solving the linear model at the eps points
    fitted = _fit_expansion(results, coeffs, n, K)
    return {
        "model": model_name,
        "n": n,
        "eps": list(eps_list),
        "constant_terms": consts,
        "relative_spread": spread,
        "exact_coefficients": coeffs[: n + 1],
        "fitted": fitted,
    }


def _poly_eval_float(jet, s):
    out = 0.0
    for m, c in jet.coeffs.items():
        out += float(c) * s ** m[0]
    return out


def _adaptive_simpson(f, a, b, tol=1e-13, depth=60):
    def simpson(x0, x2):
        x1 = 0.5 * (x0 + x2)
        return (x2 - x0) / 6.0 * (f(x0) + 4.0 * f(x1) + f(x2)), x1

    def rec(x0, x2, whole, d):
        s_left, xl = simpson(x0, 0.5 * (x0 + x2))
        s_right, xr = simpson(0.5 * (x0 + x2), x2)
        if d <= 0 or abs(s_left + s_right - whole) < 15 * tol * max(1.0, abs(whole)):
            return s_left + s_right + (s_left + s_right - whole) / 15.0
        return rec(x0, 0.5 * (x0 + x2), s_left, d - 1) + rec(0.5 * (x0 + x2), x2, s_right, d - 1)

    whole, _ = simpson(a, b)
    return rec(a, b, whole, depth)


def _fit_expansion(results, coeffs, n, K):
    """Least-squares solve for (c_0..c_{n-1}, A) from the quadrature values,
    after subtracting the known positive-power tail."""
    import math

    eps = [r[0] for r in results]
    vals = []
    for e, integral, _ in results:
        tail = sum(coeffs[k] / (n - k) * (e ** (k - n) - 0.25 ** (k - n))
                   for k in range(n + 1, K + 1))
        vals.append(integral - tail)
    cols = n + 2  # c_0..c_{n-1}, A, V
    rows = []
    for e in eps:
        row = [(e ** (k - n) - 0.25 ** (k - n)) / (n - k) for k in range(n)]
        row.append(math.log(0.25) - math.log(e))
        row.append(1.0)
        rows.append(row)
    if len(eps) < cols:
        return None
    sol = _lstsq(rows, vals)
    return {
        "c": sol[:n],
        "A": sol[n],
        "exact_c": coeffs[:n],
        "exact_A": coeffs[n],
    }


def _lstsq(A, b):
    import math

    mdim = len(A[0])
    ata = [[sum(A[r][i] * A[r][j] for r in range(len(A))) for j in range(mdim)] for i in range(mdim)]
    atb = [sum(A[r][i] * b[r] for r in range(len(A))) for i in range(mdim)]
    for col in range(mdim):
        piv = max(range(col, mdim), key=lambda r: abs(ata[r][col]))
        ata[col], ata[piv] = ata[piv], ata[col]
        atb[col], atb[piv] = atb[piv], atb[col]
        inv = 1.0 / ata[col][col]
        ata[col] = [v * inv for v in ata[col]]
        atb[col] *= inv
        for r in range(mdim):
            if r != col and ata[r][col]:
                f = ata[r][col]
                ata[r] = [v - f * w for v, w in zip(ata[r], ata[col])]
                atb[r] -= f * atb[col]
    return atb
