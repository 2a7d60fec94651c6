"""Laplace-Robin operators and what they generate: compositions, conjugation,
commutators, tangential reduction to extrinsic conformal Laplacians, extrinsic
Q-curvatures, and operator extraction with formal adjoints.

All operator identities run in the adapted chart (sigma = s), where powers
s^lam are Series with a lam-offset and everything stays polynomial in lam.
A box-wise variant of L acting on chart jets is kept for work in other charts
(the w-coefficient identities use it in the geodesic chart).
"""

from __future__ import annotations

from math import comb, factorial

from .geometry import MetricJet, laplacian, sum_jets
from .jets import INF_ORDER, Jet, JetError, jet_inverse, monomials_up_to
from .scalars import LAMBDA, LambdaRational, Q, as_exact
from .series import Series, SlicedChart


def robin_apply(metric: MetricJet, sigma: Jet, lam, u: Jet, n=None, J=None, rho=None) -> Jet:
    """(n+2 lam-1)(grad_sigma u + lam rho u) - sigma (Delta u + lam J u), box-wise."""
    d = metric.dim
    if n is None:
        n = d - 1
    if J is None:
        from .geometry import ricci_scalar_j

        J = ricci_scalar_j(metric)[2]
    if rho is None:
        from .scy import rho_of

        rho = rho_of(metric, sigma, n, J)
    gi = metric.inverse()
    ds = [sigma.deriv(a) for a in range(d)]
    du = [u.deriv(a) for a in range(d)]
    grad_pair = sum_jets(gi[a, b] * ds[a] * du[b] for a in range(d) for b in range(d))
    return (n + 2 * lam - 1) * (grad_pair + lam * (rho * u)) - sigma * (
        laplacian(metric, u) + lam * (J * u)
    )


class AdaptedRobin:
    """L(lam) and its compositions over a sliced adapted chart (sigma = s)."""

    def __init__(self, sl: SlicedChart):
        self.sl = sl
        self.n = sl.n
        self.s = Series.coordinate(self.n)
        self.rho = sl.rho(self.s)
        self.sc = sl.sc(self.s)

    def apply(self, lam, u: Series) -> Series:
        sl = self.sl
        n = self.n
        grad_pair = sl.a * u.deriv_s()
        out = (n + 2 * lam - 1) * (grad_pair + lam * (self.rho * u))
        return out - self.s * (sl.laplacian(u) + lam * (sl.J * u))

    def compose(self, lam, N, u: Series) -> Series:
        """L_N(lam) = L(lam-N+1) o ... o L(lam)."""
        out = u
        for j in range(N):
            out = self.apply(lam - j, out)
        return out

    def compose_list(self, lams, u: Series) -> Series:
        """Apply L(lams[-1]) first, then L(lams[-2]), ... (composition order)."""
        out = u
        for lam in reversed(lams):
            out = self.apply(lam, out)
        return out

    def singular_laplacian(self, u: Series) -> Series:
        """Delta of s^{-2} G: s^2 Delta_G - (n-1) s a d_s (on any offset)."""
        lap = self.sl.laplacian(u)
        first = self.sl.a * u.deriv_s()
        s2 = self.s * self.s
        return s2 * lap - (self.n - 1) * (self.s * first)

    def extension(self, f: Jet, bound, extra=None) -> Series:
        """The s-independent extension of a boundary jet, plus optional slices."""
        slices = {0: f}
        if extra:
            slices.update(extra)
        return Series(self.n, bound, slices)


def conjugation_defect(robin: AdaptedRobin, lam, u, bound=None) -> Series:
    """s L(lam)(u) + s^lam Delta_{s^{-2}g}(s^{-lam} u) - lam(n+lam) SC u.

    Vanishes identically for every pair (g, sigma) -- the conjugation formula.
    `lam` may be a rational or the symbolic LAMBDA.
    """
    n = robin.n
    lamr = LambdaRational.of(lam)
    if isinstance(u, Jet):
        u = Series.from_chart_jet(u, bound if bound is not None else robin.sl.bound)
    w = u.with_offset_shift(-lamr)
    lap = robin.singular_laplacian(w)
    back = lap.with_offset_shift(lamr).deoffset()
    return robin.s * robin.apply(lamr, u) + back - (lamr * (n + lamr)) * (robin.sc * u)


def conjugation_constant_term(robin: AdaptedRobin, lam) -> tuple[Series, Series]:
    """(s * Con(lam)(1), lam(n+lam)(a-1) - lam s Delta(s)): the two sides of the
    constant-term identity for the conjugation operator."""
    n = robin.n
    lamr = LambdaRational.of(lam)
    one = Series.constant(1, robin.n, robin.sl.bound)
    w = one.with_offset_shift(-lamr)
    lap = robin.singular_laplacian(w)
    lhs = lap.with_offset_shift(lamr).deoffset() - (lamr * (n + lamr)) * one
    s = robin.s
    delta_s = robin.sl.laplacian(s)
    rhs = (lamr * (n + lamr)) * (robin.sl.a - one) - lamr * (s * delta_s)
    return lhs, rhs


def commutator_defect(robin: AdaptedRobin, lam, u: Series) -> Series:
    """L(lam+1)(s u) - s L(lam)(u) - (n+2 lam+1) SC u."""
    n = robin.n
    return (
        robin.apply(lam + 1, robin.s * u)
        - robin.s * robin.apply(lam, u)
        - (n + 2 * lam + 1) * (robin.sc * u)
    )


def commutator_ln_defect(robin: AdaptedRobin, lam, N, u: Series) -> Series:
    """L_N(lam) o s - s o L_N(lam-1) - N(n+2lam-N) L_{N-1}(lam-1)
       - sum_j (n+2lam-2j+1) [L(lam-N+1) o ... o (SC-1) o ... o L(lam-1)],

    where the j-th insertion has j-1 L-factors to its right.  Exact for all
    (g, sigma)."""
    n = robin.n
    lhs = robin.compose(lam, N, robin.s * u) - robin.s * robin.compose(lam - 1, N, u)
    rhs = N * (n + 2 * lam - N) * robin.compose(lam - 1, N - 1, u)
    sc_m1 = robin.sc - 1
    lams = [lam - N + 1 + i for i in range(N - 1)]  # N-1 factors, ascending
    for j in range(1, N + 1):
        # j-1 factors to the right of the insertion
        right = lams[N - j:] if j > 1 else []
        left = lams[: N - j]
        term = robin.compose_list(right, u)
        term = sc_m1 * term
        term = robin.compose_list(left, term)
        rhs = rhs + (n + 2 * lam - 2 * j + 1) * term
    return lhs - rhs


def tangential_defect(robin: AdaptedRobin, N, psi: Series) -> Jet:
    """iota* L_N((-n+N)/2)(s psi): zero under SCY for N <= n."""
    n = robin.n
    lam = Q(-n + N, 2)
    return robin.compose(lam, N, robin.s * psi).slice(0)


def extrinsic_laplacian(robin: AdaptedRobin, N, f: Jet, check_extension=True,
                        rng=None) -> Jet:
    """P_N f = iota* L_N((-n+N)/2)(extension of f), extension-independent under SCY."""
    n = robin.n
    if N > n:
        raise JetError(f"P_N needs N <= n (got N={N}, n={n})")
    lam = Q(-n + N, 2)
    bound = robin.sl.bound
    u = robin.extension(f, bound)
    out = robin.compose(lam, N, u).slice(0)
    if check_extension:
        extra = {}
        if rng is None:
            import random

            rng = random.Random(99)
        from .randgeo import random_boundary_jet

        for k in range(1, min(N, bound) + 1):
            extra[k] = random_boundary_jet(rng, self_n := robin.n, 2)
        out2 = robin.compose(lam, N, robin.extension(f, bound, extra)).slice(0)
        if not (out == out2):
            raise JetError(
                "extension dependence detected in P_N: SCY order insufficient"
            )
    return out


class QRecord:
    def __init__(self, N, n, value, critical, polynomial=None):
        self.N = N
        self.n = n
        self.value = value          # boundary jet
        self.critical = critical
        self.polynomial = polynomial  # Q_N(lam) where available

    def __repr__(self):
        kind = "critical" if self.critical else "subcritical"
        return f"QRecord(N={self.N}, {kind})"


def q_curvature(robin: AdaptedRobin, N) -> QRecord:
    """Extrinsic Q-curvature: P_N(1) = ((n-N)/2) Q_N subcritically; the critical
    Q_n is the exact lam-derivative of iota* L_n(lam)(1) at lam = 0, negated."""
    n = robin.n
    if N > n:
        raise JetError(f"Q_N needs N <= n (got N={N})")
    one = Series.constant(1, n, robin.sl.bound)
    if N < n:
        # -iota* L((-n-N)/2+1) o ... o L((-n+N)/2-1) ((N-1) rho - s J)
        seed = (N - 1) * robin.rho - robin.s * robin.sl.J
        lams = [Q(-n - N, 2) + 1 + i for i in range(N - 1)]
        val = -(robin.compose_list(lams, seed).slice(0))
        # invariant: P_N(1) = ((n-N)/2) Q_N
        pn1 = robin.compose(Q(-n + N, 2), N, one).slice(0)
        if not (pn1 == Q(n - N, 2) * val):
            raise JetError("Q_N invariant P_N(1) = ((n-N)/2) Q_N failed")
        return QRecord(N, n, val, False)
    # critical case: exact lambda-derivative at 0
    sym = robin.compose(LAMBDA, n, one).slice(0)
    val = -sym.map_coeffs(_lam_deriv_at0)
    # cross-check against the composition formula through L-dot(0)(1)
    seed = (n - 1) * robin.rho - robin.s * robin.sl.J
    lams = [Q(-n + 1) + i for i in range(n - 1)]
    val2 = -(robin.compose_list(lams, seed).slice(0))
    if not (val == val2):
        raise JetError("critical Q_n: lambda-derivative and composition routes differ")
    return QRecord(N, n, val, True)


def _lam_deriv_at0(c):
    if isinstance(c, LambdaRational):
        return c.deriv()(0)
    return Q(0)


def robin_adjoint_identity_defect(robin: AdaptedRobin, lam, order=2, probe_order=None):
    """Extract L(lam) over the chart and compare its formal adjoint (w.r.t.
    dvol_G) with L(-lam-n): Cor. of the conjugation formula, pointwise."""
    n = robin.n
    sl = robin.sl
    bound = sl.bound
    if probe_order is None:
        probe_order = max(2, bound - 2)

    def as_chart_op(lamv):
        def fn(u_chart: Jet) -> Jet:
            u = Series.from_chart_jet(u_chart, bound)
            return robin.apply(lamv, u).to_chart_jet()

        return fn

    lamr = LambdaRational.of(lam)
    op = operator_extract(as_chart_op(lamr), n + 1, order, probe_order, normal=0)
    w = sl.W.to_chart_jet()
    adj = formal_adjoint(op, w)
    op2 = operator_extract(as_chart_op(-lamr - n), n + 1, order, probe_order, normal=0)
    return operator_difference(adj, op2)


class ExtractedOperator:
    """A differential operator as a map multi-index -> coefficient jet."""

    def __init__(self, nvars, order, coeffs, normal=None):
        self.nvars = nvars
        self.order = order
        self.coeffs = {m: c for m, c in coeffs.items() if c}
        self.normal = normal

    def apply(self, u: Jet) -> Jet:
        acc = None
        for m, a in self.coeffs.items():
            du = u
            for i, e in enumerate(m):
                for _ in range(e):
                    du = du.deriv(i)
            t = a * du
            acc = t if acc is None else acc + t
        if acc is None:
            return Jet(self.nvars, INF_ORDER, {}, None, self.normal)
        return acc

    def coefficient(self, m):
        return self.coeffs.get(tuple(m))

    def top_order_part(self, degrees):
        return {m: c for m, c in self.coeffs.items() if sum(m) in degrees}

    def map_coeffs(self, fn):
        return ExtractedOperator(
            self.nvars, self.order, {m: fn(c) for m, c in self.coeffs.items()}, self.normal
        )


def operator_extract(fn, nvars, order, probe_order, normal=None) -> ExtractedOperator:
    """Identify a linear differential operator of order <= `order` from its action.

    Probes with monomials of increasing degree; the triangular system
    P(x^beta) = sum_{alpha <= beta} a_alpha beta!/(beta-alpha)! x^{beta-alpha}
    determines the coefficient jets.  A verification probe guards against an
    underestimated order bound.
    """
    coeffs = {}
    for beta in monomials_up_to(nvars, order):
        probe = Jet.monomial(beta, Q(1), order=probe_order + sum(beta), normal=normal)
        img = fn(probe)
        acc = img
        for alpha, a in coeffs.items():
            if any(al > be for al, be in zip(alpha, beta)):
                continue
            fac = 1
            rest = []
            for al, be in zip(alpha, beta):
                fac *= factorial(be) // factorial(be - al)
                rest.append(be - al)
            acc = acc - a * Q(fac) * Jet.monomial(tuple(rest), Q(1), normal=normal)
        fac = 1
        for be in beta:
            fac *= factorial(be)
        coeffs[beta] = acc * (Q(1) / Q(fac)) if fac != 1 else acc
    op = ExtractedOperator(nvars, order, coeffs, normal)
    # self-check on a dense probe
    check = Jet(
        nvars,
        probe_order,
        {m: Q(1, 1 + sum(m)) for m in monomials_up_to(nvars, min(order + 1, probe_order))},
        normal=normal,
    )
    if not (fn(check) == op.apply(check)):
        raise JetError("operator extraction inconsistent: order bound too small")
    return op


def operator_difference(a: ExtractedOperator, b: ExtractedOperator):
    out = dict(a.coeffs)
    for m, c in b.coeffs.items():
        if m in out:
            d = out[m] - c
            if d:
                out[m] = d
            else:
                del out[m]
        else:
            out[m] = -c
    return ExtractedOperator(a.nvars, max(a.order, b.order), out, a.normal)


def formal_adjoint(op: ExtractedOperator, weight: Jet) -> ExtractedOperator:
    """D* u = w^{-1} sum_alpha (-1)^{|alpha|} d^alpha (w a_alpha u).

    The coefficient of d^gamma u in D* is
    sum_{alpha >= gamma} (-1)^{|alpha|} C(alpha, gamma) d^{alpha-gamma}(w a_alpha) / w.
    """
    c0 = as_exact(weight.constant_term())
    if isinstance(c0, LambdaRational) or c0 <= 0:
        raise JetError("adjoint weight must be positive at the base point")
    from .jets import is_rational_square

    if is_rational_square(c0) is None:
        raise JetError("adjoint weight must have a rational-square value at the base point")
    winv = jet_inverse(weight, order=weight.order)
    out = {}
    for alpha, a in op.coeffs.items():
        wa = weight * a
        sign = -1 if sum(alpha) % 2 else 1
        for gamma in _sub_multi_indices(alpha):
            fac = 1
            for al, ga in zip(alpha, gamma):
                fac *= comb(al, ga)
            dwa = wa
            for i, (al, ga) in enumerate(zip(alpha, gamma)):
                for _ in range(al - ga):
                    dwa = dwa.deriv(i)
            t = dwa * Q(sign * fac)
            if gamma in out:
                out[gamma] = out[gamma] + t
            else:
                out[gamma] = t
    out = {m: winv * c for m, c in out.items() if c}
    return ExtractedOperator(op.nvars, op.order, out, op.normal)


def _sub_multi_indices(alpha):
    if not alpha:
        yield ()
        return
    for head in range(alpha[0] + 1):
        for rest in _sub_multi_indices(alpha[1:]):
            yield (head,) + rest
