"""Curvature of a metric given as a JetMatrix in a coordinate chart.

Conventions (verified against the model values in tests):
  Gamma^k_ij = 1/2 g^{km} (d_i g_jm + d_j g_im - d_m g_ij)
  R^s_ijk    = Gamma^l_jk Gamma^s_il - Gamma^l_ik Gamma^s_jl
               + d_i Gamma^s_jk - d_j Gamma^s_ik
  R_ijkl     = R^s_ijk g_sl,      Ric_jk = sum_i R^i_ijk,
  scal       = g^{jk} Ric_jk  (round sphere positive, hyperbolic negative),
  2(d-1) J   = scal,          (d-2) P = Ric - J g,
  W_ijkl     = R_ijkl - (P_jk g_il - P_ik g_jl - P_jl g_ik + P_il g_jk).

The Laplacian is the non-positive one (equals sum of second partials on flat
space) and the divergence is its trace-adjoint companion: Delta = delta d.
"""

from __future__ import annotations

from .jets import Jet, JetError, JetMatrix, jet_inverse, jet_sqrt, matrix_inverse
from .scalars import Q


class MetricJet:
    """A metric in a chart: symmetric JetMatrix with invertible constant term."""

    __slots__ = ("g", "dim", "ginv", "_ginv_order", "_chris", "_sqrt_det")

    def __init__(self, g: JetMatrix, check=True):
        if check and not g.is_symmetric():
            raise JetError("metric must be symmetric")
        self.g = g
        self.dim = g.dim
        self.ginv = None
        self._ginv_order = -1
        self._chris = None
        self._sqrt_det = None

    @property
    def nvars(self):
        return self.g.entries[0][0].nvars

    def inverse(self, order=None):
        want = order if order is not None else min(
            e.order for row in self.g.entries for e in row
        )
        if self.ginv is None or self._ginv_order < want:
            self.ginv = matrix_inverse(self.g, order=want)
            self._ginv_order = want
        return self.ginv

    def christoffel(self):
        """Gamma[k][i][j] with Gamma^k_ij."""
        if self._chris is not None:
            return self._chris
        d = self.dim
        gi = self.inverse()
        dg = [[[self.g[i, j].deriv(m) for m in range(d)] for j in range(d)] for i in range(d)]
        half = Q(1, 2)
        chris = []
        for k in range(d):
            rows = []
            for i in range(d):
                row = []
                for j in range(i + 1):
                    acc = None
                    for m in range(d):
                        t = gi[k, m] * (dg[j][m][i] + dg[i][m][j] - dg[i][j][m])
                        acc = t if acc is None else acc + t
                    row.append(acc * half)
                rows.append(row)
            chris.append(rows)
        self._chris = _Sym2Slices(chris)
        return self._chris

    def sqrt_det(self, order=None):
        """sqrt(det g); requires det g(0) to be a rational square."""
        if self._sqrt_det is None:
            det = self.g.det()
            self._sqrt_det = jet_sqrt(det, order=order)
        return self._sqrt_det


class _Sym2Slices:
    """Gamma^k_ij storage, symmetric in (i,j)."""

    def __init__(self, data):
        self.data = data

    def __call__(self, k, i, j):
        return self.data[k][i][j] if j <= i else self.data[k][j][i]


class CurvaturePack:
    __slots__ = ("metric", "riemann", "ricci", "scal", "J", "schouten", "weyl")

    def __init__(self, metric, riemann, ricci, scal, J, schouten, weyl):
        self.metric = metric
        self.riemann = riemann  # R[i][j][k][l], fully covariant
        self.ricci = ricci
        self.scal = scal
        self.J = J
        self.schouten = schouten
        self.weyl = weyl

    def R(self, i, j, k, l):
        return self.riemann[i][j][k][l]

    def W(self, i, j, k, l):
        return self.weyl[i][j][k][l]


def curvature(metric: MetricJet) -> CurvaturePack:
    """All curvature tensors of the metric, to two orders below the input."""
    d = metric.dim
    g = metric.g
    if min(e.order for row in g.entries for e in row) < 2:
        raise JetError("curvature needs jets of order >= 2")
    ch = metric.christoffel()
    dch = {}

    def dgamma(m, s, i, j):
        key = (m, s, i, j) if i >= j else (m, s, j, i)
        v = dch.get(key)
        if v is None:
            v = ch(s, key[2], key[3]).deriv(m)
            dch[key] = v
        return v

    # R^s_ijk, antisymmetric in (i,j); store i > j only
    rup = {}
    for i in range(d):
        for j in range(i):
            for k in range(d):
                for s in range(d):
                    acc = dgamma(i, s, j, k) - dgamma(j, s, i, k)
                    for l in range(d):
                        acc = acc + ch(l, j, k) * ch(s, i, l) - ch(l, i, k) * ch(s, j, l)
                    rup[(s, i, j, k)] = acc

    def rup_get(s, i, j, k):
        if i == j:
            return None
        if i > j:
            return rup[(s, i, j, k)]
        return -rup[(s, j, i, k)]

    zero = g[0, 0].zero_like()

    # fully covariant R_ijkl = R^s_ijk g_sl
    riem = [[[[None] * d for _ in range(d)] for _ in range(d)] for _ in range(d)]
    for i in range(d):
        for j in range(d):
            for k in range(d):
                for l in range(d):
                    if i == j:
                        riem[i][j][k][l] = zero
                        continue
                    acc = None
                    for s in range(d):
                        t = rup_get(s, i, j, k) * g[s, l]
                        acc = t if acc is None else acc + t
                    riem[i][j][k][l] = acc

    ric = [[None] * d for _ in range(d)]
    for j in range(d):
        for k in range(j + 1):
            acc = None
            for i in range(d):
                t = rup_get(i, i, j, k)
                if t is None:
                    continue
                acc = t if acc is None else acc + t
            ric[j][k] = ric[k][j] = acc if acc is not None else zero
    ricci = JetMatrix(ric)

    gi = metric.inverse()
    scal = None
    for j in range(d):
        for k in range(d):
            t = gi[j, k] * ric[j][k]
            scal = t if scal is None else scal + t

    J = scal * Q(1, 2 * (d - 1)) if d >= 2 else None

    schouten = None
    weyl = None
    if d >= 3:
        inv = Q(1, d - 2)
        schouten = JetMatrix(
            [[(ric[i][j] - J * g[i, j]) * inv for j in range(d)] for i in range(d)]
        )
        weyl = [[[[None] * d for _ in range(d)] for _ in range(d)] for _ in range(d)]
        P = schouten
        for i in range(d):
            for j in range(d):
                for k in range(d):
                    for l in range(d):
                        weyl[i][j][k][l] = riem[i][j][k][l] - (
                            P[j, k] * g[i, l]
                            - P[i, k] * g[j, l]
                            - P[j, l] * g[i, k]
                            + P[i, l] * g[j, k]
                        )

    return CurvaturePack(metric, riem, ricci, scal, J, schouten, weyl)


def ricci_scalar_j(metric: MetricJet):
    """(Ricci, scal, J) without assembling the full Riemann/Weyl tensors."""
    d = metric.dim
    ch = metric.christoffel()
    gi = metric.inverse()
    dch = {}

    def dgamma(m, s, i, j):
        key = (m, s, i, j) if i >= j else (m, s, j, i)
        v = dch.get(key)
        if v is None:
            v = ch(s, key[2], key[3]).deriv(m)
            dch[key] = v
        return v

    tr_gamma = [sum_jets(ch(i, i, k) for i in range(d)) for k in range(d)]
    ric = [[None] * d for _ in range(d)]
    for j in range(d):
        for k in range(j + 1):
            acc = None
            for i in range(d):
                t = dgamma(i, i, j, k) - dgamma(j, i, i, k)
                for l in range(d):
                    t = t - ch(l, i, k) * ch(i, j, l)
                acc = t if acc is None else acc + t
            acc = acc + sum_jets(ch(l, j, k) * tr_gamma[l] for l in range(d))
            ric[j][k] = ric[k][j] = acc
    ricci = JetMatrix(ric)
    scal = sum_jets(gi[j, k] * ric[j][k] for j in range(d) for k in range(d))
    J = scal * Q(1, 2 * (d - 1)) if d >= 2 else None
    return ricci, scal, J


def schouten_decompose(pack: CurvaturePack):
    """(P, W) with R + P ^ g totally trace-free and equal to W."""
    if pack.schouten is None:
        raise JetError("Schouten decomposition needs dimension >= 3")
    return pack.schouten, pack.weyl


# -- differential operators ------------------------------------------------------


def gradient(metric: MetricJet, u: Jet):
    gi = metric.inverse()
    d = metric.dim
    du = [u.deriv(j) for j in range(d)]
    return [sum_jets(gi[i, j] * du[j] for j in range(d)) for i in range(d)]


def hessian(metric: MetricJet, u: Jet) -> JetMatrix:
    ch = metric.christoffel()
    d = metric.dim
    du = [u.deriv(k) for k in range(d)]
    out = [[None] * d for _ in range(d)]
    for i in range(d):
        for j in range(i + 1):
            acc = du[j].deriv(i)
            for k in range(d):
                acc = acc - ch(k, i, j) * du[k]
            out[i][j] = out[j][i] = acc
    return JetMatrix(out)


def laplacian(metric: MetricJet, u: Jet) -> Jet:
    if u.order < 2:
        raise JetError("laplacian needs a jet of order >= 2")
    gi = metric.inverse()
    h = hessian(metric, u)
    d = metric.dim
    return sum_jets(gi[i, j] * h[i, j] for i in range(d) for j in range(d))


def divergence_form(metric: MetricJet, omega) -> Jet:
    """delta of a 1-form (list of covariant components)."""
    gi = metric.inverse()
    ch = metric.christoffel()
    d = metric.dim
    acc = None
    for i in range(d):
        for j in range(d):
            t = omega[j].deriv(i)
            for k in range(d):
                t = t - ch(k, i, j) * omega[k]
            t = gi[i, j] * t
            acc = t if acc is None else acc + t
    return acc


def divergence_sym2(metric: MetricJet, b: JetMatrix):
    """(delta b)_k = g^{ij} nabla_i b_jk for a symmetric bilinear form, as a 1-form."""
    gi = metric.inverse()
    ch = metric.christoffel()
    d = metric.dim
    out = []
    for k in range(d):
        acc = None
        for i in range(d):
            for j in range(d):
                t = b[j, k].deriv(i)
                for l in range(d):
                    t = t - ch(l, i, j) * b[l, k] - ch(l, i, k) * b[j, l]
                t = gi[i, j] * t
                acc = t if acc is None else acc + t
        out.append(acc)
    return out


def covariant_deriv_4tensor(metric: MetricJet, T, m):
    """(nabla_m T)_ijkl for a (0,4) tensor given as nested lists."""
    ch = metric.christoffel()
    d = metric.dim
    out = [[[[None] * d for _ in range(d)] for _ in range(d)] for _ in range(d)]
    for i in range(d):
        for j in range(d):
            for k in range(d):
                for l in range(d):
                    acc = T[i][j][k][l].deriv(m)
                    for p in range(d):
                        acc = (
                            acc
                            - ch(p, m, i) * T[p][j][k][l]
                            - ch(p, m, j) * T[i][p][k][l]
                            - ch(p, m, k) * T[i][j][p][l]
                            - ch(p, m, l) * T[i][j][k][p]
                        )
                    out[i][j][k][l] = acc
    return out


# -- small tensor algebra helpers -------------------------------------------------


def sum_jets(it):
    acc = None
    for t in it:
        acc = t if acc is None else acc + t
    return acc


def inner_form(metric: MetricJet, a, b) -> Jet:
    """(a, b)_g for 1-forms."""
    gi = metric.inverse()
    d = metric.dim
    return sum_jets(gi[i, j] * a[i] * b[j] for i in range(d) for j in range(d))


def inner_sym2(metric: MetricJet, a: JetMatrix, b: JetMatrix) -> Jet:
    """(a, b)_g = a_ij b_kl g^{ik} g^{jl}."""
    gi = metric.inverse()
    d = metric.dim
    ar = [[sum_jets(gi[i, k] * a[k, j] for k in range(d)) for j in range(d)] for i in range(d)]
    return sum_jets(
        ar[i][j] * sum_jets(gi[j, l] * b[i, l] for l in range(d))
        for i in range(d)
        for j in range(d)
    )


def trace(metric: MetricJet, b: JetMatrix) -> Jet:
    gi = metric.inverse()
    d = metric.dim
    return sum_jets(gi[i, j] * b[i, j] for i in range(d) for j in range(d))


def sym2_square(metric: MetricJet, b: JetMatrix) -> JetMatrix:
    """(b^2)_ij = b_ik g^{kl} b_lj."""
    gi = metric.inverse()
    d = metric.dim
    raised = [[sum_jets(gi[k, l] * b[l, j] for l in range(d)) for j in range(d)] for k in range(d)]
    return JetMatrix(
        [
            [sum_jets(b[i, k] * raised[k][j] for k in range(d)) for j in range(d)]
            for i in range(d)
        ]
    )


def trace_free(metric: MetricJet, b: JetMatrix) -> JetMatrix:
    d = metric.dim
    t = trace(metric, b) * Q(1, d)
    return JetMatrix([[b[i, j] - t * metric.g[i, j] for j in range(d)] for i in range(d)])


def tr_power(metric: MetricJet, b: JetMatrix, k: int) -> Jet:
    """tr of the k-th power of the endomorphism g^{-1} b."""
    gi = metric.inverse()
    d = metric.dim
    endo = [[sum_jets(gi[i, l] * b[l, j] for l in range(d)) for j in range(d)] for i in range(d)]
    acc = endo
    for _ in range(k - 1):
        acc = [
            [sum_jets(acc[i][m] * endo[m][j] for m in range(d)) for j in range(d)]
            for i in range(d)
        ]
    return sum_jets(acc[i][i] for i in range(d))
