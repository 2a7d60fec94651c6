"""Canonical charts along a hypersurface: geodesic normal form dr^2 + h_r and
adapted normal form a^{-1} ds^2 + h_s, built as formal ODE flows on jets.

Every chart here is a germ at one boundary base point.  A hypersurface enters
as a graph y0 = phi(x) over its tangent plane (variable 0 of the ambient chart
is the graph direction), with the ambient metric equal to the identity at the
base point so that induced data satisfies h(0) = id.
"""

from __future__ import annotations

from .geometry import CurvaturePack, MetricJet, curvature, ricci_scalar_j, sum_jets
from .jets import (
    INF_ORDER,
    Jet,
    JetError,
    JetMatrix,
    jet_inverse,
    jet_sqrt,
    jet_substitute,
    matrix_inverse,
)
from .scalars import Q, as_exact


class EmbeddingJet:
    """Hypersurface y0 = phi(x) near the base point, phi(0)=0, dphi(0)=0.

    `positive_side` is +1 when the defining function is positive above the
    graph (y0 > phi), -1 otherwise; it orients the unit normal.
    """

    def __init__(self, phi: Jet, positive_side=1):
        if phi.constant_term():
            raise JetError("graph function must vanish at the base point")
        for i in range(phi.nvars):
            if phi.coefficient(tuple(1 if k == i else 0 for k in range(phi.nvars))):
                raise JetError("graph function must have vanishing differential at the base point")
        self.phi = phi
        self.n = phi.nvars
        self.positive_side = 1 if positive_side >= 0 else -1

    def parametrization(self, order=INF_ORDER, xorder=None):
        """F(x) = (phi(x), x) as jets in (t, x1..xn) space with the flow variable t slot 0.

        Components live in the n-variable boundary space; embedding into the
        (1+n)-variable flow space happens in the flow solver.
        """
        n = self.n
        return [self.phi.truncate(order, xorder)] + [
            Jet.variable(i, n, order, xorder) for i in range(n)
        ]


def embed_boundary(jet: Jet, order=None, xorder=None) -> Jet:
    """Insert a normal variable in slot 0 (boundary jet -> chart jet).

    An s-independent function is exact in the normal direction, so the total
    order defaults to INF while the boundary order becomes the tangential cap.
    """
    out = {}
    for m, c in jet.coeffs.items():
        out[(0,) + m] = c
    j = Jet(
        jet.nvars + 1,
        INF_ORDER if order is None else order,
        None,
        jet.order if xorder is None else xorder,
        0,
    )
    j.coeffs = {
        m: c
        for m, c in out.items()
        if sum(m) <= j.order and sum(m) - m[0] <= j.xorder
    }
    return j


class Composer:
    """Evaluate ambient jets along a map, with cached monomial powers."""

    def __init__(self, subs, order, xorder=None):
        self.order = order
        self.xorder = order if xorder is None else xorder
        self.subs = [s.truncate(self.order, self.xorder) for s in subs]
        if any(s.constant_term() for s in self.subs):
            raise JetError("Composer requires substitutions vanishing at the base point")
        tmpl = self.subs[0]
        self._one = Jet.constant(1, tmpl.nvars, self.order, self.xorder, tmpl.normal)
        self._cache = {(0,) * len(subs): self._one}

    def monomial(self, m):
        v = self._cache.get(m)
        if v is not None:
            return v
        i = next(k for k, e in enumerate(m) if e)
        prev = m[:i] + (m[i] - 1,) + m[i + 1 :]
        v = self.monomial(prev) * self.subs[i]
        self._cache[m] = v
        return v

    def __call__(self, f: Jet) -> Jet:
        out = {}
        get = out.get
        for m, c in f.coeffs.items():
            if sum(m) > self.order:
                continue
            for mm, cc in self.monomial(m).coeffs.items():
                prod = c * cc
                v = get(mm)
                v = prod if v is None else v + prod
                if v:
                    out[mm] = v
                elif mm in out:
                    del out[mm]
        acc = self._one.zero_like()
        acc.coeffs = out
        if f.order < INF_ORDER:
            acc = acc.truncate(f.order)
        return acc


def _declare(jets, order, xorder):
    return [j.truncate(order, xorder).with_orders(order, xorder) for j in jets]


def solve_geodesic_flow(g: MetricJet, start, velocity, order, xorder=None):
    """Formal solution of the geodesic equation y'' = -Gamma(y)(y', y').

    start/velocity: boundary jets (lists over ambient components).  Returns the
    flow map as jets in (r, x).  Picard iteration m fixes the r-order m+1 term,
    so the working truncation grows with the iteration count.
    """
    xorder = order if xorder is None else xorder
    d = g.dim
    ch = g.christoffel()
    g_min = min(e.order for row in g.g.entries for e in row)
    start_min = min((j.order for j in list(start) + list(velocity)), default=INF_ORDER)
    # Picard cannot certify more orders than its integrand supports
    order = min(order, (g_min - 1) + 2 if g_min < INF_ORDER else order,
                start_min if start_min < INF_ORDER else order)
    base = [
        embed_boundary(c) + Jet.variable(0, d, INF_ORDER, None, 0) * embed_boundary(v)
        for c, v in zip(start, velocity)
    ]
    y = _declare([b.truncate(order, xorder) for b in base], order, xorder)
    known = 1
    while known < order:
        wo = min(known + 2, order)
        comp = Composer(y, wo, xorder)
        v = [c.deriv(0).truncate(wo - 1, xorder) for c in y]
        new = []
        for cidx in range(d):
            t = None
            for a in range(d):
                va = v[a]
                if not va:
                    continue
                for b in range(a + 1):
                    if not v[b]:
                        continue
                    gamma = comp(ch(cidx, a, b))
                    if not gamma:
                        continue
                    term = gamma * va * v[b]
                    if b < a:
                        term = 2 * term
                    t = term if t is None else t + term
            piece = base[cidx].truncate(order, xorder)
            if t is not None and t:
                piece = piece - t.truncate(wo - 2, xorder).integrate(0).integrate(0)
            new.append(piece)
        new = _declare(new, order, xorder)
        stable = all(u == w for u, w in zip(new, y))
        y = new
        if stable and wo >= order:
            break
        known += 1
    return y


def solve_first_order_flow(field, start, order, xorder=None, nvars=None):
    """Formal solution of y' = field(y) from y(0) = start (field: list of ambient jets)."""
    xorder = order if xorder is None else xorder
    d = len(field)
    field_min = min((f.order for f in field), default=INF_ORDER)
    if field_min < INF_ORDER:
        order = min(order, field_min + 1)
    start_min = min((j.order for j in start), default=INF_ORDER)
    if start_min < INF_ORDER:
        order = min(order, start_min)
    base = [embed_boundary(c) for c in start]
    y = _declare([b.truncate(order, xorder) for b in base], order, xorder)
    known = 0
    while known < order:
        wo = min(known + 2, order)
        comp = Composer(y, wo, xorder)
        new = []
        for cidx in range(d):
            rhs = comp(field[cidx])
            piece = base[cidx].truncate(order, xorder)
            if rhs:
                piece = piece + rhs.truncate(wo - 1, xorder).integrate(0)
            new.append(piece)
        new = _declare(new, order, xorder)
        stable = all(u == w for u, w in zip(new, y))
        y = new
        if stable and wo >= order:
            break
        known += 1
    return y


def pullback_metric(g: MetricJet, flow, order, xorder=None):
    """(flow^* g)_{mu nu} as a JetMatrix over the flow coordinates."""
    xorder = order if xorder is None else xorder
    d = g.dim
    comp = Composer(flow, order, xorder)
    gmap = [[comp(g.g[a, b]) for b in range(d)] for a in range(d)]
    dy = [[flow[a].deriv(mu) for mu in range(d)] for a in range(d)]
    out = [[None] * d for _ in range(d)]
    for mu in range(d):
        for nu in range(mu + 1):
            acc = None
            for a in range(d):
                for b in range(d):
                    t = gmap[a][b] * dy[a][mu] * dy[b][nu]
                    acc = t if acc is None else acc + t
            out[mu][nu] = out[nu][mu] = acc
    return JetMatrix(out)


def pullback_scalar(flow, u: Jet, order, xorder=None):
    return Composer(flow, order, order if xorder is None else xorder)(u)


class HypersurfaceData:
    """Induced metric, second fundamental form, mean curvature, trace-free part."""

    def __init__(self, h, L, H, lo, normal, embedding):
        self.h = h          # JetMatrix (boundary jets)
        self.L = L          # JetMatrix
        self.H = H          # Jet
        self.lo = lo        # JetMatrix, tr_h lo = 0
        self.normal = normal  # ambient components of the unit normal, boundary jets
        self.embedding = embedding

    def metric(self):
        return MetricJet(self.h)


def hypersurface_data(g: MetricJet, emb: EmbeddingJet, order=None, xorder=None) -> HypersurfaceData:
    """Curvature data of the graph hypersurface, oriented by emb.positive_side."""
    n = emb.n
    d = n + 1
    if g.dim != d:
        raise JetError("ambient dimension must be n+1")
    if order is None:
        order = min(e.order for row in g.g.entries for e in row)
        if order >= INF_ORDER:
            order = emb.phi.order
        if order >= INF_ORDER:
            raise JetError("pass an explicit order for exact ambient data")
    if order < 2:
        raise JetError("hypersurface data needs jets of order >= 2")
    gt = MetricJet(g.g.map(lambda e: e.truncate(order + 1)), check=False)
    phi = emb.phi.truncate(order, xorder)
    comp = Composer([phi] + [Jet.variable(i, n, INF_ORDER) for i in range(n)], order)
    dphi = [phi.deriv(i) for i in range(n)]
    one = Jet.constant(1, n)

    def tangent(i, a):
        # component a of T_i = (d_i phi, e_i); None when it vanishes
        if a == 0:
            return dphi[i] if dphi[i] else None
        return one if a == i + 1 else None

    gm = [[comp(gt.g[a, b]) for b in range(d)] for a in range(d)]
    h = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1):
            acc = gm[i + 1][j + 1]
            for a in range(d):
                ta = tangent(i, a)
                if ta is None:
                    continue
                for b in range(d):
                    tb = tangent(j, b)
                    if tb is None or (a == i + 1 and b == j + 1):
                        continue
                    t = gm[a][b] * ta * tb
                    if a != i + 1:
                        t = t if ta is one else t
                    acc = acc + t
            h[i][j] = h[j][i] = acc
    hmat = JetMatrix(h)
    if not _invertible(hmat.constant_matrix()):
        raise JetError("induced metric degenerate at the base point")

    giA = matrix_inverse(JetMatrix(gm))
    nu = [one] + [-dphi[i] for i in range(n)]
    nraw = [sum_jets(giA[a, b] * nu[b] for b in range(d)) for a in range(d)]
    norm2 = sum_jets(nraw[a] * nu[a] for a in range(d))
    inv_norm = jet_inverse(jet_sqrt(norm2))
    sgn = emb.positive_side
    N = [nraw[a] * inv_norm * sgn for a in range(d)]

    # L_ij = -g(nabla_{T_i} T_j, N) along the graph
    ch = gt.christoffel()
    chm = {}
    L = [[None] * n for _ in range(n)]
    Nlow = [sum_jets(gm[a][b] * N[b] for b in range(d)) for a in range(d)]
    for i in range(n):
        for j in range(i + 1):
            # second-derivative part: d_i T_j = (d_i d_j phi, 0)
            acc = phi.deriv(j).deriv(i) * Nlow[0]
            for c in range(d):
                t = None
                for a in range(d):
                    ta = tangent(i, a)
                    if ta is None:
                        continue
                    for b in range(d):
                        tb = tangent(j, b)
                        if tb is None:
                            continue
                        key = (c, max(a, b), min(a, b))
                        if key not in chm:
                            chm[key] = comp(ch(*key))
                        term = chm[key] * ta * tb
                        t = term if t is None else t + term
                if t is not None:
                    acc = acc + t * Nlow[c]
            L[i][j] = L[j][i] = -acc
    Lmat = JetMatrix(L)
    hM = MetricJet(hmat)
    from .geometry import trace

    H = trace(hM, Lmat) * Q(1, n)
    lo = JetMatrix([[Lmat[i, j] - H * hmat[i, j] for j in range(n)] for i in range(n)])
    return HypersurfaceData(hmat, Lmat, H, lo, N, emb)


def _invertible(mat):
    from .jets import _frac_matrix_inverse

    try:
        _frac_matrix_inverse(mat)
        return True
    except JetError:
        return False


class NormalFormGeodesic:
    """g in geodesic normal coordinates: dr^2 + h_r, with the transition map."""

    def __init__(self, chart_metric: MetricJet, h_r: JetMatrix, transition, surface: HypersurfaceData, n):
        self.metric = chart_metric
        self.h_r = h_r
        self.transition = transition
        self.surface = surface
        self.n = n
        self._pack = None
        self._J = None

    def curvature(self) -> CurvaturePack:
        if self._pack is None:
            self._pack = curvature(self.metric)
        return self._pack

    def scalar_j(self) -> "Jet":
        if self._J is None:
            if self._pack is not None:
                self._J = self._pack.J
            else:
                self._J = ricci_scalar_j(self.metric)[2]
        return self._J

    def boundary_metric(self) -> JetMatrix:
        return JetMatrix(
            [[e.restrict() for e in row] for row in self.h_r.entries]
        )


class NormalFormAdapted:
    """g in adapted coordinates: a^{-1} ds^2 + h_s, with eta*(sigma) = s."""

    def __init__(self, chart_metric: MetricJet, a: Jet, h_s: JetMatrix, transition, n):
        self.metric = chart_metric
        self.a = a
        self.h_s = h_s
        self.transition = transition
        self.n = n
        self._pack = None
        self._J = None

    def curvature(self) -> CurvaturePack:
        if self._pack is None:
            self._pack = curvature(self.metric)
        return self._pack

    def scalar_j(self) -> "Jet":
        if self._J is None:
            if self._pack is not None:
                self._J = self._pack.J
            else:
                self._J = ricci_scalar_j(self.metric)[2]
        return self._J

    def boundary_metric(self) -> JetMatrix:
        return JetMatrix([[e.restrict() for e in row] for row in self.h_s.entries])

    def ring_v(self, order=None):
        """dvol_{h_s}/dvol_h as a chart jet (sqrt det ratio)."""
        det = self.h_s.det()
        det0 = embed_boundary(self.boundary_metric().det(),
                              order=det.order, xorder=det.xorder)
        ratio = det * jet_inverse(det0, order=det.order)
        return jet_sqrt(ratio, order=det.order)

    def density_v(self):
        """v = a^{-1/2} sqrt(det h_s / det h)."""
        return self.ring_v() * jet_inverse(jet_sqrt(self.a))


def geodesic_normal_form(g: MetricJet, emb: EmbeddingJet, order, xorder=None) -> NormalFormGeodesic:
    """Solve the normal geodesic flow and bring g into the form dr^2 + h_r."""
    xorder = order if xorder is None else xorder
    n = emb.n
    g = MetricJet(g.g.map(lambda e: e.truncate(order + 2, xorder + 2)), check=False)
    surf = hypersurface_data(g, emb, order=order + 1, xorder=xorder + 1)
    start = [emb.phi] + [Jet.variable(i, n, INF_ORDER) for i in range(n)]
    flow = solve_geodesic_flow(g, start, surf.normal, order, xorder)
    G = pullback_metric(g, flow, order, xorder)
    one = Jet.constant(1, n + 1, G[0, 0].order, G[0, 0].xorder, 0)
    if not (G[0, 0] == one):
        raise JetError("Gauss lemma failed: g(d_r, d_r) != 1 (flow bug)")
    for i in range(1, n + 1):
        if G[0, i]:
            raise JetError("Gauss lemma failed: cross terms persist")
    h_r = JetMatrix([[G[i, j] for j in range(1, n + 1)] for i in range(1, n + 1)])
    exact_one = Jet.constant(1, n + 1, INF_ORDER, None, 0)
    zero = Jet(n + 1, INF_ORDER, None, None, 0)
    chart = JetMatrix(
        [[exact_one if i == j == 0 else (G[i, j] if i and j else zero)
          for j in range(n + 1)] for i in range(n + 1)]
    )
    return NormalFormGeodesic(MetricJet(chart, check=False), h_r, flow, surf, n)


def adapted_normal_form(g: MetricJet, sigma: Jet, emb: EmbeddingJet, order, xorder=None) -> NormalFormAdapted:
    """Solve the flow of grad(sigma)/|grad sigma|^2 and normalize g accordingly."""
    xorder = order if xorder is None else xorder
    n = emb.n
    d = n + 1
    g = MetricJet(g.g.map(lambda e: e.truncate(order + 2, xorder + 2)), check=False)
    sigma = sigma.truncate(order + 2, xorder + 2)
    # sigma must vanish along the graph
    start = [emb.phi] + [Jet.variable(i, n, INF_ORDER) for i in range(n)]
    bsubs = [emb.phi.truncate(order + 1, xorder + 1)] + [
        Jet.variable(i, n, INF_ORDER) for i in range(n)
    ]
    rest = jet_substitute(sigma.truncate(order + 1, xorder + 1), bsubs)
    if rest:
        raise JetError("sigma does not vanish on the hypersurface graph")
    dsig = [sigma.deriv(a) for a in range(d)]
    if not any(as_exact(dsig[a].constant_term()) for a in range(d)):
        raise JetError("d sigma vanishes at the base point")
    gi = g.inverse(order=max(order + 2, 2))
    grad = [sum_jets(gi[a, b] * dsig[b] for b in range(d)) for a in range(d)]
    norm2 = sum_jets(grad[a] * dsig[a] for a in range(d))
    inv_norm2 = jet_inverse(norm2, order=min(norm2.order, order + 2))
    field = [grad[a] * inv_norm2 for a in range(d)]
    flow = solve_first_order_flow(field, start, order, xorder)
    # eta*(sigma) = s exactly
    comp = Composer(flow, order, xorder)
    pb_sigma = comp(sigma)
    svar = Jet.variable(0, d, pb_sigma.order, pb_sigma.xorder, 0)
    if not (pb_sigma == svar):
        raise JetError("adapted flow failed: eta*(sigma) != s")
    G = pullback_metric(g, flow, order, xorder)
    for i in range(1, d):
        if G[0, i]:
            raise JetError("adapted chart failed: cross terms persist")
    a_jet = comp(norm2)
    ginv00 = jet_inverse(G[0, 0], order=G[0, 0].order)
    if not (a_jet == ginv00):
        raise JetError("adapted chart failed: g_ss != a^{-1}")
    h_s = JetMatrix([[G[i, j] for j in range(1, d)] for i in range(1, d)])
    zero = Jet(d, INF_ORDER, None, None, 0)
    ainv = jet_inverse(a_jet, order=a_jet.order)
    chart = JetMatrix(
        [
            [ainv if i == j == 0 else (G[i, j] if i and j else zero)
             for j in range(d)]
            for i in range(d)
        ]
    )
    return NormalFormAdapted(MetricJet(chart, check=False), a_jet, h_s, flow, n)


def invert_map(flow, order, xorder=None):
    """Formal inverse of a map germ fixing the origin with invertible linear part."""
    xorder = order if xorder is None else xorder
    d = len(flow)
    from .jets import _frac_matrix_inverse

    lin = [
        [as_exact(flow[a].coefficient(tuple(1 if k == b else 0 for k in range(d)))) for b in range(d)]
        for a in range(d)
    ]
    lin_inv = _frac_matrix_inverse(lin)
    w = [Jet.variable(a, d, order, xorder, flow[0].normal) for a in range(d)]
    z = [sum_jets(Jet.constant(lin_inv[a][b], d, order, xorder, flow[0].normal) * w[b] for b in range(d)) for a in range(d)]
    for _ in range(order + 1):
        comp = Composer(z, order, xorder)
        resid = [w[a] - comp(flow[a]) for a in range(d)]
        z_new = [
            z[a] + sum_jets(Jet.constant(lin_inv[a][b], d, order, xorder, flow[0].normal) * resid[b] for b in range(d))
            for a in range(d)
        ]
        z_new = _declare(z_new, order, xorder)
        if all(u == v for u, v in zip(z_new, z)):
            z = z_new
            break
        z = z_new
    return z
