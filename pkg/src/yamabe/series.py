"""Series in the normal coordinate with boundary-jet coefficients.

A Series is sum_k s^(offset+k) f_k(x) with f_k boundary jets over M and k in
0..bound.  offset=None means a plain power series (the ring case, used for
slice-wise chart arithmetic, where each slice keeps its own honest truncation
order); offset=LambdaRational carries the s^lam conjugations and eigenfunction
ansatz, where only multiplication by offset-free series is defined.

SlicedChart precomputes the slice decomposition of a chart metric and of its
Laplacian, shared by the Yamabe recursion, the Laplace-Robin operators and the
solution-operator machinery.
"""

from __future__ import annotations

from .geometry import MetricJet, sum_jets
from .jets import INF_ORDER, Jet, JetError, jet_inverse, jet_sqrt
from .scalars import LambdaRational, Q, as_exact


class Series:
    __slots__ = ("n", "bound", "offset", "slices")

    def __init__(self, n, bound, slices=None, offset=None):
        self.n = n                          # number of boundary variables
        self.bound = min(bound, INF_ORDER)  # max retained power above the offset
        self.offset = offset                # None (plain series) or LambdaRational
        self.slices = {}
        if slices:
            for k, f in slices.items():
                if k <= self.bound and f:
                    self.slices[k] = f

    # -- constructors -----------------------------------------------------------

    @classmethod
    def from_chart_jet(cls, jet: Jet, bound=None, offset=None):
        """Slice a chart jet (normal variable 0) into boundary coefficients.

        The bound never exceeds the jet's total order: slices above it are not
        known to be complete.
        """
        if jet.normal != 0 and jet.coeffs:
            raise JetError("chart jets must have normal variable 0")
        parts = jet.normal_parts() if jet.coeffs else {}
        if bound is None:
            bound = jet.order if jet.order < INF_ORDER else max(parts, default=0)
        bound = min(bound, jet.order)
        return cls(jet.nvars - 1, bound, {k: f for k, f in parts.items() if k <= bound}, offset)

    @classmethod
    def constant(cls, c, n, bound=INF_ORDER, offset=None):
        return cls(n, bound, {0: Jet.constant(c, n)}, offset)

    @classmethod
    def coordinate(cls, n, bound=INF_ORDER):
        """The series s itself (exact, so unbounded)."""
        return cls(n, bound, {1: Jet.constant(1, n)})

    def zero_like(self, bound=None, offset="keep"):
        return Series(self.n, self.bound if bound is None else bound, None,
                      self.offset if offset == "keep" else offset)

    # -- structure ----------------------------------------------------------------

    def __bool__(self):
        return bool(self.slices)

    def slice(self, k) -> Jet:
        f = self.slices.get(k)
        return f if f is not None else Jet(self.n, INF_ORDER, {})

    def min_slice_order(self, upto=None):
        upto = self.bound if upto is None else upto
        return min(
            (f.order for k, f in self.slices.items() if k <= upto),
            default=INF_ORDER,
        )

    def __eq__(self, other):
        if isinstance(other, Series):
            if (self.offset is None) != (other.offset is None):
                return False
            if self.offset is not None and LambdaRational.of(self.offset) != LambdaRational.of(other.offset):
                return False
            bound = min(self.bound, other.bound)
            return all(self.slice(k) == other.slice(k) for k in range(bound + 1))
        if not other:
            return all(not f for f in self.slices.values())
        return NotImplemented

    # -- ring operations -------------------------------------------------------------

    @staticmethod
    def _unify(a, b):
        """Regrade to a common offset when the offsets differ by an integer."""
        if a.n != b.n:
            raise JetError("boundary variable mismatch")
        if (a.offset is None) != (b.offset is None):
            raise JetError("offset mismatch in Series addition")
        if a.offset is None:
            return a, b
        off_a = LambdaRational.of(a.offset)
        off_b = LambdaRational.of(b.offset)
        if off_a == off_b:
            return a, b
        diff = off_a - off_b
        if not diff.is_constant() or diff.as_fraction().denominator != 1:
            raise JetError("offsets differ by a non-integer in Series addition")
        c = int(diff.as_fraction())
        if c > 0:
            # a sits higher: regrade a down to off_b (indices and bound shift up)
            return (
                Series(a.n, a.bound + c, {k + c: f for k, f in a.slices.items()}, off_b),
                b,
            )
        m = -c
        return a, Series(b.n, b.bound + m, {k + m: f for k, f in b.slices.items()}, off_a)

    def __add__(self, other):
        if isinstance(other, Jet):
            other = Series(self.n, self.bound, {0: other}, None)
        if not isinstance(other, Series):
            other = Series.constant(other, self.n, self.bound, self.offset)
        a, b = Series._unify(self, other)
        out = dict(a.slices)
        for k, f in b.slices.items():
            if k in out:
                s = out[k] + f
                if s:
                    out[k] = s
                else:
                    del out[k]
            else:
                out[k] = f
        return Series(a.n, min(a.bound, b.bound), out, a.offset)

    __radd__ = __add__

    def __neg__(self):
        return Series(self.n, self.bound, {k: -f for k, f in self.slices.items()}, self.offset)

    def __sub__(self, other):
        if isinstance(other, Jet):
            other = Series(self.n, self.bound, {0: other}, None)
        if not isinstance(other, Series):
            other = Series.constant(other, self.n, self.bound, self.offset)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        """Product; at most one factor may carry an offset."""
        if isinstance(other, Jet):
            if other.nvars == self.n:
                other = Series(self.n, self.bound, {0: other}, None)
            else:
                other = Series.from_chart_jet(other, self.bound)
        if not isinstance(other, Series):
            # scalar
            return Series(
                self.n, self.bound,
                {k: f * other for k, f in self.slices.items()}, self.offset,
            )
        if self.n != other.n:
            raise JetError("boundary variable mismatch")
        if self.offset is not None and other.offset is not None:
            raise JetError("cannot multiply two offset-carrying series")
        offset = self.offset if self.offset is not None else other.offset
        val_a = min(self.slices, default=INF_ORDER)
        val_b = min(other.slices, default=INF_ORDER)
        bound = min(self.bound + val_b, other.bound + val_a, INF_ORDER)
        out = {}
        for i, f in self.slices.items():
            if i > bound:
                continue
            for j, g in other.slices.items():
                k = i + j
                if k > bound:
                    continue
                t = f * g
                if k in out:
                    s = out[k] + t
                    if s:
                        out[k] = s
                    else:
                        del out[k]
                elif t:
                    out[k] = t
        return Series(self.n, bound, out, offset)

    __rmul__ = __mul__

    def shift(self, j):
        """Multiply by s^j (j >= 0) or divide exactly (j < 0, erroring on obstruction)."""
        if j >= 0:
            return Series(self.n, self.bound + j,
                          {k + j: f for k, f in self.slices.items()}, self.offset)
        for k in self.slices:
            if k + j < 0:
                raise JetError(f"inexact division by s^{-j}: slice {k} present")
        return Series(self.n, self.bound + j,
                      {k + j: f for k, f in self.slices.items()}, self.offset)

    def truncate(self, bound):
        return Series(self.n, min(self.bound, bound),
                      {k: f for k, f in self.slices.items() if k <= bound}, self.offset)

    def map_slices(self, fn):
        return Series(self.n, self.bound, {k: fn(f) for k, f in self.slices.items()}, self.offset)

    # -- calculus ------------------------------------------------------------------

    def deriv_s(self):
        """d/ds: s^{offset+k} -> (offset+k) s^{offset+k-1}."""
        if self.offset is None:
            out = {}
            for k, f in self.slices.items():
                if k:
                    out[k - 1] = f * k
            bound = self.bound if self.bound >= INF_ORDER else self.bound - 1
            return Series(self.n, bound, out, None)
        lam = LambdaRational.of(self.offset)
        out = {}
        for k, f in self.slices.items():
            c = lam + k
            if c:
                out[k] = f * c
        return Series(self.n, self.bound, out, lam - 1)

    def deriv_x(self, i):
        return Series(self.n, self.bound,
                      {k: f.deriv(i) for k, f in self.slices.items()}, self.offset)

    def with_offset_shift(self, delta):
        """Multiply by s^delta formally: offset += delta, slices unchanged."""
        base = LambdaRational.of(self.offset if self.offset is not None else 0)
        return Series(self.n, self.bound, dict(self.slices), base + LambdaRational.of(delta))

    def deoffset(self):
        """Turn an integer-constant offset into plain slice indices."""
        if self.offset is None:
            return self
        off = LambdaRational.of(self.offset)
        if not off.is_constant():
            raise JetError("offset still depends on lam")
        c = off.as_fraction()
        if c.denominator != 1:
            raise JetError(f"offset {c} is not an integer")
        c = int(c)
        out = {}
        for k, f in self.slices.items():
            if k + c < 0:
                raise JetError(f"negative power s^{k + c} in deoffset")
            out[k + c] = f
        return Series(self.n, self.bound + c, out, None)

    def restrict(self) -> Jet:
        """iota^*: the coefficient of s^0 (offset-free series only)."""
        if self.offset is not None:
            raise JetError("cannot restrict an offset-carrying series")
        return self.slice(0)

    def normal_derivative_at_zero(self, k) -> Jet:
        from math import factorial

        if self.offset is not None:
            raise JetError("offset-carrying series have no Taylor coefficients at 0")
        return self.slice(k) * factorial(k)

    def to_chart_jet(self, order=None, xorder=None) -> Jet:
        """Assemble back into a chart jet (offset-free series only).

        The honest box of the assembled jet is the total-degree simplex of
        size min_k (order(slice_k) + k): below that every slice is complete.
        """
        if self.offset is not None:
            raise JetError("offset-carrying series do not assemble into jets")
        from .charts import embed_boundary

        staircase = min(
            (f.order + k for k, f in self.slices.items()), default=INF_ORDER
        )
        acc = None
        for k, f in self.slices.items():
            # each piece s^k f_k is honest on the total-degree simplex of the
            # staircase bound, which is what the assembled jet will claim
            t = embed_boundary(f, order=staircase, xorder=staircase).shift_normal(k)
            acc = t if acc is None else acc + t
        if acc is None:
            acc = Jet(self.n + 1, INF_ORDER, {}, None, 0)
        else:
            acc = acc.with_orders(min(staircase, acc.order), min(staircase, acc.order))
        if order is not None or xorder is not None:
            acc = acc.truncate(order if order is not None else acc.order, xorder)
        return acc

    # -- inverses ---------------------------------------------------------------------

    def inverse(self):
        """Slice-wise Neumann inverse; slice 0 must be invertible."""
        if self.offset is not None:
            raise JetError("inverse of offset-carrying series is not defined here")
        if self.bound >= INF_ORDER:
            raise JetError("series inverse needs a finite bound")
        f0 = self.slices.get(0)
        if f0 is None or not as_exact(f0.constant_term()):
            raise JetError("series inverse needs an invertible zeroth slice")
        inv0 = jet_inverse(f0, order=f0.order)
        out = {0: inv0}
        for k in range(1, self.bound + 1):
            acc = None
            for j in range(1, k + 1):
                fj = self.slices.get(j)
                if fj is None:
                    continue
                t = fj * out[k - j]
                acc = t if acc is None else acc + t
            out[k] = -(inv0 * acc) if acc is not None else Jet(self.n, INF_ORDER, {})
        return Series(self.n, self.bound, out, None)

    def sqrt(self):
        """Slice-wise square root; slice 0 must admit a jet square root."""
        if self.offset is not None:
            raise JetError("sqrt of offset-carrying series is not defined here")
        if self.bound >= INF_ORDER:
            raise JetError("series sqrt needs a finite bound")
        f0 = self.slices.get(0)
        if f0 is None:
            raise JetError("series sqrt needs a nonzero zeroth slice")
        y0 = jet_sqrt(f0, order=f0.order)
        inv_2y0 = jet_inverse(2 * y0, order=y0.order)
        out = {0: y0}
        for k in range(1, self.bound + 1):
            acc = self.slices.get(k)
            for i in range(1, k):
                t = out[i] * out[k - i]
                acc = -t if acc is None else acc - t
            out[k] = inv_2y0 * acc if acc is not None else Jet(self.n, INF_ORDER, {})
        return Series(self.n, self.bound, out, None)

    def __repr__(self):
        off = "" if self.offset is None else f"s^({self.offset})*"
        ks = sorted(self.slices)
        return f"Series[{off}; slices {ks}; bound {self.bound}]"


class SlicedChart:
    """Slice decomposition of a normal-form chart (metric a^{-1} ds^2 + h_s or
    dr^2 + h_r) plus the operator coefficients of its Laplacian:

        Delta_G u = a u'' + A^{ij} d_i d_j u + B0 u' + B^i d_i u,

    where a = G^{ss} (the series 1 for the geodesic chart) and the coefficients
    are offset-free Series.  Also holds sqrt(det G) and the J-curvature slices.
    """

    def __init__(self, nf, bound=None):
        self.nf = nf
        self.n = nf.n
        n = self.n
        metric = nf.metric
        order = min(e.order for row in metric.g.entries for e in row)
        if bound is None:
            bound = order if order < INF_ORDER else 8
        self.bound = bound
        gi = metric.inverse()
        self.a = Series.from_chart_jet(gi[0, 0], bound)
        self.h_inv = [
            [Series.from_chart_jet(gi[i + 1, j + 1], bound) for j in range(n)]
            for i in range(n)
        ]
        self.h = [
            [Series.from_chart_jet(metric.g[i + 1, j + 1], bound) for j in range(n)]
            for i in range(n)
        ]
        w = metric.sqrt_det()
        self.W = Series.from_chart_jet(w, bound)
        self.W_inv = self.W.inverse()
        # B^mu = (1/W) d_nu (W G^{nu mu}); no cross terms in a normal form
        wa = Series.from_chart_jet(w * gi[0, 0], min(bound, w.order))
        self.B0 = self.W_inv * wa.deriv_s()
        self.Bi = []
        for i in range(n):
            acc = None
            for j in range(n):
                t = (self.W * self.h_inv[j][i]).deriv_x(j)
                acc = t if acc is None else acc + t
            self.Bi.append(self.W_inv * acc)
        self._J = None

    @property
    def J(self) -> Series:
        if self._J is None:
            self._J = Series.from_chart_jet(self.nf.scalar_j(), self.bound)
        return self._J

    def laplacian(self, u: Series) -> Series:
        """Delta_G applied to an (offset-free or offset-carrying) series."""
        up = u.deriv_s()
        upp = up.deriv_s()
        acc = self.a * upp + self.B0 * up
        for i in range(self.n):
            di = u.deriv_x(i)
            acc = acc + self.Bi[i] * di
            for j in range(self.n):
                acc = acc + self.h_inv[i][j] * di.deriv_x(j)
        return acc

    def gradient_normal(self, u: Series) -> Series:
        """<grad s, du>_G = a * u' (the normal-direction gradient pairing)."""
        return self.a * u.deriv_s()

    def inner_dx(self, u: Series, v: Series) -> Series:
        """h_s^{ij} d_i u d_j v."""
        acc = None
        for i in range(self.n):
            for j in range(self.n):
                t = self.h_inv[i][j] * u.deriv_x(i) * v.deriv_x(j)
                acc = t if acc is None else acc + t
        return acc if acc is not None else u.zero_like()

    def rho(self, sigma: Series) -> Series:
        """(n+1) rho = -Delta sigma - sigma J for a defining series."""
        return -(self.laplacian(sigma) + sigma * self.J) * Q(1, self.n + 1)

    def sc(self, sigma: Series) -> Series:
        """SC = |d sigma|^2 + 2 sigma rho."""
        sp = sigma.deriv_s()
        norm2 = self.a * sp * sp + self.inner_dx(sigma, sigma)
        return norm2 + 2 * sigma * self.rho(sigma)
