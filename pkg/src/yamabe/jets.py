"""Truncated multivariate power series (jets) over exact scalars.

A Jet stores a sparse map from exponent multi-indices to nonzero coefficients
(Fraction or LambdaRational).  Truncation is by total degree `order`; an
optional anisotropic cap `xorder` bounds the degree in the tangential
variables, i.e. all variables except the distinguished `normal` one (the
r/s/y0 direction of a chart).  A monomial is stored iff

    deg <= order  and  xdeg <= xorder.

`order`/`xorder` record which coefficients are trustworthy, so they shrink
under derivatives and valuation-aware products.  Exact polynomials carry
INF_ORDER.  All values are immutable after construction; no operation mutates
its operands.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations_with_replacement
from operator import add as _add

from .scalars import RATIONAL_TYPES, LambdaRational, Q, as_exact

_SCALARS = RATIONAL_TYPES + (LambdaRational,)

INF_ORDER = 1 << 30

_ZERO = Q(0)


class JetError(ValueError):
    pass


class Jet:
    __slots__ = ("nvars", "order", "xorder", "normal", "coeffs", "_bs")

    def __init__(self, nvars, order, coeffs=None, xorder=None, normal=None):
        self.nvars = nvars
        self.order = min(order, INF_ORDER)
        self.xorder = self.order if xorder is None else min(xorder, INF_ORDER)
        self.normal = normal
        self._bs = None
        if coeffs:
            order_, xorder_, nrm = self.order, self.xorder, self.normal
            if nrm is None:
                cap = min(order_, xorder_)
                self.coeffs = {m: c for m, c in coeffs.items() if c and sum(m) <= cap}
            else:
                self.coeffs = {
                    m: c for m, c in coeffs.items()
                    if c and sum(m) <= order_ and sum(m) - m[nrm] <= xorder_
                }
        else:
            self.coeffs = {}

    @classmethod
    def _raw(cls, nvars, order, coeffs, xorder, normal):
        """Construct without filtering: coeffs must already respect the box."""
        j = cls.__new__(cls)
        j.nvars = nvars
        j.order = order
        j.xorder = xorder
        j.normal = normal
        j.coeffs = coeffs
        j._bs = None
        return j

    def _sorted_items(self):
        if self._bs is None:
            self._bs = sorted((sum(m), m, c) for m, c in self.coeffs.items())
        return self._bs

    # -- degree helpers ------------------------------------------------------

    def _xdeg(self, m):
        if self.normal is None:
            return sum(m)
        return sum(m) - m[self.normal]

    def valuation(self):
        """Smallest total degree of a stored monomial (INF_ORDER if zero)."""
        return min((sum(m) for m in self.coeffs), default=INF_ORDER)

    def xvaluation(self):
        return min((self._xdeg(m) for m in self.coeffs), default=INF_ORDER)

    def degree(self):
        """Largest stored total degree (-1 if zero)."""
        return max((sum(m) for m in self.coeffs), default=-1)

    # -- constructors ----------------------------------------------------------

    @classmethod
    def constant(cls, c, nvars, order=INF_ORDER, xorder=None, normal=None):
        j = cls(nvars, order, None, xorder, normal)
        if c:
            j.coeffs = {(0,) * nvars: c if isinstance(c, LambdaRational) else Q(c)}
        return j

    @classmethod
    def variable(cls, i, nvars, order=INF_ORDER, xorder=None, normal=None):
        m = tuple(1 if k == i else 0 for k in range(nvars))
        j = cls(nvars, order, None, xorder, normal)
        j.coeffs = {m: Q(1)}
        return j

    @classmethod
    def monomial(cls, m, c, order=INF_ORDER, xorder=None, normal=None):
        j = cls(len(m), order, None, xorder, normal)
        if c:
            j.coeffs = {tuple(m): c if isinstance(c, LambdaRational) else Q(c)}
        return j

    def zero_like(self):
        return Jet(self.nvars, self.order, None, self.xorder, self.normal)

    def with_orders(self, order=None, xorder=None):
        return Jet(
            self.nvars,
            self.order if order is None else order,
            self.coeffs,
            self.xorder if xorder is None else xorder,
            self.normal,
        )

    # -- structure -------------------------------------------------------------

    def _check_compatible(self, other):
        if self.nvars != other.nvars:
            raise JetError(f"variable-count mismatch: {self.nvars} != {other.nvars}")
        if (
            self.normal != other.normal
            and self.xorder < INF_ORDER
            and other.xorder < INF_ORDER
        ):
            raise JetError(f"normal-variable mismatch: {self.normal} != {other.normal}")

    def _merged_normal(self, other):
        if self.normal == other.normal:
            return self.normal
        if self.xorder < INF_ORDER:
            return self.normal
        if other.xorder < INF_ORDER:
            return other.normal
        return self.normal if self.normal is not None else other.normal

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        """Exact equality of all coefficients up to the common valid orders."""
        if isinstance(other, _SCALARS):
            other = Jet.constant(other, self.nvars)
        if not isinstance(other, Jet):
            return NotImplemented
        if self.nvars != other.nvars:
            return False
        order = min(self.order, other.order)
        xorder = min(self.xorder, other.xorder)
        nrm = self.normal if self.normal is not None else other.normal

        def xdeg(m):
            return sum(m) if nrm is None else sum(m) - m[nrm]

        for m in set(self.coeffs) | set(other.coeffs):
            if sum(m) > order or xdeg(m) > xorder:
                continue
            a = as_exact(self.coeffs.get(m, _ZERO))
            b = as_exact(other.coeffs.get(m, _ZERO))
            if isinstance(a, LambdaRational) or isinstance(b, LambdaRational):
                if LambdaRational.of(a) != LambdaRational.of(b):
                    return False
            elif a != b:
                return False
        return True

    def __hash__(self):  # pragma: no cover - jets are not meant as dict keys
        return hash((self.nvars, frozenset(self.coeffs.items())))

    def constant_term(self):
        return self.coeffs.get((0,) * self.nvars, _ZERO)

    def coefficient(self, m):
        return self.coeffs.get(tuple(m), _ZERO)

    # -- ring operations ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, _SCALARS):
            other = Jet.constant(other, self.nvars, normal=self.normal)
        self._check_compatible(other)
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            s = out.get(m, _ZERO) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        order = min(self.order, other.order)
        xorder = min(self.xorder, other.xorder)
        nrm = self._merged_normal(other)
        if order == self.order == other.order and xorder == self.xorder == other.xorder:
            return Jet._raw(self.nvars, order, out, xorder, nrm)
        return Jet(self.nvars, order, out, xorder, nrm)

    __radd__ = __add__

    def __neg__(self):
        j = Jet(self.nvars, self.order, None, self.xorder, self.normal)
        j.coeffs = {m: -c for m, c in self.coeffs.items()}
        return j

    def __sub__(self, other):
        if isinstance(other, _SCALARS):
            other = Jet.constant(other, self.nvars, normal=self.normal)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, _SCALARS):
            if not other:
                return self.zero_like()
            j = Jet(self.nvars, self.order, None, self.xorder, self.normal)
            j.coeffs = {m: c * other for m, c in self.coeffs.items()}
            return j
        self._check_compatible(other)
        order = min(self.order, other.order)
        xorder = min(self.xorder, other.xorder)
        normal = self._merged_normal(other)
        out = {}
        if len(self.coeffs) > len(other.coeffs):
            small, big = other, self
        else:
            small, big = self, other
        nrm = normal
        bs = big._sorted_items()
        check_x = nrm is not None and xorder < order
        cap = min(order, xorder) if nrm is None else order
        get = out.get
        for ma, ca in small.coeffs.items():
            da = sum(ma)
            lim = cap - da
            if lim < 0:
                continue
            for db, mb, cb in bs:
                if db > lim:
                    break
                m = tuple(map(_add, ma, mb))
                if check_x and da + db - m[nrm] > xorder:
                    continue
                v = get(m)
                v = ca * cb if v is None else v + ca * cb
                if v:
                    out[m] = v
                elif m in out:
                    del out[m]
        return Jet._raw(self.nvars, order, out, xorder, normal)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, _SCALARS):
            if not other:
                raise ZeroDivisionError("jet division by zero scalar")
            if isinstance(other, LambdaRational):
                return self * (LambdaRational(1) / other)
            return self * (Q(1) / Q(other))
        return self * jet_inverse(other)

    def __pow__(self, k):
        if k < 0:
            return jet_inverse(self) ** (-k)
        out = Jet.constant(1, self.nvars, self.order, self.xorder, self.normal)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    # -- calculus ---------------------------------------------------------------

    def deriv(self, i):
        """Partial derivative in variable i."""
        out = {}
        for m, c in self.coeffs.items():
            e = m[i]
            if e:
                mm = m[:i] + (e - 1,) + m[i + 1 :]
                out[mm] = c * e
        order = self.order if self.order >= INF_ORDER else self.order - 1
        if self.normal is not None and i == self.normal:
            xorder = self.xorder
        else:
            xorder = self.xorder if self.xorder >= INF_ORDER else self.xorder - 1
        j = Jet(self.nvars, order, None, xorder, self.normal)
        j.coeffs = out
        return j

    def integrate(self, i):
        """Antiderivative in variable i with zero constant."""
        out = {}
        for m, c in self.coeffs.items():
            mm = m[:i] + (m[i] + 1,) + m[i + 1 :]
            out[mm] = c / (m[i] + 1)
        order = self.order if self.order >= INF_ORDER else self.order + 1
        if self.normal is not None and i == self.normal:
            xorder = self.xorder
        else:
            xorder = self.xorder if self.xorder >= INF_ORDER else self.xorder + 1
        j = Jet(self.nvars, order, None, xorder, self.normal)
        j.coeffs = out
        return j

    def truncate(self, order, xorder=None):
        return Jet(self.nvars, min(self.order, order), self.coeffs,
                   self.xorder if xorder is None else min(self.xorder, xorder),
                   self.normal)

    # -- slicing along the normal variable ---------------------------------------

    def normal_coefficient(self, k, drop=True):
        """Coefficient jet of (normal variable)^k.

        With drop=True the normal variable is removed from the result (a
        boundary jet in the remaining variables); otherwise it is kept with
        exponent 0.
        """
        i = self.normal
        if i is None:
            raise JetError("jet has no distinguished normal variable")
        out = {}
        for m, c in self.coeffs.items():
            if m[i] == k:
                out[(m[:i] + m[i + 1 :]) if drop else (m[:i] + (0,) + m[i + 1 :])] = c
        order = self.order if self.order >= INF_ORDER else self.order - k
        xorder = min(self.xorder, order)
        if drop:
            j = Jet(self.nvars - 1, min(order, xorder), None, None, None)
        else:
            j = Jet(self.nvars, order, None, xorder, i)
        j.coeffs = out
        return j

    def restrict(self):
        """iota*: set the normal variable to zero, returning a boundary jet."""
        return self.normal_coefficient(0)

    def normal_parts(self):
        """Split into {k: boundary jet} along powers of the normal variable."""
        i = self.normal
        ks = sorted({m[i] for m in self.coeffs})
        return {k: self.normal_coefficient(k) for k in ks}

    def shift_normal(self, k):
        """Multiply by (normal variable)^k, or exact division for k < 0.

        Division raises unless every stored monomial has normal exponent >= -k.
        """
        i = self.normal
        if i is None:
            raise JetError("jet has no distinguished normal variable")
        out = {}
        for m, c in self.coeffs.items():
            if m[i] + k < 0:
                raise JetError(
                    f"inexact division by normal^{-k}: found monomial {m}"
                )
            out[m[:i] + (m[i] + k,) + m[i + 1 :]] = c
        order = self.order if self.order >= INF_ORDER else self.order + k
        j = Jet(self.nvars, order, None, self.xorder, i)
        j.coeffs = out
        return j

    # -- misc ---------------------------------------------------------------------

    def map_coeffs(self, fn):
        out = {}
        for m, c in self.coeffs.items():
            v = fn(c)
            if v:
                out[m] = v
        j = Jet(self.nvars, self.order, None, self.xorder, self.normal)
        j.coeffs = out
        return j

    def eval_float(self, point):
        return float(
            sum(
                float(as_exact(c)) * _prod(point[i] ** e for i, e in enumerate(m))
                for m, c in self.coeffs.items()
            )
        )

    def monomials_sorted(self):
        return sorted(self.coeffs, key=lambda m: (sum(m), m))

    def __repr__(self):
        parts = []
        for m in self.monomials_sorted()[:12]:
            parts.append(f"{self.coeffs[m]}*x^{m}")
        more = "..." if len(self.coeffs) > 12 else ""
        return f"Jet[{self.nvars}v,K={self.order}]({' + '.join(parts)}{more})"


def _prod(it):
    out = 1.0
    for v in it:
        out *= v
    return out


# -- derived operations ------------------------------------------------------


def jet_mul(a: Jet, b: Jet) -> Jet:
    return a * b


def jet_inverse(a: Jet, order=None, xorder=None) -> Jet:
    """Multiplicative inverse by Newton iteration; requires a(0) != 0."""
    c0 = as_exact(a.constant_term())
    if not c0:
        raise JetError("jet_inverse: zero constant term")
    order = a.order if order is None else min(order, a.order)
    xorder = a.xorder if xorder is None else min(xorder, a.xorder)
    if order >= INF_ORDER and a.degree() > 0:
        raise JetError("jet_inverse of a non-constant exact polynomial needs a finite order")
    a = a.truncate(order, xorder)
    if isinstance(c0, LambdaRational):
        x = Jet.constant(1 / c0, a.nvars, order, xorder, a.normal)
    else:
        x = Jet.constant(Q(1) / c0, a.nvars, order, xorder, a.normal)
    k = 0 if a.degree() <= 0 else order
    two = Jet.constant(2, a.nvars, normal=a.normal)
    n = 1
    while n <= k:
        x = x * (two - a * x)
        n *= 2
    return x.truncate(order, xorder)


def is_rational_square(q):
    q = Q(q)
    if q < 0:
        return None
    ns = _isqrt(q.numerator)
    ds = _isqrt(q.denominator)
    if ns * ns == q.numerator and ds * ds == q.denominator:
        return Q(ns, ds)
    return None


def _isqrt(n):
    if n < 0:
        return -1
    x = int(n**0.5)
    while x * x > n:
        x -= 1
    while (x + 1) * (x + 1) <= n:
        x += 1
    return x


def jet_sqrt(a: Jet, order=None, xorder=None) -> Jet:
    """Square root with positive rational constant term; requires a(0) a rational square."""
    c0 = as_exact(a.constant_term())
    if isinstance(c0, LambdaRational):
        raise JetError("jet_sqrt needs a rational constant term")
    r0 = is_rational_square(c0)
    if not r0:
        raise JetError(f"jet_sqrt: constant term {c0} is not a positive rational square")
    order = a.order if order is None else min(order, a.order)
    xorder = a.xorder if xorder is None else min(xorder, a.xorder)
    if order >= INF_ORDER and a.degree() > 0:
        raise JetError("jet_sqrt of a non-constant exact polynomial needs a finite order")
    a = a.truncate(order, xorder)
    x = Jet.constant(r0, a.nvars, order, xorder, a.normal)
    if a.degree() <= 0:
        return x
    half = Q(1, 2)
    n = 1
    while n <= order:
        x = (x + a * jet_inverse(x, order, xorder)) * half
        n *= 2
    return x.truncate(order, xorder)


def jet_exp(a: Jet) -> Jet:
    """exp of a jet with zero constant term (finite sum after truncation).

    Scalars may involve lam, so this also realizes Omega^lam = exp(lam*log(Omega)).
    """
    if a.constant_term():
        raise JetError("jet_exp needs a zero constant term")
    if a.order >= INF_ORDER:
        raise JetError("jet_exp needs a finite order")
    out = Jet.constant(1, a.nvars, a.order, a.xorder, a.normal)
    term = Jet.constant(1, a.nvars, a.order, a.xorder, a.normal)
    for k in range(1, a.order + 1):
        term = term * a / Q(k)
        if not term:
            break
        out = out + term
    return out


def jet_log(a: Jet) -> Jet:
    """log of a jet with constant term 1."""
    if as_exact(a.constant_term()) != 1:
        raise JetError("jet_log needs constant term 1")
    if a.order >= INF_ORDER:
        raise JetError("jet_log needs a finite order")
    u = a - 1
    out = u.zero_like()
    term = Jet.constant(-1, a.nvars, a.order, a.xorder, a.normal)
    for k in range(1, a.order + 1):
        term = -term * u
        if not term:
            break
        out = out + term / Q(k)
    return out


def jet_root(a: Jet, k: int) -> Jet:
    """k-th root of a jet whose constant term is an exact k-th power of a rational."""
    if k == 1:
        return a
    if k == 2:
        return jet_sqrt(a)
    c0 = as_exact(a.constant_term())
    if isinstance(c0, LambdaRational) or c0 <= 0:
        raise JetError("jet_root needs a positive rational constant term")
    if c0 == 1:
        return jet_exp(jet_log(a) / Q(k))
    r0n = _iroot(c0.numerator, k)
    r0d = _iroot(c0.denominator, k)
    if r0n**k != c0.numerator or r0d**k != c0.denominator:
        raise JetError(f"jet_root: {c0} is not a rational {k}-th power")
    r0 = Q(r0n, r0d)
    return jet_exp(jet_log(a / c0) / Q(k)) * r0


def _iroot(n, k):
    if n < 2:
        return n
    x = int(round(n ** (1.0 / k)))
    while x**k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


def jet_substitute(f: Jet, subs, shift=None) -> Jet:
    """Compose f with substitution jets (one per variable of f).

    Substitution jets must have zero constant term unless the matching entry
    of `shift` supplies the base-point value explicitly (it is then subtracted
    before composition and f is re-expanded around it -- only constant shifts
    equal to the substitution's constant term are supported).
    """
    if len(subs) != f.nvars:
        raise JetError(f"arity mismatch: {f.nvars} variables, {len(subs)} substitutions")
    if not subs:
        return f
    tmpl = subs[0]
    for idx, s in enumerate(subs):
        if s.constant_term():
            sh = None if shift is None else shift[idx]
            if sh is None or as_exact(sh) != as_exact(s.constant_term()):
                raise JetError("substitution jet has a nonzero constant term and no matching shift")
    subs = [s - s.constant_term() if s.constant_term() else s for s in subs]
    order = min((s.order for s in subs), default=INF_ORDER)
    if f.order < INF_ORDER:
        order = min(order, f.order)
    xorder = min((s.xorder for s in subs), default=INF_ORDER)
    return _subst(f, subs, f.nvars, tmpl, order, xorder)


def _subst(f, subs, nv, tmpl, order, xorder):
    """Horner-style substitution in the last variable, recursing on the rest."""
    if nv == 0:
        c = f.constant_term()
        return Jet.constant(c, tmpl.nvars, order, xorder, tmpl.normal)
    i = nv - 1
    # split f by powers of variable i
    layers = {}
    for m, c in f.coeffs.items():
        layers.setdefault(m[i], {})[m[:i] + (0,) + m[i + 1 :]] = c
    if not layers:
        return Jet(tmpl.nvars, order, None, xorder, tmpl.normal)
    kmax = max(layers)
    acc = Jet(tmpl.nvars, order, None, xorder, tmpl.normal)
    s_i = subs[i].truncate(order, xorder)
    for k in range(kmax, -1, -1):
        if k in layers:
            fk = Jet(f.nvars, f.order, layers[k], f.xorder, f.normal)
            fk.coeffs = layers[k]
            acc = acc + _subst(fk, subs, nv - 1, tmpl, order, xorder)
        if k:
            acc = acc * s_i
    return acc


class JetMatrix:
    """Square matrix of jets; used for metrics and bilinear forms."""

    __slots__ = ("dim", "entries")

    def __init__(self, entries):
        self.entries = [list(row) for row in entries]
        self.dim = len(self.entries)
        for row in self.entries:
            if len(row) != self.dim:
                raise JetError("JetMatrix must be square")

    def __getitem__(self, ij):
        return self.entries[ij[0]][ij[1]]

    @classmethod
    def identity(cls, dim, nvars, order=INF_ORDER, xorder=None, normal=None):
        return cls(
            [
                [
                    Jet.constant(1 if i == j else 0, nvars, order, xorder, normal)
                    for j in range(dim)
                ]
                for i in range(dim)
            ]
        )

    def __add__(self, other):
        return JetMatrix(
            [
                [self.entries[i][j] + other.entries[i][j] for j in range(self.dim)]
                for i in range(self.dim)
            ]
        )

    def __sub__(self, other):
        return JetMatrix(
            [
                [self.entries[i][j] - other.entries[i][j] for j in range(self.dim)]
                for i in range(self.dim)
            ]
        )

    def __mul__(self, other):
        if isinstance(other, JetMatrix):
            return JetMatrix(
                [
                    [
                        _jsum(self.entries[i][k] * other.entries[k][j] for k in range(self.dim))
                        for j in range(self.dim)
                    ]
                    for i in range(self.dim)
                ]
            )
        return JetMatrix([[e * other for e in row] for row in self.entries])

    __rmul__ = __mul__

    def is_symmetric(self):
        return all(
            self.entries[i][j] == self.entries[j][i]
            for i in range(self.dim)
            for j in range(i)
        )

    def transpose(self):
        return JetMatrix(
            [[self.entries[j][i] for j in range(self.dim)] for i in range(self.dim)]
        )

    def map(self, fn):
        return JetMatrix([[fn(e) for e in row] for row in self.entries])

    def det(self) -> Jet:
        return _det(self.entries)

    def trace(self) -> Jet:
        return _jsum(self.entries[i][i] for i in range(self.dim))

    def __eq__(self, other):
        return self.dim == other.dim and all(
            self.entries[i][j] == other.entries[i][j]
            for i in range(self.dim)
            for j in range(self.dim)
        )

    def constant_matrix(self):
        return [[as_exact(e.constant_term()) for e in row] for row in self.entries]


def _jsum(it):
    out = None
    for v in it:
        out = v if out is None else out + v
    return out


def _det(rows):
    return det_subset_dp(rows)


def det_subset_dp(rows):
    """Determinant over any commutative ring of jet-like values.

    Dynamic programming over column subsets (minors of the first k rows):
    O(d^2 2^d) ring multiplications instead of the O(d!) cofactor recursion.
    """
    d = len(rows)
    if d == 1:
        return rows[0][0]
    if d == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    current = {0: None}  # column bitmask -> minor; None means the empty product 1
    for k in range(d):
        nxt = {}
        row = rows[k]
        row_sign = -1 if k % 2 else 1
        for mask, val in current.items():
            sign = row_sign
            for j in range(d):
                bit = 1 << j
                if mask & bit:
                    sign = -sign
                    continue
                entry = row[j]
                if not entry:
                    continue
                term = entry if val is None else val * entry
                if sign < 0:
                    term = -term
                key = mask | bit
                acc = nxt.get(key)
                nxt[key] = term if acc is None else acc + term
        current = nxt
        if not current:
            break
    out = current.get((1 << d) - 1) if current else None
    return out if out is not None else rows[0][0].zero_like()


def _frac_matrix_inverse(m):
    """Exact inverse of a matrix of Fractions (Gauss-Jordan)."""
    d = len(m)
    a = [
        [Q(m[i][j]) for j in range(d)] + [Q(1) if k == i else Q(0) for k in range(d)]
        for i in range(d)
    ]
    for col in range(d):
        piv = next((r for r in range(col, d) if a[r][col]), None)
        if piv is None:
            raise JetError("singular constant-term matrix")
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(d):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    return [row[d:] for row in a]


def matrix_inverse(m: JetMatrix, order=None, xorder=None) -> JetMatrix:
    """Inverse of a jet matrix by Newton iteration on the constant-term inverse."""
    c = m.constant_matrix()
    for row in c:
        for v in row:
            if isinstance(v, LambdaRational):
                raise JetError("matrix_inverse expects rational constant terms")
    tmpl = m.entries[0][0]
    order = (
        min(e.order for row in m.entries for e in row) if order is None else order
    )
    xorder = (
        min(e.xorder for row in m.entries for e in row) if xorder is None else xorder
    )
    finite = all(e.degree() <= 0 for row in m.entries for e in row)
    if order >= INF_ORDER and not finite:
        raise JetError("matrix_inverse of non-constant exact entries needs a finite order")
    c0inv = _frac_matrix_inverse(c)
    x = JetMatrix(
        [
            [Jet.constant(c0inv[i][j], tmpl.nvars, order, xorder, tmpl.normal) for j in range(m.dim)]
            for i in range(m.dim)
        ]
    )
    if finite:
        return x
    mt = m.map(lambda e: e.truncate(order, xorder))
    two_id = JetMatrix.identity(m.dim, tmpl.nvars, normal=tmpl.normal) * Jet.constant(
        2, tmpl.nvars, normal=tmpl.normal
    )
    n = 1
    while n <= order:
        x = x * (two_id - mt * x)
        n *= 2
    return x.map(lambda e: e.truncate(order, xorder))


def monomials_up_to(nvars, degree):
    """All exponent multi-indices of total degree <= degree, sorted by (deg, lex)."""
    out = [(0,) * nvars]
    for d in range(1, degree + 1):
        for combo in combinations_with_replacement(range(nvars), d):
            m = [0] * nvars
            for i in combo:
                m[i] += 1
            out.append(tuple(m))
    seen = set()
    uniq = [m for m in out if not (m in seen or seen.add(m))]
    uniq.sort(key=lambda m: (sum(m), m))
    return uniq
