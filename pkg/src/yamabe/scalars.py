"""Exact scalar rings: rationals and rational functions of the spectral parameter.

Plain rationals are `fractions.Fraction`.  `LambdaRational` is a quotient of two
univariate polynomials in the parameter (written ``lam`` throughout) with Fraction
coefficients, stored with gcd 1 and a monic denominator.  Polynomials are dense
low-to-high tuples of Fractions with no trailing zeros.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd as _int_gcd

try:
    from gmpy2 import mpq as Q

    RATIONAL_TYPES = (int, Fraction, type(Q()))
except ImportError:  # pragma: no cover - gmpy2 is a hard speedup, Fraction works too
    Q = Fraction
    RATIONAL_TYPES = (int, Fraction)

# ---------------------------------------------------------------------------
# dense univariate polynomials over Fraction


def poly_trim(cs):
    n = len(cs)
    while n and not cs[n - 1]:
        n -= 1
    return tuple(cs[:n])


def poly_add(a, b):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] += c
    return poly_trim(out)


def poly_neg(a):
    return tuple(-c for c in a)


def poly_mul(a, b):
    if not a or not b:
        return ()
    out = [Q(0)] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if not ca:
            continue
        for j, cb in enumerate(b):
            if cb:
                out[i + j] += ca * cb
    return poly_trim(out)


def poly_scale(a, s):
    if not s:
        return ()
    return tuple(c * s for c in a)


def poly_divmod(a, b):
    """Quotient and remainder of a by b (b nonzero)."""
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    q = [Q(0)] * max(0, len(a) - len(b) + 1)
    inv = 1 / b[-1]
    for i in range(len(a) - len(b), -1, -1):
        c = a[i + len(b) - 1] * inv
        if c:
            q[i] = c
            for j, cb in enumerate(b):
                a[i + j] -= c * cb
    return poly_trim(q), poly_trim(a)


def _poly_content_primitive(a):
    # clear Fraction denominators, strip integer content; keeps Euclid small
    if not a:
        return ()
    den = 1
    for c in a:
        cd = int(c.denominator)
        den = den * cd // _int_gcd(den, cd)
    ints = [int(c * den) for c in a]
    g = 0
    for v in ints:
        g = _int_gcd(g, abs(v))
    if g > 1:
        ints = [v // g for v in ints]
    if ints[-1] < 0:
        ints = [-v for v in ints]
    return tuple(Q(v) for v in ints)


def poly_gcd(a, b):
    a, b = _poly_content_primitive(a), _poly_content_primitive(b)
    while b:
        _, r = poly_divmod(a, b)
        a, b = b, _poly_content_primitive(r)
    if not a:
        return ()
    return a


def poly_eval(a, x):
    acc = Q(0)
    for c in reversed(a):
        acc = acc * x + c
    return acc


def poly_deriv(a):
    return poly_trim([i * c for i, c in enumerate(a)][1:])


def poly_shift(a, c):
    """a(lam + c) by Horner in (lam + c)."""
    acc = ()
    lam_plus_c = (Q(c), Q(1))
    for coef in reversed(a):
        acc = poly_add(poly_mul(acc, lam_plus_c), (coef,) if coef else ())
    return acc


def poly_root_multiplicity(a, x):
    m = 0
    while a and not poly_eval(a, x):
        a, _ = poly_divmod(a, (-Q(x), Q(1)))
        m += 1
    return m


class LambdaRational:
    """Exact rational function of the spectral parameter lam.

    Invariants: gcd(num, den) = 1, den monic and nonzero.  Fractions coerce
    freely in arithmetic, so jets may mix Fraction and LambdaRational entries.
    """

    __slots__ = ("num", "den")

    def __init__(self, num=(), den=(Q(1),), _normalized=False):
        if isinstance(num, RATIONAL_TYPES):
            num = (Q(num),) if num else ()
        if isinstance(den, RATIONAL_TYPES):
            den = (Q(den),) if den else ()
        if not den:
            raise ZeroDivisionError("zero denominator")
        if not _normalized:
            num, den = self._normalize(num, den)
        self.num = num
        self.den = den

    @staticmethod
    def _normalize(num, den):
        num, den = poly_trim(num), poly_trim(den)
        if not num:
            return (), (Q(1),)
        g = poly_gcd(num, den)
        if len(g) > 1:
            num, _ = poly_divmod(num, g)
            den, _ = poly_divmod(den, g)
        lc = den[-1]
        if lc != 1:
            num = poly_scale(num, 1 / lc)
            den = poly_scale(den, 1 / lc)
        return num, den

    # -- constructors ------------------------------------------------------

    @classmethod
    def variable(cls):
        return cls((Q(0), Q(1)), (Q(1),), _normalized=True)

    @classmethod
    def of(cls, v):
        if isinstance(v, LambdaRational):
            return v
        if not isinstance(v, RATIONAL_TYPES):
            raise TypeError(f"cannot coerce {type(v).__name__} to LambdaRational")
        return cls(v)

    # -- predicates --------------------------------------------------------

    def __bool__(self):
        return bool(self.num)

    def is_polynomial(self):
        return self.den == (Q(1),)

    def is_constant(self):
        return len(self.num) <= 1 and self.is_polynomial()

    def as_fraction(self):
        if not self.is_constant():
            raise ValueError(f"not a constant: {self}")
        return self.num[0] if self.num else Q(0)

    def degree(self):
        """Degree of the numerator (None for 0); meaningful mainly for polynomials."""
        return len(self.num) - 1 if self.num else None

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, RATIONAL_TYPES + (LambdaRational,)):
            return NotImplemented
        o = LambdaRational.of(other)
        if self.den == o.den:
            return LambdaRational(poly_add(self.num, o.num), self.den)
        return LambdaRational(
            poly_add(poly_mul(self.num, o.den), poly_mul(o.num, self.den)),
            poly_mul(self.den, o.den),
        )

    __radd__ = __add__

    def __neg__(self):
        return LambdaRational(poly_neg(self.num), self.den, _normalized=True)

    def __sub__(self, other):
        if not isinstance(other, RATIONAL_TYPES + (LambdaRational,)):
            return NotImplemented
        return self + (-LambdaRational.of(other))

    def __rsub__(self, other):
        if not isinstance(other, RATIONAL_TYPES + (LambdaRational,)):
            return NotImplemented
        return LambdaRational.of(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, RATIONAL_TYPES + (LambdaRational,)):
            return NotImplemented
        o = LambdaRational.of(other)
        return LambdaRational(poly_mul(self.num, o.num), poly_mul(self.den, o.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, RATIONAL_TYPES + (LambdaRational,)):
            return NotImplemented
        o = LambdaRational.of(other)
        if not o.num:
            raise ZeroDivisionError("division by zero LambdaRational")
        return LambdaRational(poly_mul(self.num, o.den), poly_mul(self.den, o.num))

    def __rtruediv__(self, other):
        return LambdaRational.of(other) / self

    def __pow__(self, k):
        if k < 0:
            return (LambdaRational(1) / self) ** (-k)
        out = LambdaRational(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, RATIONAL_TYPES + (LambdaRational,)):
            return NotImplemented
        o = LambdaRational.of(other)
        return self.num == o.num and self.den == o.den

    def __hash__(self):
        return hash((self.num, self.den))

    # -- analysis ----------------------------------------------------------

    def __call__(self, x):
        """Evaluate at a rational point (must not be a pole)."""
        x = Q(x)
        d = poly_eval(self.den, x)
        if not d:
            raise ZeroDivisionError(f"evaluation at pole lam={x}")
        return poly_eval(self.num, x) / d

    def shift(self, c):
        """Substitute lam -> lam + c."""
        return LambdaRational(poly_shift(self.num, c), poly_shift(self.den, c))

    def deriv(self):
        """d/dlam."""
        return LambdaRational(
            poly_add(
                poly_mul(poly_deriv(self.num), self.den),
                poly_neg(poly_mul(self.num, poly_deriv(self.den))),
            ),
            poly_mul(self.den, self.den),
        )

    def residue(self, q):
        """Residue at lam=q; 0 if regular there.  Raises on a pole of order >= 2."""
        q = Q(q)

        m = poly_root_multiplicity(self.den, q)
        if m == 0:
            return Q(0)
        if m >= 2:
            raise ValueError(f"pole of order {m} >= 2 at lam={q}")
        reduced, _ = poly_divmod(self.den, (-q, Q(1)))
        return poly_eval(self.num, q) / poly_eval(reduced, q)

    def pole_orders(self):
        """Denominator roots found among rationals cannot be enumerated in general;
        this returns the denominator for inspection."""
        return self.den

    def __repr__(self):
        def fmt(p):
            if not p:
                return "0"
            parts = []
            for i, c in enumerate(p):
                if not c:
                    continue
                if i == 0:
                    parts.append(str(c))
                elif i == 1:
                    parts.append(f"{c}*lam" if c != 1 else "lam")
                else:
                    parts.append(f"{c}*lam^{i}" if c != 1 else f"lam^{i}")
            return " + ".join(parts)

        if self.is_polynomial():
            return fmt(self.num)
        return f"({fmt(self.num)})/({fmt(self.den)})"


LAMBDA = LambdaRational.variable()


def lambda_residue(f, q):
    """Residue at lam=q of a LambdaRational (or of a constant, which is 0)."""
    if isinstance(f, RATIONAL_TYPES):
        return Q(0)
    return f.residue(q)


def as_exact(v):
    """Collapse a scalar to a plain rational when it does not actually involve lam."""
    if isinstance(v, LambdaRational):
        if v.is_constant():
            return v.as_fraction()
        return v
    return Q(v)
