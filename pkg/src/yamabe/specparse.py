"""Geometry-spec parsing: TOML/JSON schema plus the polynomial expression grammar.

Grammar (no division operator; '/' only inside rational literals):

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := '-'* atom ('^' NONNEG_INT)?
    atom   := RATIONAL | IDENT | '(' expr ')'

Variables: y0..yn (ambient; y0 is the normal direction), x1..xn (boundary),
and s/r as aliases of the normal coordinate.
"""

from __future__ import annotations

import hashlib
import json

from .jets import INF_ORDER, Jet, JetError, JetMatrix
from .scalars import Q


class SpecError(ValueError):
    """Invalid geometry spec or polynomial expression."""

    def __init__(self, message, line=None, col=None):
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)
        self.line = line
        self.col = col


class InsufficientOrderError(SpecError):
    pass


# --- polynomial expressions ---------------------------------------------------


class _Token:
    __slots__ = ("kind", "value", "line", "col")

    def __init__(self, kind, value, line, col):
        self.kind = kind
        self.value = value
        self.line = line
        self.col = col


def _tokenize(text):
    out = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if c.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            num = int(text[i:j])
            k = j
            while k < len(text) and text[k].isspace() and text[k] != "\n":
                k += 1
            if k < len(text) and text[k] == "/":
                k += 1
                while k < len(text) and text[k].isspace() and text[k] != "\n":
                    k += 1
                if k >= len(text) or not text[k].isdigit():
                    raise SpecError("malformed rational literal", line, col)
                m = k
                while m < len(text) and text[m].isdigit():
                    m += 1
                den = int(text[k:m])
                if den == 0:
                    raise SpecError("zero denominator in rational literal", line, col)
                out.append(_Token("num", Q(num, den), line, col))
                col += m - i
                i = m
                continue
            out.append(_Token("num", Q(num), line, col))
            col += j - i
            i = j
            continue
        if c.isalpha():
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            out.append(_Token("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c in "+-*^()":
            out.append(_Token(c, c, line, col))
            i += 1
            col += 1
            continue
        raise SpecError(f"unexpected character {c!r}", line, col)
    out.append(_Token("end", None, line, col))
    return out


class PolynomialParser:
    """Recursive-descent parser producing exact Jets over a declared variable set."""

    def __init__(self, variables, nvars, normal=None):
        self.variables = variables  # name -> variable index
        self.nvars = nvars
        self.normal = normal

    def parse(self, text) -> Jet:
        self.toks = _tokenize(text)
        self.pos = 0
        jet = self._expr()
        tok = self.toks[self.pos]
        if tok.kind != "end":
            raise SpecError(f"unexpected token {tok.value!r}", tok.line, tok.col)
        return jet

    def _peek(self):
        return self.toks[self.pos]

    def _next(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def _expr(self):
        acc = self._term()
        while self._peek().kind in ("+", "-"):
            op = self._next().kind
            rhs = self._term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def _term(self):
        acc = self._factor()
        while self._peek().kind == "*":
            self._next()
            acc = acc * self._factor()
        return acc

    def _factor(self):
        sign = 1
        while self._peek().kind == "-":
            self._next()
            sign = -sign
        atom = self._atom()
        if self._peek().kind == "^":
            tok = self._next()
            e = self._peek()
            if e.kind != "num" or not isinstance(e.value, type(Q(1))) or e.value.denominator != 1 or e.value < 0:
                raise SpecError("exponent must be a nonnegative integer", tok.line, tok.col)
            self._next()
            atom = atom ** int(e.value)
        return atom if sign > 0 else -atom

    def _atom(self):
        tok = self._next()
        if tok.kind == "num":
            return Jet.constant(tok.value, self.nvars, INF_ORDER, None, self.normal)
        if tok.kind == "ident":
            idx = self.variables.get(tok.value)
            if idx is None:
                raise SpecError(f"unknown variable {tok.value!r}", tok.line, tok.col)
            return Jet.variable(idx, self.nvars, INF_ORDER, None, self.normal)
        if tok.kind == "(":
            inner = self._expr()
            closing = self._next()
            if closing.kind != ")":
                raise SpecError("expected ')'", closing.line, closing.col)
            return inner
        raise SpecError(f"unexpected token {tok.value!r}", tok.line, tok.col)


def ambient_parser(n) -> PolynomialParser:
    variables = {"y0": 0, "s": 0, "r": 0}
    for i in range(1, n + 1):
        variables[f"x{i}"] = i
        variables[f"y{i}"] = i
    return PolynomialParser(variables, n + 1, normal=0)


def boundary_parser(n) -> PolynomialParser:
    variables = {f"x{i}": i - 1 for i in range(1, n + 1)}
    return PolynomialParser(variables, n, normal=None)


# --- geometry specs -----------------------------------------------------------------


MIN_ORDER_FOR = {
    "sigma": lambda n: n + 2,
    "rho": lambda n: n + 2,
    "B": lambda n: n + 4,
    "v": lambda n: n + 2,
    "u": lambda n: n + 2,
    "w": lambda n: n + 2,
    "L-apply": lambda n: 4,
    "P": lambda n: n + 4,
    "Q": lambda n: n + 4,
    "Dres": lambda n: n + 4,
    "holographic": lambda n: n + 4,
}


class GeometrySpec:
    """Validated description of a computation input."""

    def __init__(self, dimension, order, background, hypersurface, defining_function,
                 orientation=1, params=None):
        self.dimension = dimension
        self.order = order
        self.background = background            # ("flat",) | ("model", name) | ("explicit", rows)
        self.hypersurface = hypersurface        # ("model",) | ("graph", text)
        self.defining_function = defining_function  # ("solve",) | ("distance",) | ("explicit", text)
        self.orientation = orientation
        self.params = params or {}

    def to_dict(self):
        out = {
            "dimension": self.dimension,
            "order": self.order,
            "background": _tag_to_dict(self.background),
            "hypersurface": _tag_to_dict(self.hypersurface),
            "defining_function": _tag_to_dict(self.defining_function),
            "orientation": self.orientation,
        }
        if self.params:
            out["params"] = {k: str(v) for k, v in sorted(self.params.items())}
        return out

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def __eq__(self, other):
        return isinstance(other, GeometrySpec) and self.to_dict() == other.to_dict()


def _tag_to_dict(tag):
    kind = tag[0]
    out = {"type": kind}
    if kind == "model":
        out["name"] = tag[1]
    elif kind == "graph":
        out["graph"] = tag[1]
    elif kind == "explicit":
        out["value"] = tag[1]
    return out


def parse_spec(text: str, fmt=None) -> GeometrySpec:
    """Parse a TOML or JSON geometry spec (format auto-detected when fmt=None)."""
    data = None
    errors = []
    formats = [fmt] if fmt else ["toml", "json"]
    for f in formats:
        try:
            if f == "toml":
                try:
                    import tomllib as toml_mod
                except ImportError:
                    import tomli as toml_mod
                data = toml_mod.loads(text)
            else:
                data = json.loads(text)
            break
        except Exception as exc:  # collect and retry with the other format
            errors.append(f"{f}: {exc}")
    if data is None:
        raise SpecError("could not parse spec as TOML or JSON: " + "; ".join(errors))
    return spec_from_dict(data)


def spec_from_dict(data) -> GeometrySpec:
    try:
        n = int(data["dimension"])
        order = int(data.get("order", n + 4))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"invalid dimension/order: {exc}")
    if n < 1:
        raise SpecError("dimension must be >= 1")

    bg = data.get("background", "flat")
    if isinstance(bg, str):
        if bg == "flat":
            background = ("flat",)
        elif bg.startswith("model:"):
            background = ("model", bg.split(":", 1)[1])
        else:
            raise SpecError(f"unknown background {bg!r}")
    elif isinstance(bg, dict):
        kind = bg.get("type", "flat")
        if kind == "flat":
            background = ("flat",)
        elif kind == "model":
            background = ("model", bg["name"])
        elif kind == "explicit":
            rows = bg.get("entries") or bg.get("value")
            if not rows:
                raise SpecError("explicit background needs 'entries'")
            background = ("explicit", rows)
        else:
            raise SpecError(f"unknown background type {kind!r}")
    else:
        raise SpecError("background must be a string or table")

    hs = data.get("hypersurface", {})
    if isinstance(hs, dict) and "graph" in hs:
        hypersurface = ("graph", hs["graph"])
    elif isinstance(hs, str) and hs.startswith("graph:"):
        hypersurface = ("graph", hs.split(":", 1)[1])
    else:
        hypersurface = ("model",)

    df = data.get("defining_function", "solve")
    if isinstance(df, dict):
        kind = df.get("type", "solve")
        if kind == "explicit":
            defining = ("explicit", df["expression"])
        elif kind in ("solve", "distance"):
            defining = (kind,)
        else:
            raise SpecError(f"unknown defining_function type {kind!r}")
    elif df in ("solve", "distance"):
        defining = (df,)
    elif isinstance(df, str):
        defining = ("explicit", df)
    else:
        raise SpecError("invalid defining_function")

    orientation = int(data.get("orientation", 1))
    if orientation not in (1, -1):
        raise SpecError("orientation must be +1 or -1 (interior side flag)")
    params = {k: Q(str(v)) for k, v in data.get("params", {}).items()}

    spec = GeometrySpec(n, order, background, hypersurface, defining, orientation, params)
    # validate the polynomials now so syntax errors surface before any compute
    if spec.hypersurface[0] == "graph":
        jet = boundary_parser(n).parse(spec.hypersurface[1])
        if jet.constant_term():
            raise SpecError("hypersurface graph must vanish at the base point")
    if spec.background[0] == "explicit":
        rows = spec.background[1]
        if len(rows) != n + 1 or any(len(r) != n + 1 for r in rows):
            raise SpecError("explicit background must be an (n+1) x (n+1) array of polynomials")
        for row in rows:
            for entry in row:
                ambient_parser(n).parse(entry)
    if spec.defining_function[0] == "explicit":
        ambient_parser(n).parse(spec.defining_function[1])
    return spec


def validate_order(spec: GeometrySpec, targets):
    need = max((MIN_ORDER_FOR.get(t.split(":")[0], lambda n: 4)(spec.dimension) for t in targets),
               default=4)
    if spec.order < need:
        raise InsufficientOrderError(
            f"order {spec.order} too small for targets {sorted(targets)}: minimum is {need}"
        )


def build_geometry(spec: GeometrySpec):
    """Materialize (MetricJet, sigma-or-None, EmbeddingJet | model) from a spec."""
    from .charts import EmbeddingJet
    from .geometry import MetricJet
    from .models import build_model

    n = spec.dimension
    if spec.background[0] == "model":
        model = build_model(spec.background[1], n=n, order=spec.order + 2, **spec.params)
        return model.metric, model.sigma, model.embedding, model
    if spec.background[0] == "flat":
        metric = MetricJet(JetMatrix.identity(n + 1, n + 1, normal=0))
    else:
        parser = ambient_parser(n)
        rows = [[parser.parse(e) for e in row] for row in spec.background[1]]
        metric = MetricJet(JetMatrix(rows))
    if spec.hypersurface[0] != "graph":
        raise SpecError("non-model backgrounds need hypersurface.graph")
    phi = boundary_parser(n).parse(spec.hypersurface[1])
    emb = EmbeddingJet(phi, positive_side=spec.orientation)
    sigma = None
    if spec.defining_function[0] == "explicit":
        sigma = ambient_parser(n).parse(spec.defining_function[1])
    return metric, sigma, emb, None
