"""Built-in model geometries with closed-form expected data.

Each builder returns a ModelGeometry holding the ambient chart (variable 0 is
the graph/normal direction), the defining function, the embedding, and a dict
of expected closed forms evaluated lazily at a requested order.  Boundary
coordinates are normalized so h(0) = id.
"""

from __future__ import annotations

from .charts import EmbeddingJet
from .geometry import MetricJet, sum_jets
from .jets import INF_ORDER, Jet, JetError, JetMatrix, jet_inverse, jet_root, jet_sqrt
from .scalars import Q


class ModelGeometry:
    def __init__(self, name, n, metric, sigma, embedding, expected=None, params=None):
        self.name = name
        self.n = n
        self.metric = metric          # MetricJet, ambient chart
        self.sigma = sigma            # Jet (ambient chart)
        self.embedding = embedding    # EmbeddingJet
        self.expected = expected or {}
        self.params = params or {}

    def __repr__(self):
        return f"ModelGeometry({self.name}, n={self.n})"


def _flat_metric(d):
    return MetricJet(JetMatrix.identity(d, d, normal=0))


def _zero_graph(n):
    return EmbeddingJet(Jet(n, INF_ORDER, {}))


def _round_boundary_metric(n, order):
    """Unit round S^n in conformal coordinates: (1+|x|^2/4)^(-2) delta."""
    x2 = sum_jets(Jet.variable(i, n, order) ** 2 for i in range(n))
    phi2 = jet_inverse((1 + x2 / Q(4)) ** 2, order=order)
    zero = phi2.zero_like()
    return JetMatrix([[phi2 if i == j else zero for j in range(n)] for i in range(n)])


def hyperplane(n, order=8):
    d = n + 1
    sigma = Jet.variable(0, d, INF_ORDER, normal=0)
    expected = {
        "a": lambda K: Jet.constant(1, d, INF_ORDER, None, 0),
        "h_s": lambda K: JetMatrix.identity(n, d, INF_ORDER, None, 0),
        "rho": lambda K: Jet(d, INF_ORDER, {}, None, 0),
        "v": lambda K: Jet.constant(1, d, INF_ORDER, None, 0),
        "ring_v": lambda K: Jet.constant(1, d, INF_ORDER, None, 0),
    }
    return ModelGeometry("hyperplane", n, _flat_metric(d), sigma, _zero_graph(n), expected)


def _sphere_graph(n, order):
    """w = -1 + sqrt(1-|x|^2): the unit sphere about the shifted base point."""
    x2 = sum_jets(Jet.variable(i, n, order) ** 2 for i in range(n))
    return jet_sqrt(1 - x2, order=order) - 1


def ball_sphere(n, order=8):
    """Flat ambient, sigma = (1-|y|^2)/2, M the unit sphere; interior side positive."""
    d = n + 1
    w = Jet.variable(0, d, INF_ORDER, normal=0)
    x2 = sum_jets(Jet.variable(i, d, INF_ORDER, normal=0) ** 2 for i in range(1, d))
    sigma = -w - (w * w + x2) / Q(2)
    emb = EmbeddingJet(_sphere_graph(n, order + 2), positive_side=-1)

    def h_s(K):
        # (1-2s) h with h the induced round metric in graph coordinates
        from .charts import hypersurface_data

        surf = hypersurface_data(_flat_metric(d), emb, order=K)
        s = Jet.variable(0, d, INF_ORDER, K, 0)
        from .charts import embed_boundary

        return JetMatrix(
            [
                [(1 - 2 * s) * embed_boundary(surf.h[i, j]) for j in range(n)]
                for i in range(n)
            ]
        )

    expected = {
        "a": lambda K: 1 - 2 * Jet.variable(0, d, INF_ORDER, K, 0),
        "rho": lambda K: Jet.constant(1, d, INF_ORDER, K, 0),
        "h_s": h_s,
        "v": lambda K: _power_jet(1 - 2 * Jet.variable(0, d, K, K, 0), n - 1, 2, K),
        "ring_v": lambda K: _power_jet(1 - 2 * Jet.variable(0, d, K, K, 0), n, 2, K),
        "v1d": lambda K: _power_1d(lambda s: 1 - 2 * s, n - 1, 2, K),
    }
    return ModelGeometry("ball-sphere", n, _flat_metric(d), sigma, emb, expected)


def _power_jet(base, p, q, order):
    """base^(p/q) as a jet (base has constant term 1)."""
    t = base.truncate(order)
    if q == 1:
        return t**p if p >= 0 else jet_inverse(t ** (-p), order=order)
    r = jet_root(t, q)
    return r**p if p >= 0 else jet_inverse(r ** (-p), order=order)


def _power_1d(f, p, q, order):
    s = Jet.variable(0, 1, order)
    return _power_jet(f(s), p, q, order)


def subsphere(n, order=8):
    """Equatorial S^n in round S^(n+1); sigma is the height function."""
    d = n + 1
    ys = [Jet.variable(a, d, order, normal=0) for a in range(d)]
    y2 = sum_jets(y * y for y in ys)
    conf = jet_inverse(1 + y2 / Q(4), order=order)
    phi2 = conf * conf
    zero = phi2.zero_like()
    g = MetricJet(JetMatrix([[phi2 if a == b else zero for b in range(d)] for a in range(d)]))
    sigma = ys[0] * conf
    s = Jet.variable(0, d, INF_ORDER, order, 0)

    def h_s(K):
        from .charts import embed_boundary

        hb = _round_boundary_metric(n, K)
        return JetMatrix(
            [
                [(1 - s * s).truncate(K) * embed_boundary(hb[i, j]) for j in range(n)]
                for i in range(n)
            ]
        )

    expected = {
        "a": lambda K: (1 - s * s).truncate(K),
        "rho": lambda K: (s / Q(2)).truncate(K),
        "h_s": h_s,
        "v": lambda K: _power_jet(1 - (s * s).truncate(K), n - 1, 2, K),
        "ring_v": lambda K: _power_jet(1 - (s * s).truncate(K), n, 2, K),
        "J": Q(n + 1, 2),
        "v1d": lambda K: _power_1d(lambda t: 1 - t * t, n - 1, 2, K),
    }
    return ModelGeometry("subsphere", n, g, sigma, _zero_graph(n), expected)


def height_sphere(n, order=8):
    """Same geometry as subsphere, exposing the ambient eigenfunction data."""
    m = subsphere(n, order)
    d = n + 1
    ys = [Jet.variable(a, d, order, normal=0) for a in range(d)]
    y2 = sum_jets(y * y for y in ys)
    conf = jet_inverse(1 + y2 / Q(4), order=order)
    m.name = "height-sphere"
    m.expected = dict(m.expected)
    m.expected["ambient_rho"] = m.sigma / Q(2)
    m.expected["laplace_eigenvalue"] = -(n + 1)
    m.expected["conformal_factor"] = conf
    return m


def hyperbolic_shell(n, c=Q(1), order=8):
    """Upper half-space hyperbolic background, M = {r=c}, sigma = 1 - c/r.

    Coordinates are normalized (w = r/c - 1 and unit-volume flat cross-section),
    in which c drops out of every jet.
    """
    c = Q(c)
    if c <= 0:
        raise JetError("shell parameter c must be positive")
    d = n + 1
    w = Jet.variable(0, d, order, normal=0)
    f = jet_inverse((1 + w) ** 2, order=order)
    zero = f.zero_like()
    g = MetricJet(JetMatrix([[f if a == b else zero for b in range(d)] for a in range(d)]))
    sigma = w * jet_inverse(1 + w, order=order)
    s = Jet.variable(0, d, INF_ORDER, order, 0)

    def h_s(K):
        one = Jet.constant(1, d, INF_ORDER, K, 0)
        z = one.zero_like()
        fac = ((1 - s) * (1 - s)).truncate(K)
        return JetMatrix([[fac if i == j else z for j in range(n)] for i in range(n)])

    expected = {
        "a": lambda K: ((1 - s) * (1 - s)).truncate(K),
        "rho": lambda K: (1 - s / Q(2)).truncate(K),
        "h_s": h_s,
        "v": lambda K: _power_jet((1 - s).truncate(K), n - 1, 1, K),
        "ring_v": lambda K: _power_jet((1 - s).truncate(K), n, 1, K),
        "J": Q(-(n + 1), 2),
        "H": Q(-1),
        "v1d": lambda K: _power_1d(lambda t: 1 - t, n - 1, 1, K),
    }
    return ModelGeometry("hyperbolic-shell", n, g, sigma, _zero_graph(n), expected, {"c": c})


def pe_toy(n, order=8):
    """Poincare-Einstein normal form over the round sphere: dr^2 + (1-r^2/4)^2 h."""
    d = n + 1
    r = Jet.variable(0, d, INF_ORDER, normal=0)
    hb = _round_boundary_metric(n, order)
    from .charts import embed_boundary

    fac = (1 - r * r / Q(4)) ** 2
    one = Jet.constant(1, d, INF_ORDER, None, 0)
    zero = one.zero_like()
    rows = [[one] + [zero] * n]
    for i in range(n):
        rows.append([zero] + [fac * embed_boundary(hb[i, j]) for j in range(n)])
    g = MetricJet(JetMatrix(rows))
    expected = {
        "rho": lambda K: Jet(d, K, {}, None, 0),
        "a": lambda K: Jet.constant(1, d, K, None, 0),
        "ring_v": lambda K: _power_jet((1 - r * r / Q(4)).truncate(K), n, 1, K),
        "v": lambda K: _power_jet((1 - r * r / Q(4)).truncate(K), n, 1, K),
    }
    return ModelGeometry("pe-toy", n, g, r, _zero_graph(n), expected)


def graph_model(n, phi: Jet, metric: MetricJet | None = None, positive_side=1):
    """Generic graph hypersurface; sigma is left to the Yamabe solver."""
    d = n + 1
    g = metric if metric is not None else _flat_metric(d)
    return ModelGeometry("graph", n, g, None, EmbeddingJet(phi, positive_side))


def cylinder(order=8):
    """Radius-1 cylinder in R^3 (n=2), outward-distance orientation."""
    x2 = Jet.variable(0, 2, order) ** 2
    phi = jet_sqrt(1 - x2, order=order) - 1
    m = graph_model(2, phi, positive_side=1)
    m.name = "cylinder"
    m.expected = {"H": Q(1, 2), "lo2": Q(1, 2), "B2": Q(-1, 12)}
    return m


MODEL_BUILDERS = {
    "hyperplane": hyperplane,
    "ball-sphere": ball_sphere,
    "subsphere": subsphere,
    "height-sphere": height_sphere,
    "hyperbolic-shell": hyperbolic_shell,
    "pe-toy": pe_toy,
    "cylinder": cylinder,
}


def build_model(name, n=None, order=8, **params) -> ModelGeometry:
    if name not in MODEL_BUILDERS:
        raise JetError(f"unknown model '{name}'; known: {sorted(MODEL_BUILDERS)}")
    if name == "cylinder":
        return cylinder(order=order)
    if n is None:
        raise JetError("model requires the boundary dimension n")
    if name == "hyperbolic-shell":
        return hyperbolic_shell(n, params.get("c", Q(1)), order)
    return MODEL_BUILDERS[name](n, order)
