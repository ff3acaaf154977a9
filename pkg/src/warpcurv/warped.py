"""Warped products ``(B x F, gB + phi^2 eta)`` and their closed-form curvature.

Chart points of the product are ``(x_base, x_fiber)``. Quantities with a bar
(``gB``, ``rB``, the base connection) live on the base, ``P`` is the Ricci
tensor of the fiber, and ``theta = log phi``. The module evaluates the product
Ricci tensor and its covariant derivative from the component formulas and
checks the harmonic-curvature conditions:

(a) the fiber is Einstein with constant ``kappa``;
(b) ``rB - p (Hess theta + dtheta dtheta)`` is a Codazzi tensor on the base;
(c) ``phi^3 div[phi^-1 Hess phi] = [(p-1) Lam - kappa] dphi + (1-p) phi dLam / 2``;
(e) ``phi^2 [rB(grad phi, .) + d Lap phi] = [(p-1) Lam - kappa] dphi + (1 - p/2) phi dLam``,

with ``p = dim F`` and ``Lam = |grad phi|^2``. Conditions (c) and (e) differ by
``phi^2`` times the Bochner residual of ``phi``, so they hold together.
"""

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ArgumentError, DimensionError, MetricError
from .tensor import (
    MetricChart,
    ScalarField,
    _connection,
    bochner_residual,
    curvature_at,
)

DEFAULT_CONDITION_TOL = 1e-6


@dataclass(frozen=True)
class WarpedProductSpec:
    """Base chart, fiber chart, warping function on the base, and the fiber's declared Einstein constant.

    ``kappa = None`` declares a fiber that is not Einstein.
    """

    base: MetricChart
    fiber: MetricChart
    warping: ScalarField
    kappa: Optional[float] = 0.0
    name: str = ""

    @property
    def m(self):
        return self.base.n

    @property
    def p(self):
        return self.fiber.n

    @property
    def n(self):
        return self.base.n + self.fiber.n

    def split(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.n:
            raise DimensionError(f"product point needs {self.n} coordinates, got {x.size}")
        return x[: self.m], x[self.m :]

    def phi_jet(self, xb):
        """``(phi, dphi, d2phi, d3phi)`` at a base point; ``phi`` must be positive."""
        jet = self.warping.derivatives(xb)
        if not jet[0] > 0:
            raise MetricError(f"warping function is not positive at {xb}")
        return jet


def _theta_jet(phi, d1, d2, d3):
    t1 = d1 / phi
    t2 = d2 / phi - np.outer(t1, t1)
    t3 = (
        d3 / phi
        - np.einsum("ij,k->ijk", t2, t1)
        - np.einsum("ik,j->ijk", t2, t1)
        - np.einsum("jk,i->ijk", t2, t1)
        - np.einsum("i,j,k->ijk", t1, t1, t1)
    )
    return t1, t2, t3


def _chart_derivs(chart, x, order):
    return (chart.g, chart.dg, chart.d2g, chart.d3g)[order](x)


def _power_derivs(phi, d1, d2, d3):
    """Derivatives of ``phi^2`` up to third order."""
    return [
        phi * phi,
        2.0 * phi * d1,
        2.0 * (np.outer(d1, d1) + phi * d2),
        2.0 * (
            np.einsum("ik,j->ijk", d2, d1)
            + np.einsum("i,jk->ijk", d1, d2)
            + np.einsum("ij,k->ijk", d2, d1)
            + phi * d3
        ),
    ]


def _assembled_derivative(spec, x, order):
    m, n = spec.m, spec.n
    xb, xf = spec.split(x)
    F = _power_derivs(*spec.phi_jet(xb))
    out = np.zeros((n, n) + (n,) * order)
    gb = _chart_derivs(spec.base, xb, order)
    out[(slice(0, m), slice(0, m)) + (slice(0, m),) * order] = gb
    fib = slice(m, n)
    for pattern in itertools.product((False, True), repeat=order):
        kf = sum(pattern)
        kb = order - kf
        eta = _chart_derivs(spec.fiber, xf, kf)
        block = np.multiply.outer(eta, F[kb])
        # axes now: a, b, fiber derivs..., base derivs...; reorder to the pattern
        fiber_axes = iter(range(2, 2 + kf))
        base_axes = iter(range(2 + kf, 2 + order))
        perm = [0, 1] + [next(fiber_axes) if is_f else next(base_axes) for is_f in pattern]
        block = np.transpose(block, perm)
        out[(fib, fib) + tuple(fib if is_f else slice(0, m) for is_f in pattern)] = block
    return out


def assemble_metric(spec):
    """Product-chart metric ``gB + phi^2 eta`` with composed analytic derivatives.

    Each derivative is built from the base, fiber and warping derivatives with
    the product rule, so the chart is exactly as accurate as its ingredients.
    The mixed components ``g_ia`` are identically zero.
    """
    return MetricChart(
        n=spec.n,
        metric=lambda x: _assembled_derivative(spec, x, 0),
        dmetric=lambda x: _assembled_derivative(spec, x, 1),
        d2metric=lambda x: _assembled_derivative(spec, x, 2),
        d3metric=lambda x: _assembled_derivative(spec, x, 3),
    )


def assemble_metric_difference(spec):
    """The same metric as a bare evaluator, so every derivative is synthesized by differences."""
    return MetricChart.from_function(lambda x: _assembled_derivative(spec, x, 0), spec.n)


@dataclass
class _BaseData:
    gB: np.ndarray
    giB: np.ndarray
    gam: np.ndarray
    dgam: np.ndarray
    rB: np.ndarray
    nabla_rB: np.ndarray
    phi: float
    dphi: np.ndarray
    hphi: np.ndarray  # covariant Hessian of phi
    nhphi: np.ndarray  # [k, i, j] = nabla_k Hess_ij phi
    t1: np.ndarray
    hess: np.ndarray  # covariant Hessian of theta
    nhess: np.ndarray  # [k, i, j] = nabla_k Hess_ij theta


def _covariant_hessian(gam, dgam, d1, d2, d3):
    hess = d2 - np.einsum("kij,k->ij", gam, d1)
    dhess = (
        np.einsum("ijk->kij", d3)
        - np.einsum("lijk,l->kij", dgam, d1)
        - np.einsum("lij,lk->kij", gam, d2)
    )
    nhess = dhess - np.einsum("lki,lj->kij", gam, hess) - np.einsum("lkj,il->kij", gam, hess)
    return hess, nhess


def _base_data(spec, xb):
    base = spec.base
    gB = base.g(xb)
    giB = np.linalg.inv(gB)
    _, gam, _, _, dgam = _connection(gB, giB, base.dg(xb), base.d2g(xb))
    rep = curvature_at(base, xb)
    phi, d1, d2, d3 = spec.phi_jet(xb)
    hphi, nhphi = _covariant_hessian(gam, dgam, d1, d2, d3)
    t1, t2, t3 = _theta_jet(phi, d1, d2, d3)
    hess, nhess = _covariant_hessian(gam, dgam, t1, t2, t3)
    return _BaseData(gB, giB, gam, dgam, rep.ricci, rep.nabla_ricci, phi, d1, hphi, nhphi, t1, hess, nhess)


def _f_terms(spec, b):
    p = spec.p
    grad_up = b.giB @ b.t1
    lap = float(np.einsum("ij,ij->", b.giB, b.hess))
    f = p * lap + p * p * float(b.t1 @ grad_up)
    df = p * np.einsum("jk,ijk->i", b.giB, b.nhess) + 2.0 * p * p * (b.hess @ grad_up)
    return f, df, grad_up


def appendix_ricci(spec, x):
    """Product Ricci tensor from the closed formulas (base block, zero mixed block, fiber block)."""
    xb, xf = spec.split(x)
    m, p = spec.m, spec.p
    b = _base_data(spec, xb)
    f, _, _ = _f_terms(spec, b)
    eta = spec.fiber.g(xf)
    P = curvature_at(spec.fiber, xf).ricci
    out = np.zeros((spec.n, spec.n))
    out[:m, :m] = b.rB - p * (b.hess + np.outer(b.t1, b.t1))
    out[m:, m:] = P - b.phi**2 * f / p * eta
    return out


def appendix_nabla_ricci(spec, x):
    """``[k, i, j] = nabla_k R_ij`` of the product from the component formulas."""
    xb, xf = spec.split(x)
    m, p, n = spec.m, spec.p, spec.n
    b = _base_data(spec, xb)
    f, df, grad_up = _f_terms(spec, b)
    eta = spec.fiber.g(xf)
    frep = curvature_at(spec.fiber, xf)
    P = frep.ricci
    e2 = b.phi * b.phi
    t1 = b.t1

    out = np.zeros((n, n, n))
    out[:m, :m, :m] = b.nabla_rB - p * (
        b.nhess + np.einsum("ki,j->kij", b.hess, t1) + np.einsum("i,kj->kij", t1, b.hess)
    )
    S = b.rB - p * b.hess - p * np.outer(t1, t1)
    mixed = e2 * np.multiply.outer(f / p * t1 + S @ grad_up, eta) - np.multiply.outer(t1, P)
    # mixed[i, a, b] = nabla_a R_ib = nabla_a R_bi
    out[m:, :m, m:] = np.einsum("iab->aib", mixed)
    out[m:, m:, :m] = np.einsum("iab->abi", mixed)
    out[:m, m:, m:] = -e2 / p * np.multiply.outer(df, eta) - 2.0 * np.multiply.outer(t1, P)
    out[m:, m:, m:] = frep.nabla_ricci
    return out


@dataclass
class ConditionReport:
    """Sup-norm residuals of the harmonic-curvature conditions over the sample points."""

    residual_a: float
    residual_b: float
    residual_c: float
    residual_e: float
    codazzi_defect: float
    bochner: float
    tolerance: float
    points: int
    details: list = field(default_factory=list, repr=False)

    @property
    def flags(self):
        tol = self.tolerance
        return {
            "a": self.residual_a <= tol,
            "b": self.residual_b <= tol,
            "c": self.residual_c <= tol,
            "e": self.residual_e <= tol,
            "harmonic": self.codazzi_defect <= tol,
        }

    @property
    def consistent(self):
        """Whether the condition flags agree with the assembled metric's Codazzi defect."""
        fl = self.flags
        return (fl["a"] and fl["b"] and fl["c"]) == fl["harmonic"] and fl["c"] == fl["e"]

    def to_dict(self):
        return {
            "residuals": {
                "a": self.residual_a,
                "b": self.residual_b,
                "c": self.residual_c,
                "e": self.residual_e,
            },
            "codazzi_defect": self.codazzi_defect,
            "bochner": self.bochner,
            "tolerance": self.tolerance,
            "points": self.points,
            "flags": self.flags,
            "consistent": self.consistent,
        }


def condition_residuals(spec, x):
    """Residual norms of (a), (b), (c), (e) at one product point."""
    if spec.kappa is None:
        raise ArgumentError("conditions (b) and (c) need a declared Einstein constant for the fiber")
    kappa = float(spec.kappa)
    xb, xf = spec.split(x)
    p = spec.p
    b = _base_data(spec, xb)

    eta = spec.fiber.g(xf)
    P = curvature_at(spec.fiber, xf).ricci
    res_a = float(np.max(np.abs(P - kappa * eta)))

    t1 = b.t1
    nS = b.nabla_rB - p * (b.nhess + np.einsum("ki,j->kij", b.hess, t1) + np.einsum("i,kj->kij", t1, b.hess))
    res_b = float(np.max(np.abs(nS - np.swapaxes(nS, 0, 1))))

    phi, dphi, H, nH, gi = b.phi, b.dphi, b.hphi, b.nhphi, b.giB
    grad_up = gi @ dphi
    lam = float(dphi @ grad_up)
    dlam = 2.0 * H @ grad_up
    coeff = (p - 1) * lam - kappa
    # div[phi^-1 Hess phi]_j = g^{ki} nabla_k (phi^-1 H_ij)
    div = (np.einsum("ki,kij->j", gi, nH) - grad_up @ H / phi) / phi
    res_c = phi**3 * div - coeff * dphi - 0.5 * (1 - p) * phi * dlam
    dlap = np.einsum("ij,kij->k", gi, nH)
    res_e = phi**2 * (b.rB @ grad_up + dlap) - coeff * dphi - (1 - 0.5 * p) * phi * dlam
    return res_a, res_b, float(np.max(np.abs(res_c))), float(np.max(np.abs(res_e)))


def warhc_check(spec, points, tolerance=DEFAULT_CONDITION_TOL):
    """Check the harmonic-curvature conditions at ``points`` and compare with the assembled metric."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    chart = assemble_metric(spec)
    worst = np.zeros(6)
    details = []
    for x in points:
        ra, rb, rc, re = condition_residuals(spec, x)
        cod = curvature_at(chart, x).codazzi_defect_norm
        boch = bochner_residual(spec.base, spec.warping, spec.split(x)[0])
        row = np.array([ra, rb, rc, re, cod, boch])
        details.append(row.tolist())
        worst = np.maximum(worst, row)
    return ConditionReport(*worst.tolist(), tolerance=tolerance, points=len(points), details=details)


# Catalogs ----------------------------------------------------------------------------


def _diag_chart(n, entries):
    """Analytic chart ``diag(e_0(x_0), ..., )`` whose entry ``i`` depends on ``x_0`` only.

    ``entries`` is a list of callables ``u -> (value, d1, d2, d3)``.
    """

    def deriv(order):
        def fn(x):
            out = np.zeros((n, n) + (n,) * order)
            for i, e in enumerate(entries):
                out[(i, i) + (0,) * order] = e(x[0])[order]
            return out

        return fn

    return MetricChart(n=n, metric=deriv(0), dmetric=deriv(1), d2metric=deriv(2), d3metric=deriv(3))


def _one(u):
    return (1.0, 0.0, 0.0, 0.0)


def _sin2(u):
    s2, c2 = np.sin(2 * u), np.cos(2 * u)
    return (np.sin(u) ** 2, s2, 2 * c2, -4 * s2)


def _exp2(u):
    e = np.exp(2 * u)
    return (e, 2 * e, 4 * e, 8 * e)


def interval_base():
    return MetricChart.euclidean(1)


def flat_chart(dim):
    return MetricChart.euclidean(dim)


def sphere2_chart():
    """Unit 2-sphere in polar coordinates ``du^2 + sin^2 u dv^2``; Einstein with constant 1."""
    return _diag_chart(2, [_one, _sin2])


def hyperbolic2_chart():
    """Hyperbolic plane in horospherical coordinates ``du^2 + e^{2u} dv^2``; Einstein with constant -1."""
    return _diag_chart(2, [_one, _exp2])


def bumpy_surface_chart():
    """``du^2 + (1 + u^2)^2 dv^2``: a surface of nonconstant curvature, hence not Einstein."""

    def e(u):
        w = 1 + u * u
        return (w * w, 4 * u * w, 4 * w + 8 * u * u, 24 * u)

    return _diag_chart(2, [_one, e])


def conformal_chart(dim, A, b):
    """``exp(2 psi) I`` with ``psi = x.A.x / 2 + b.x``, derivatives by differences."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)

    def metric(x):
        return np.exp(2.0 * (0.5 * x @ A @ x + b @ x)) * np.eye(dim)

    return MetricChart.from_function(metric, dim)


def table_chart(matrix):
    return MetricChart.constant(matrix)


_RIDGE = {
    "exp": lambda u: (np.exp(u),) * 4,
    "cos": lambda u: (np.cos(u), -np.sin(u), -np.cos(u), np.sin(u)),
    "cosh": lambda u: (np.cosh(u), np.sinh(u), np.cosh(u), np.sinh(u)),
    "sinh": lambda u: (np.sinh(u), np.cosh(u), np.sinh(u), np.cosh(u)),
}


def ridge_warping(kind, w, c=0.0, amplitude=1.0):
    """``amplitude * F(w . x + c)`` for ``F`` in ``exp``, ``cos``, ``cosh``, ``sinh``."""
    if kind not in _RIDGE:
        raise ArgumentError(f"unknown warping kind {kind!r}; choose from {sorted(_RIDGE)}")
    F = _RIDGE[kind]
    w = np.asarray(w, dtype=float).reshape(-1)

    def jet(x):
        return F(float(w @ x) + c)

    return ScalarField(
        value=lambda x: amplitude * jet(x)[0],
        grad=lambda x: amplitude * jet(x)[1] * w,
        hess=lambda x: amplitude * jet(x)[2] * np.outer(w, w),
        third=lambda x: amplitude * jet(x)[3] * np.einsum("i,j,k->ijk", w, w, w),
    )


def exp_quadratic_warping(A, b, c=0.0):
    """``exp(x.A.x / 2 + b.x + c)`` with symmetric ``A``."""
    A = np.asarray(A, dtype=float)
    A = 0.5 * (A + A.T)
    b = np.asarray(b, dtype=float)

    def val(x):
        return float(np.exp(0.5 * x @ A @ x + b @ x + c))

    def u(x):
        return A @ x + b

    return ScalarField(
        value=val,
        grad=lambda x: val(x) * u(x),
        hess=lambda x: val(x) * (np.outer(u(x), u(x)) + A),
        third=lambda x: val(x)
        * (
            np.einsum("i,j,k->ijk", u(x), u(x), u(x))
            + np.einsum("ij,k->ijk", A, u(x))
            + np.einsum("ik,j->ijk", A, u(x))
            + np.einsum("jk,i->ijk", A, u(x))
        ),
    )


def constant_warping(value, dim):
    return ScalarField.constant(float(value), dim)


BASE_KINDS = {
    "interval": lambda d: interval_base(),
    "flat": lambda d: flat_chart(d.get("dim", 1)),
    "sphere2": lambda d: sphere2_chart(),
    "hyperbolic2": lambda d: hyperbolic2_chart(),
    "conformal": lambda d: conformal_chart(d["dim"], d["A"], d["b"]),
}

FIBER_KINDS = {
    "flat": (lambda d: flat_chart(d.get("dim", 1)), 0.0),
    "sphere2": (lambda d: sphere2_chart(), 1.0),
    "hyperbolic2": (lambda d: hyperbolic2_chart(), -1.0),
    "bumpy": (lambda d: bumpy_surface_chart(), None),
}


def _chart_from_dict(d, kinds):
    if "table" in d:
        chart = table_chart(d["table"])
    elif d.get("kind") in kinds:
        chart = kinds[d["kind"]](d)
    else:
        raise ArgumentError(f"unknown chart kind {d.get('kind')!r}; choose from {sorted(kinds)} or give a table")
    if "dim" in d and int(d["dim"]) != chart.n:
        raise DimensionError(f"declared dim {d['dim']} but the chart has dimension {chart.n}")
    return chart


def spec_from_dict(doc):
    """Build a :class:`WarpedProductSpec` from a JSON-style document.

    ``{"base": {"kind" | "table", "dim"}, "fiber": {"kind" | "table", "dim", "kappa"},
    "warping": {"kind", "params"}}``. Fiber kinds carry a default Einstein
    constant that an explicit ``kappa`` overrides.
    """
    try:
        base = _chart_from_dict(doc["base"], BASE_KINDS)
        fdoc = doc["fiber"]
        fiber_kinds = {k: v[0] for k, v in FIBER_KINDS.items()}
        fiber = _chart_from_dict(fdoc, fiber_kinds)
        kappa = fdoc["kappa"] if "kappa" in fdoc else FIBER_KINDS.get(fdoc.get("kind"), (None, 0.0))[1]
        wdoc = doc["warping"]
        kind = wdoc["kind"]
        params = wdoc.get("params", {})
    except (KeyError, TypeError) as exc:
        raise ArgumentError(f"malformed warped-product spec: missing {exc}") from None
    if kind == "constant":
        warping = constant_warping(params.get("value", 1.0), base.n)
    elif kind == "exp_quadratic":
        warping = exp_quadratic_warping(params["A"], params["b"], params.get("c", 0.0))
    else:
        w = params.get("w", [1.0] * base.n)
        if len(w) != base.n:
            raise DimensionError("warping direction must match the base dimension")
        warping = ridge_warping(kind, w, params.get("c", 0.0), params.get("amplitude", 1.0))
    return WarpedProductSpec(base, fiber, warping, kappa, name=doc.get("name", ""))


# Bridges to the construction metric --------------------------------------------------


def construction_as_warped(chart):
    """View a construction chart as a warped product over a line fiber.

    The base carries ``(t, x^2, ..., x^{n-1})`` with ``dt^2 + sum_{j<n} g_jj dx^j dx^j``,
    the fiber is the last coordinate line and ``phi = sqrt(g_nn)``, so
    ``theta' = -y_n``. All derivatives are analytic in the curve jet.
    """
    k = chart.k

    def base_deriv(order):
        def fn(x):
            w = chart.warping(x[0])[order]
            out = np.zeros((k, k) + (k,) * order)
            if order == 0:
                out[0, 0] = 1.0
            for j in range(1, k):
                out[(j, j) + (0,) * order] = w[j - 1]
            return out

        return fn

    def phi_jet(t):
        y, p, a, _ = chart.jet(t)
        g = chart.warping(t)[0]
        phi = float(np.sqrt(g[-1]))
        yn, pn, an = y[-1], p[-1], a[-1]
        c2 = yn * yn - pn
        return phi, -yn * phi, c2 * phi, (2 * yn * pn - an) * phi - yn * c2 * phi

    def axis(order, val):
        out = np.zeros((k,) * order)
        out[(0,) * order] = val
        return out

    base = MetricChart(n=k, metric=base_deriv(0), dmetric=base_deriv(1), d2metric=base_deriv(2), d3metric=base_deriv(3))
    warping = ScalarField(
        value=lambda x: phi_jet(x[0])[0],
        grad=lambda x: axis(1, phi_jet(x[0])[1]),
        hess=lambda x: axis(2, phi_jet(x[0])[2]),
        third=lambda x: axis(3, phi_jet(x[0])[3]),
    )
    return WarpedProductSpec(base, flat_chart(1), warping, 0.0, name="construction")


def random_desk_spec(rng):
    """A random small warped product (base and fiber of dimension at most 2) for oracle tests."""
    m = int(rng.integers(1, 3))
    p = int(rng.integers(1, 3))
    if m == 1:
        base = interval_base()
    else:
        base = [flat_chart(2), sphere2_chart(), hyperbolic2_chart()][int(rng.integers(0, 3))]
    if p == 1:
        fiber, kappa = flat_chart(1), 0.0
    else:
        fiber, kappa = [(flat_chart(2), 0.0), (sphere2_chart(), 1.0), (hyperbolic2_chart(), -1.0), (bumpy_surface_chart(), None)][
            int(rng.integers(0, 4))
        ]
    kind = ["exp", "cosh", "exp_quadratic"][int(rng.integers(0, 3))]
    if kind == "exp_quadratic":
        A = rng.uniform(-0.5, 0.5, (m, m))
        warping = exp_quadratic_warping(A, rng.uniform(-0.5, 0.5, m))
    else:
        warping = ridge_warping(kind, rng.uniform(-0.8, 0.8, m), float(rng.uniform(-0.5, 0.5)))
    return WarpedProductSpec(base, fiber, warping, kappa, name=f"random-{m}-{p}-{kind}")


def random_desk_point(spec, rng):
    """A sample point away from coordinate singularities of the catalog charts."""
    xb = rng.uniform(-0.6, 0.6, spec.m)
    xf = rng.uniform(-0.6, 0.6, spec.p)
    if spec.m == 2:
        xb[0] = rng.uniform(0.6, 1.2)
    if spec.p == 2:
        xf[0] = rng.uniform(0.6, 1.2)
    return np.concatenate([xb, xf])
