"""Chart-level Levi-Civita curvature engine.

Index conventions (all arrays are plain ``numpy`` arrays):

* ``dg[a, b, k] = d_k g_ab``, ``d2g[a, b, k, l]``, ``d3g[a, b, k, l, m]``
* ``christoffel[c, a, b] = Gamma^c_ab``
* ``riemann[a, b, c, d] = R_abcd = g_ae R^e_bcd`` with
  ``R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb``,
  so that the unit sphere has ``R_abcd = g_ac g_bd - g_ad g_bc``
* ``ricci[b, d] = R^a_bad`` (positive on spheres)
* ``nabla_ricci[k, i, j] = nabla_k r_ij``

Derivatives of the metric are either supplied by the caller (analytic mode)
or synthesized by nested central differences (difference mode).
"""

import itertools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ArgumentError, DimensionError, MetricError

EPS = np.finfo(float).eps
ANALYTIC_TOL = 1e-8
DIFFERENCE_TOL = 1e-5


def default_step(x, order=1):
    """Base central-difference step for an ``order``-fold nested difference at ``x``.

    Differences are Richardson-extrapolated (fourth order), which moves the
    rounding/truncation balance to ``eps**(1/(order+3)) * max(1, |x|)``.
    """
    return EPS ** (1.0 / (order + 3)) * max(1.0, float(np.max(np.abs(x))))


def nested_differences(f, x, order, h, richardson=True):
    """Nested central-difference approximation of all ``order``-th partials of ``f`` at ``x``.

    ``f`` maps an ``n``-vector to an array of shape ``S``; the result has shape
    ``S + (n,) * order`` and is symmetric in the derivative axes. With
    ``richardson`` the steps ``2h`` and ``h`` are combined to cancel the
    leading ``h**2`` error term.
    """
    if richardson:
        coarse = _nested(f, x, order, 2.0 * h)
        fine = _nested(f, x, order, h)
        return (4.0 * fine - coarse) / 3.0
    return _nested(f, x, order, h)


def _nested(f, x, order, h):
    x = np.asarray(x, dtype=float)
    n = x.size
    base = np.asarray(f(x), dtype=float)
    out = np.zeros(base.shape + (n,) * order)
    cache = {}

    def at(offset):
        key = tuple(offset)
        if key not in cache:
            cache[key] = np.asarray(f(x + h * np.asarray(offset, dtype=float)), dtype=float)
        return cache[key]

    for idx in itertools.combinations_with_replacement(range(n), order):
        acc = np.zeros(base.shape)
        for signs in itertools.product((1, -1), repeat=order):
            offset = np.zeros(n)
            for i, s in zip(idx, signs):
                offset[i] += s
            acc = acc + np.prod(signs) * at(offset)
        acc /= (2.0 * h) ** order
        for perm in set(itertools.permutations(idx)):
            out[(Ellipsis,) + perm] = acc
    return out


@dataclass(frozen=True)
class MetricChart:
    """Metric components on an ``n``-dimensional coordinate chart.

    Any of ``dmetric``, ``d2metric``, ``d3metric`` left as ``None`` is
    synthesized by nested central differences. ``h`` overrides the first-order
    difference step; higher orders scale it by the same factor as the defaults.
    """

    n: int
    metric: Callable
    dmetric: Optional[Callable] = None
    d2metric: Optional[Callable] = None
    d3metric: Optional[Callable] = None
    h: Optional[float] = None

    @property
    def derivative_mode(self):
        if self.dmetric is not None and self.d2metric is not None:
            return "analytic"
        return "difference"

    @property
    def tolerance(self):
        return ANALYTIC_TOL if self.derivative_mode == "analytic" else DIFFERENCE_TOL

    def _point(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.n:
            raise DimensionError(f"chart point has {x.size} coordinates, chart dimension is {self.n}")
        return x

    def _step(self, x, order):
        h = default_step(x, order)
        if self.h is not None:
            h *= self.h / default_step(x, 1)
        return h

    def g(self, x):
        x = self._point(x)
        G = np.asarray(self.metric(x), dtype=float)
        if G.shape != (self.n, self.n):
            raise DimensionError(f"metric evaluator returned shape {G.shape}")
        if not np.allclose(G, G.T, rtol=1e-12, atol=1e-14):
            raise MetricError(f"metric is not symmetric at {x}")
        try:
            np.linalg.cholesky(G)
        except np.linalg.LinAlgError:
            raise MetricError(f"metric is not positive definite at {x}") from None
        return G

    def dg(self, x):
        x = self._point(x)
        if self.dmetric is not None:
            return np.asarray(self.dmetric(x), dtype=float)
        return nested_differences(self.metric, x, 1, self._step(x, 1))

    def d2g(self, x):
        x = self._point(x)
        if self.d2metric is not None:
            return np.asarray(self.d2metric(x), dtype=float)
        return nested_differences(self.metric, x, 2, self._step(x, 2))

    def d3g(self, x):
        x = self._point(x)
        if self.d3metric is not None:
            return np.asarray(self.d3metric(x), dtype=float)
        return nested_differences(self.metric, x, 3, self._step(x, 3))

    def has_third_derivatives(self):
        return self.d3metric is not None or self.derivative_mode == "difference"

    @classmethod
    def from_function(cls, metric, n, h=None):
        """Difference-mode chart from a bare metric evaluator."""
        return cls(n=n, metric=metric, h=h)

    @classmethod
    def constant(cls, matrix):
        G = np.array(matrix, dtype=float)
        n = G.shape[0]
        return cls(
            n=n,
            metric=lambda x: G,
            dmetric=lambda x: np.zeros((n,) * 3),
            d2metric=lambda x: np.zeros((n,) * 4),
            d3metric=lambda x: np.zeros((n,) * 5),
        )

    @classmethod
    def euclidean(cls, n):
        return cls.constant(np.eye(n))


@dataclass
class CurvatureReport:
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    weyl: np.ndarray
    nabla_ricci: np.ndarray
    codazzi_defect_norm: float
    div_ricci_minus_half_ds_norm: float
    metric: np.ndarray
    inverse_metric: np.ndarray

    def ricci_operator(self):
        """The endomorphism ``r^a_b``; its eigenvalues are the Ricci eigenvalues."""
        return self.inverse_metric @ self.ricci

    def ricci_eigenvalues(self):
        return np.sort(np.linalg.eigvals(self.ricci_operator()).real)


def _kulkarni_nomizu(h, k):
    return (
        np.einsum("ac,bd->abcd", h, k)
        + np.einsum("bd,ac->abcd", h, k)
        - np.einsum("ad,bc->abcd", h, k)
        - np.einsum("bc,ad->abcd", h, k)
    )


def _connection(G, Gi, dG, d2G):
    low = _first_kind(dG)
    gam = np.einsum("ns,sab->nab", Gi, low)
    dGi = -np.einsum("na,abk,bs->nsk", Gi, dG, Gi)
    dlow = _first_kind(d2G)
    dgam = np.einsum("nsk,sab->nabk", dGi, low) + np.einsum("ns,sabk->nabk", Gi, dlow)
    return low, gam, dGi, dlow, dgam


def _first_kind(dG):
    """Christoffel symbols of the first kind ``[s, a, b]`` (with trailing derivative axes kept)."""
    # Gamma_{s,ab} = (d_a g_sb + d_b g_sa - d_s g_ab) / 2
    t1 = np.swapaxes(dG, 1, 2)  # [s, a, b] <- dG[s, b, a]
    t3 = np.moveaxis(dG, 2, 0)  # [s, a, b] <- dG[a, b, s]
    return 0.5 * (t1 + dG - t3)


def _riemann_up(gam, dgam):
    return (
        np.einsum("adbc->abcd", dgam)
        - np.einsum("acbd->abcd", dgam)
        + np.einsum("ace,edb->abcd", gam, gam)
        - np.einsum("ade,ecb->abcd", gam, gam)
    )


def _ricci_from(gam, dgam):
    return np.einsum("adba->bd", dgam) - np.einsum("aabd->bd", dgam) + np.einsum("aae,edb->bd", gam, gam) - np.einsum("ade,eab->bd", gam, gam)


def _ricci_derivative_exact(Gi, dG, d2G, d3G, low, gam, dGi, dlow, dgam):
    d2Gi = (
        -np.einsum("nal,abk,bs->nskl", dGi, dG, Gi)
        - np.einsum("na,abkl,bs->nskl", Gi, d2G, Gi)
        - np.einsum("na,abk,bsl->nskl", Gi, dG, dGi)
    )
    d2low = _first_kind(d3G)
    d2gam = (
        np.einsum("nskl,sab->nabkl", d2Gi, low)
        + np.einsum("nsk,sabl->nabkl", dGi, dlow)
        + np.einsum("nsl,sabk->nabkl", dGi, dlow)
        + np.einsum("ns,sabkl->nabkl", Gi, d2low)
    )
    return (
        np.einsum("adbal->bdl", d2gam)
        - np.einsum("aabdl->bdl", d2gam)
        + np.einsum("aael,edb->bdl", dgam, gam)
        + np.einsum("aae,edbl->bdl", gam, dgam)
        - np.einsum("adel,eab->bdl", dgam, gam)
        - np.einsum("ade,eabl->bdl", gam, dgam)
    )


def _ricci_only(chart, x):
    G = chart.g(x)
    Gi = np.linalg.inv(G)
    _, gam, _, _, dgam = _connection(G, Gi, chart.dg(x), chart.d2g(x))
    return _ricci_from(gam, dgam)


def curvature_at(chart, x):
    """Full curvature report of ``chart`` at the point ``x``."""
    x = chart._point(x)
    n = chart.n
    G = chart.g(x)
    try:
        Gi = np.linalg.inv(G)
    except np.linalg.LinAlgError:
        raise MetricError(f"singular metric at {x}") from None
    dG = chart.dg(x)
    d2G = chart.d2g(x)
    low, gam, dGi, dlow, dgam = _connection(G, Gi, dG, d2G)
    rup = _riemann_up(gam, dgam)
    riemann = np.einsum("ae,ebcd->abcd", G, rup)
    ricci = _ricci_from(gam, dgam)
    scalar = float(np.einsum("ab,ab->", Gi, ricci))

    if chart.d3metric is not None or chart.derivative_mode == "difference":
        dric = _ricci_derivative_exact(Gi, dG, d2G, chart.d3g(x), low, gam, dGi, dlow, dgam)
    else:
        dric = nested_differences(lambda z: _ricci_only(chart, z), x, 1, default_step(x, 1))
    nabla = (
        np.einsum("ijk->kij", dric)
        - np.einsum("ski,sj->kij", gam, ricci)
        - np.einsum("skj,is->kij", gam, ricci)
    )
    codazzi = float(np.max(np.abs(nabla - np.swapaxes(nabla, 0, 1))))
    ds = np.einsum("abk,ab->k", dGi, ricci) + np.einsum("ab,abk->k", Gi, dric)
    div = np.einsum("ki,kij->j", Gi, nabla)
    bianchi = float(np.max(np.abs(div - 0.5 * ds)))

    if n >= 3:
        weyl = (
            riemann
            - _kulkarni_nomizu(ricci, G) / (n - 2)
            + scalar * _kulkarni_nomizu(G, G) / (2.0 * (n - 1) * (n - 2))
        )
    else:
        weyl = np.zeros((n,) * 4)
    return CurvatureReport(
        christoffel=gam,
        riemann=riemann,
        ricci=ricci,
        scalar=scalar,
        weyl=weyl,
        nabla_ricci=nabla,
        codazzi_defect_norm=codazzi,
        div_ricci_minus_half_ds_norm=bianchi,
        metric=G,
        inverse_metric=Gi,
    )


def codazzi_defect(chart, x):
    """Max-norm of ``nabla_l r_mn - nabla_m r_ln``; zero iff the curvature is harmonic."""
    return curvature_at(chart, x).codazzi_defect_norm


def christoffel(chart, x):
    x = chart._point(x)
    G = chart.g(x)
    return np.einsum("ns,sab->nab", np.linalg.inv(G), _first_kind(chart.dg(x)))


def geodesic_residual(chart, curve, t):
    """Sup-norm of ``x'' + Gamma(x', x')`` for ``curve(t) -> (x, x', x'')``."""
    x, v, acc = (np.asarray(a, dtype=float) for a in curve(t))
    gam = christoffel(chart, x)
    return float(np.max(np.abs(acc + np.einsum("nab,a,b->n", gam, v, v))))


@dataclass(frozen=True)
class ScalarField:
    """A function on a chart with partial derivatives up to third order.

    Missing derivative evaluators are synthesized by nested central differences.
    """

    value: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    third: Optional[Callable] = None

    def derivatives(self, x):
        x = np.asarray(x, dtype=float)
        out = [float(self.value(x))]
        for order, fn in enumerate((self.grad, self.hess, self.third), start=1):
            if fn is not None:
                out.append(np.asarray(fn(x), dtype=float))
            else:
                out.append(nested_differences(self.value, x, order, default_step(x, order)))
        return out

    @classmethod
    def constant(cls, c, n):
        return cls(
            value=lambda x: c,
            grad=lambda x: np.zeros(n),
            hess=lambda x: np.zeros((n, n)),
            third=lambda x: np.zeros((n, n, n)),
        )


def bochner_residual(chart, phi, x):
    """Sup-norm of the 1-form ``r(grad phi, .) + d(Lap phi) - div(Hess phi)`` at ``x``."""
    x = chart._point(x)
    G = chart.g(x)
    Gi = np.linalg.inv(G)
    low, gam, dGi, _, dgam = _connection(G, Gi, chart.dg(x), chart.d2g(x))
    ricci = _ricci_from(gam, dgam)
    _, f1, f2, f3 = phi.derivatives(x)
    if f1.shape != (chart.n,):
        raise DimensionError("scalar field gradient does not match chart dimension")
    hess = f2 - np.einsum("cab,c->ab", gam, f1)
    # d_k Hess_ab
    dhess = f3 - np.einsum("cabk,c->abk", dgam, f1) - np.einsum("cab,ck->abk", gam, f2)
    dlap = np.einsum("abk,ab->k", dGi, hess) + np.einsum("ab,abk->k", Gi, dhess)
    # nabla_c Hess_ab
    nhess = np.einsum("abc->cab", dhess) - np.einsum("eca,eb->cab", gam, hess) - np.einsum("ecb,ae->cab", gam, hess)
    div = np.einsum("ac,cab->b", Gi, nhess)
    grad_up = Gi @ f1
    return float(np.max(np.abs(ricci @ grad_up + dlap - div)))


def check_riemann_symmetries(report):
    """Largest violation among pair antisymmetry, pair exchange and the first Bianchi identity."""
    R = report.riemann
    anti1 = np.max(np.abs(R + np.swapaxes(R, 0, 1)))
    anti2 = np.max(np.abs(R + np.swapaxes(R, 2, 3)))
    exch = np.max(np.abs(R - np.einsum("abcd->cdab", R)))
    bianchi = np.max(np.abs(R + np.einsum("abcd->acdb", R) + np.einsum("abcd->adbc", R)))
    return float(max(anti1, anti2, exch, bianchi))


def weyl_trace_norm(report):
    """Sup-norm of all single metric contractions of the Weyl array."""
    W, Gi = report.weyl, report.inverse_metric
    traces = [
        np.einsum("ac,abcd->bd", Gi, W),
        np.einsum("ad,abcd->bc", Gi, W),
        np.einsum("bc,abcd->ad", Gi, W),
        np.einsum("bd,abcd->ac", Gi, W),
        np.einsum("ab,abcd->cd", Gi, W),
        np.einsum("cd,abcd->ab", Gi, W),
    ]
    return float(max(np.max(np.abs(t)) for t in traces))


def validate_step(h):
    if h is not None and not h > 0:
        raise ArgumentError("difference step must be positive")
    return h
