"""The warped metric ``g = dt^2 + sum_j g_jj(t) (dx^j)^2`` generated by a curve of diagonal matrices.

A curve ``y`` determines the warping functions through ``g_jj' = -2 y_j g_jj``,
so ``g_jj(t) = g0_j exp(-2 int_{t0}^t y_j)``. The metric has harmonic curvature
exactly when ``y`` solves the phase ODE, and every curvature quantity of the
metric is an explicit polynomial in the jet ``(y, y', y'')``.

Curves come in two kinds. :class:`TrajectoryCurve` wraps an ODE solution and
takes ``y''`` (and ``y'''``) from the vector field by the chain rule.
:class:`PerturbedCurve` adds a polynomial to another curve; it is the standard
way to build consistent off-solution probes.
"""

import enum
import itertools
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .core import (
    DEFAULT_GENERIC_TOL,
    PhaseState,
    acceleration,
    eigenvalues_distinct,
    harmonic_defect,
    ricci_eigenvalues,
    scalar_invariant,
)
from .errors import ArgumentError, CapacityError, DimensionError, DomainError
from .flow import integrate
from .parallel import ordered_map
from .tensor import MetricChart, curvature_at

CLASSIFY_TOL = 1e-8
DEFAULT_PROBE_DELTA = 0.1
DEFAULT_PROBE_HORIZON = 20.0


def _jerk(y, p, a):
    """Time derivative of the field acceleration along a solution, given ``(y, y', y'')``."""
    tr, trp = y.sum(), p.sum()
    q, qdot = (y * y).sum(), 2.0 * (y * p).sum()
    return (trp + p) * p + (tr + y) * a + qdot * y + q * p - trp * y * y - 2.0 * tr * y * p


class TrajectoryCurve:
    """Jet of an ODE solution; higher derivatives come from the vector field."""

    def __init__(self, traj):
        self.traj = traj
        self.k = traj.k

    def domain(self):
        return self.traj.domain

    def check(self, t):
        self.traj._times(t)

    def jet(self, t):
        """``(y, y', y'', y''')`` at the scalar time ``t``."""
        x = self.traj.evaluate(float(t))
        y, p = x[: self.k], x[self.k :]
        a = acceleration(y, p)
        return y, p, a, _jerk(y, p, a)

    def integral(self, t, t_ref):
        return self.traj.y_integral(float(t), float(t_ref))


class PerturbedCurve:
    """``y(t) + dy + dp (t - tc) + dydd (t - tc)^2 / 2`` for a base curve ``y``.

    At ``tc`` the jet is shifted by exactly ``(dy, dp, dydd)``, so perturbing
    ``dp`` changes ``y'`` while keeping ``y''`` on the base solution.
    """

    def __init__(self, base, tc, dy=None, dp=None, dydd=None):
        self.base = base
        self.k = base.k
        self.tc = float(tc)
        zero = np.zeros(self.k)
        self.dy, self.dp, self.dydd = (
            zero if v is None else np.broadcast_to(np.asarray(v, dtype=float), (self.k,)).copy()
            for v in (dy, dp, dydd)
        )

    def domain(self):
        return self.base.domain()

    def check(self, t):
        self.base.check(t)

    def jet(self, t):
        y, p, a, j = self.base.jet(t)
        u = float(t) - self.tc
        return (
            y + self.dy + self.dp * u + 0.5 * self.dydd * u * u,
            p + self.dp + self.dydd * u,
            a + self.dydd,
            j,
        )

    def integral(self, t, t_ref):
        def poly(s):
            u = s - self.tc
            return self.dy * s + 0.5 * self.dp * u * u + self.dydd * u**3 / 6.0

        return self.base.integral(t, t_ref) + poly(float(t)) - poly(float(t_ref))


@dataclass(frozen=True)
class WarpChart:
    """The metric generated by ``curve`` with gauge ``g_jj(t0) = g0_j``.

    Chart coordinates are ``(t, x^2, ..., x^n)``; nothing depends on the ``x^j``.
    """

    curve: object
    g0: np.ndarray
    t0: float

    @property
    def k(self):
        return self.curve.k

    @property
    def n(self):
        return self.curve.k + 1

    @property
    def traj(self):
        return getattr(self.curve, "traj", None)

    def jet(self, t):
        self.curve.check(t)
        return self.curve.jet(t)

    def state(self, t):
        y, p, _, _ = self.jet(t)
        return PhaseState(y, p)

    def warping(self, t):
        """``(g, g', g'', g''')`` of the diagonal entries ``g_jj`` at ``t``."""
        self.curve.check(t)
        y, p, a, _ = self.curve.jet(t)
        g = self.g0 * np.exp(-2.0 * self.curve.integral(t, self.t0))
        c2 = 4.0 * y * y - 2.0 * p
        return g, -2.0 * y * g, c2 * g, (8.0 * y * p - 2.0 * a) * g - 2.0 * y * c2 * g

    def g(self, t):
        return self.warping(t)[0]

    def metric_chart(self):
        """Analytic-mode :class:`MetricChart` view, exact through third derivatives."""
        n = self.n

        def embed(vals, order):
            out = np.zeros((n, n) + (n,) * order)
            j = np.arange(1, n)
            out[(j, j) + (0,) * order] = vals
            if order == 0:
                out[0, 0] = 1.0
            return out

        def metric(x):
            return embed(self.warping(x[0])[0], 0)

        def d(order):
            return lambda x: embed(self.warping(x[0])[order], order)

        return MetricChart(n=n, metric=metric, dmetric=d(1), d2metric=d(2), d3metric=d(3))

    def point(self, t):
        """A chart point at time ``t`` (the transverse coordinates are irrelevant)."""
        return np.concatenate([[float(t)], np.zeros(self.k)])

    def perturbed(self, tc, dy=None, dp=None, dydd=None):
        return WarpChart(PerturbedCurve(self.curve, tc, dy, dp, dydd), self.g0, self.t0)


def build_metric(traj, g0=None, t0=None):
    """Metric chart of a trajectory. ``g0`` defaults to all ones at ``t0 = traj.t0``."""
    t0 = traj.t0 if t0 is None else float(t0)
    if not traj.contains(t0):
        raise DomainError(f"gauge time t0={t0!r} outside trajectory domain {traj.domain}")
    g0 = np.ones(traj.k) if g0 is None else np.asarray(g0, dtype=float).reshape(-1)
    if g0.size != traj.k:
        raise DimensionError(f"g0 needs {traj.k} entries, got {g0.size}")
    if not np.all(np.isfinite(g0)) or np.any(g0 <= 0):
        raise ArgumentError("g0 entries must be positive")
    g0.setflags(write=False)
    return WarpChart(TrajectoryCurve(traj), g0, t0)


def perturbed_p_chart(chart, tc, fraction=0.01):
    """Off-solution probe: ``y'`` scaled by ``1 + fraction`` at ``tc``, ``y''`` left on-solution."""
    _, p, _, _ = chart.jet(tc)
    return chart.perturbed(tc, dp=fraction * p)


def harmonic_residual(chart, t):
    """Components ``mu_j' - y_j (mu_j - mu_1)``; zero iff the curve solves the ODE at ``t``."""
    y, p, a, _ = chart.jet(t)
    return harmonic_defect(y, p, a)


def _check_pair(n, j, k):
    if n < 3:
        raise CapacityError("Weyl sectional values need n >= 3")
    for idx in (j, k):
        if not (isinstance(idx, (int, np.integer)) and 2 <= idx <= n):
            raise ArgumentError(f"index {idx!r} out of range 2..{n}")
    if j == k:
        raise ArgumentError("j and k must differ")


def weyl_sectional_jet(y, p, j, k):
    """``(n-1)(n-2) g^jj g^kk W_jkjk`` from ``(y, y')``; indices ``j, k`` run over ``2..n``."""
    y = np.asarray(y, dtype=float)
    p = np.asarray(p, dtype=float)
    n = y.size + 1
    _check_pair(n, j, k)
    yj, yk, pj, pk = y[j - 2], y[k - 2], p[j - 2], p[k - 2]
    tr = y.sum()
    s = 2.0 * p.sum() - (y * y).sum() - tr * tr
    return float(s + (n - 1) * ((yj + yk) * tr - (n - 2) * yj * yk - pj - pk))


def weyl_sectional(chart, t, j, k):
    """Weyl sectional quantity of a chart at ``t``; see :func:`weyl_sectional_jet`."""
    y, p, _, _ = chart.jet(t)
    return weyl_sectional_jet(y, p, j, k)


def weyl_sectional_state(state, j, k):
    return weyl_sectional_jet(state.y, state.p, j, k)


class Completeness(enum.Enum):
    NUMERICALLY_COMPLETE = "NumericallyComplete"
    INCONCLUSIVE = "Inconclusive"
    DOMAIN_FINITE = "DomainFinite"


@dataclass(frozen=True)
class CompletenessReport:
    flag: Completeness
    reached_minus: bool
    reached_plus: bool
    margin_minus: Optional[float]
    margin_plus: Optional[float]

    def to_dict(self):
        d = asdict(self)
        d["flag"] = self.flag.value
        return d


def completeness_probe(traj, delta=DEFAULT_PROBE_DELTA, T=DEFAULT_PROBE_HORIZON, samples=200):
    """Sampled check of the sufficient completeness condition at both ends.

    The condition asks for ``y_j >= delta`` for ``t`` in ``[-T, -T/2]`` and
    ``-y_j >= delta`` for ``t`` in ``[T/2, T]``. Finite data cannot certify the
    asymptotic hypothesis, so the answer is three-valued: a domain that ended
    in a blow-up or step underflow before ``+-T`` gives ``DomainFinite``.
    """
    if not delta > 0 or not T > 0:
        raise ArgumentError("delta and T must be positive")
    lo, hi = traj.domain
    reached_minus = lo <= -T and not (traj.open_ends and lo == -T)
    reached_plus = hi >= T and not (traj.open_ends and hi == T)
    short = [(r, st) for r, st in ((reached_minus, traj.status_minus), (reached_plus, traj.status_plus)) if not r]
    if any(st.finite for _, st in short):
        return CompletenessReport(Completeness.DOMAIN_FINITE, reached_minus, reached_plus, None, None)
    if short:
        return CompletenessReport(Completeness.INCONCLUSIVE, reached_minus, reached_plus, None, None)
    plus = np.linspace(T / 2, T, samples)
    margin_plus = float(np.min(-traj.y(plus)))
    margin_minus = float(np.min(traj.y(-plus)))
    ok = margin_plus >= delta and margin_minus >= delta
    flag = Completeness.NUMERICALLY_COMPLETE if ok else Completeness.INCONCLUSIVE
    return CompletenessReport(flag, True, True, margin_minus, margin_plus)


@dataclass(frozen=True)
class ClassificationReport:
    n: int
    t_probe: float
    ricci_generic: bool
    generic_fraction: float
    not_ricci_parallel: bool
    not_locally_reducible: bool
    not_conformally_flat: bool
    ricci_eigenvalues: tuple
    codazzi_terms: tuple
    weyl_values: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["ricci_eigenvalues"] = list(self.ricci_eigenvalues)
        d["codazzi_terms"] = list(self.codazzi_terms)
        d["weyl_values"] = {f"{j},{k}": v for (j, k), v in sorted(self.weyl_values.items())}
        return d

    @property
    def all_obstructions(self):
        return self.ricci_generic and self.not_ricci_parallel and self.not_locally_reducible and self.not_conformally_flat


def classify(traj, t_probe=None, samples=64, tolerance=CLASSIFY_TOL):
    """Genericity and obstruction flags of the metric generated by ``traj``.

    Ricci-genericity is tested at ``samples`` times across the domain window;
    the solution is analytic, so distinct eigenvalues at one time imply
    distinct eigenvalues on an open dense set. The obstruction flags are
    open conditions certified at ``t_probe`` (default ``traj.t0``), each with a
    relative threshold ``tolerance * scale``.
    """
    n = traj.n
    if n < 3:
        raise CapacityError("classification needs n >= 3")
    t_probe = traj.t0 if t_probe is None else float(t_probe)
    state = traj.state(t_probe)
    y, p = state.y, state.p

    ts = traj.sample_times(samples)
    flags = [eigenvalues_distinct(ricci_eigenvalues(PhaseState.from_flat(x)), DEFAULT_GENERIC_TOL) for x in traj.evaluate(ts)]
    generic_fraction = float(np.mean(flags))

    mu = ricci_eigenvalues(state)
    ymax = float(np.max(np.abs(y)))
    terms = y * (mu[1:] - mu[0])
    not_parallel = bool(np.any(np.abs(terms) > tolerance * max(1.0, ymax * float(np.max(np.abs(mu))))))
    not_reducible = bool(np.all(np.abs(y) > tolerance * max(1.0, ymax)))

    weyl = {}
    if n >= 4:
        wscale = (n - 1) * (n - 2) * max(1.0, ymax**2, float(np.max(np.abs(p))))
        for j, k in itertools.combinations(range(2, n + 1), 2):
            weyl[(j, k)] = weyl_sectional_state(state, j, k)
        not_cf = any(abs(v) > tolerance * wscale for v in weyl.values())
    else:
        not_cf = False
    return ClassificationReport(
        n=n,
        t_probe=t_probe,
        ricci_generic=any(flags),
        generic_fraction=generic_fraction,
        not_ricci_parallel=not_parallel,
        not_locally_reducible=not_reducible,
        not_conformally_flat=bool(not_cf),
        ricci_eigenvalues=tuple(float(m) for m in mu),
        codazzi_terms=tuple(float(v) for v in terms),
        weyl_values=weyl,
    )


def oracle_agreement(chart, t):
    """Compare the curvature engine with the closed forms at ``t``.

    Returns the largest absolute discrepancies of the Ricci eigenvalues and the
    scalar curvature, the largest off-diagonal Ricci entry, and the engine's
    Codazzi defect.
    """
    report = curvature_at(chart.metric_chart(), chart.point(t))
    y, p, _, _ = chart.jet(t)
    state = PhaseState(y, p)
    op = report.ricci_operator()
    return {
        "ricci": float(np.max(np.abs(np.diag(op) - ricci_eigenvalues(state)))),
        "ricci_offdiag": float(np.max(np.abs(op - np.diag(np.diag(op))))),
        "scalar": abs(report.scalar - scalar_invariant(state)),
        "codazzi": report.codazzi_defect_norm,
    }


def _box(n, box):
    lo, hi = box
    k = 2 * (n - 1)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (k,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (k,))
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))) or np.any(hi <= lo):
        raise ArgumentError("sampling box must have finite bounds with hi > lo in every coordinate")
    return lo, hi


def moduli_record(index, state, horizon=DEFAULT_PROBE_HORIZON, delta=DEFAULT_PROBE_DELTA, tol=1e-10):
    """Integrate one initial state and summarize it as a plain dict."""
    traj = integrate(state, 0.0, (-horizon, horizon), tol)
    report = classify(traj)
    probe = completeness_probe(traj, delta, horizon)
    return {
        "index": int(index),
        "initial": {"y": state.y.tolist(), "p": state.p.tolist()},
        "s": scalar_invariant(state),
        "domain": [traj.t_minus, traj.t_plus],
        "status": [traj.status_minus.value, traj.status_plus.value],
        "ricci_generic": report.ricci_generic,
        "completeness": probe.flag.value,
        "not_ricci_parallel": report.not_ricci_parallel,
        "not_locally_reducible": report.not_locally_reducible,
        "not_conformally_flat": report.not_conformally_flat,
    }


def draw_state(n, box, seed, index):
    """The ``index``-th uniform draw from ``box``, from its own stream keyed by ``(seed, index)``."""
    lo, hi = _box(n, box)
    rng = np.random.default_rng([int(seed), int(index)])
    return PhaseState.from_flat(rng.uniform(lo, hi))


def _record_task(args):
    index, y, p, horizon, delta = args
    return moduli_record(index, PhaseState(y, p), horizon, delta)


def sample_moduli(n, count, box=(-3.0, 3.0), seed=0, forced=None, workers=1,
                  horizon=DEFAULT_PROBE_HORIZON, delta=DEFAULT_PROBE_DELTA):
    """Records for ``count`` uniform draws of ``(y0, p0)`` from ``box``.

    ``box`` is ``(lo, hi)`` with scalar or per-coordinate bounds over the flat
    vector ``[y, p]``. ``forced`` replaces the draws by explicit states. Each
    draw has its own random stream, so the output is independent of ``workers``.
    """
    if n < 3:
        raise CapacityError("moduli sampling needs n >= 3")
    if count < 1:
        raise ArgumentError("count must be at least 1")
    _box(n, box)
    if forced is not None:
        states = list(forced)
        if len(states) != count:
            raise ArgumentError("forced states must number exactly count")
        for st in states:
            if st.n != n:
                raise DimensionError("forced state has the wrong dimension")
    else:
        states = [draw_state(n, box, seed, i) for i in range(count)]
    tasks = [(i, st.y, st.p, horizon, delta) for i, st in enumerate(states)]
    return ordered_map(_record_task, tasks, workers)
