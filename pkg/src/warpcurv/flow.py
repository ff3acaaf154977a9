"""Integration of the harmonic-curvature ODE and the symmetry actions on its solutions.

A :class:`Trajectory` is an immutable solution curve ``t -> (y(t), p(t))`` on a
closed time domain. It is produced either by :func:`integrate` (adaptive
Dormand-Prince 5(4) with its free quartic dense output) or in closed form by
:func:`explicit_solution`, and transformed by :func:`trivial_extend` and
:func:`apply_symmetry`.

Every trajectory carries three vectorized evaluators: the flat phase state,
its exact time derivative, and an antiderivative of ``y``. The last one lets
the metric coefficients be built by exact quadrature of the interpolant.
"""

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import RK45
from scipy.optimize import brentq, minimize_scalar

from .core import PhaseState, acceleration, scalar_invariant
from .errors import ArgumentError, CapacityError, DimensionError, DomainError, IntegrationError

DEFAULT_TOL = 1e-10
BLOWUP_NORM = 1e8
UNDERFLOW_FACTOR = 1e-13
# Finite window used when a closed-form solution lives on the whole line.
DEFAULT_HORIZON = 10.0
# Fraction of the width trimmed from each pole of a closed-form finite domain.
POLE_MARGIN = 1e-2
MAX_EQUIVALENCE_N = 8


class Status(enum.Enum):
    REACHED_REQUESTED = "ReachedRequested"
    BLOWUP_DETECTED = "BlowupDetected"
    STEP_UNDERFLOW = "StepUnderflow"

    @property
    def finite(self):
        """Whether this end status indicates the solution escapes in finite time."""
        return self is not Status.REACHED_REQUESTED


class Kind(enum.Enum):
    TANH = "Tanh"
    TAN = "Tan"


def _rhs(t, x):
    k = x.size // 2
    y, p = x[:k], x[k:]
    return np.concatenate([p, acceleration(y, p)])


def _rates(states):
    k = states.shape[-1] // 2
    y, p = states[..., :k], states[..., k:]
    return np.concatenate([p, acceleration(y, p)], axis=-1)


@dataclass(frozen=True)
class Trajectory:
    """A solution of the harmonic-curvature ODE on ``[t_minus, t_plus]``.

    Evaluation outside the closed domain raises :class:`DomainError`; there is
    no extrapolation. ``open_ends`` marks closed-form solutions whose domain
    endpoints are genuine poles, so only interior points are evaluable.
    """

    n: int
    t0: float
    initial: PhaseState
    t_minus: float
    t_plus: float
    status_minus: Status
    status_plus: Status
    s0: float
    max_s_drift: float
    _state: Callable = field(repr=False, compare=False)
    _rate: Callable = field(repr=False, compare=False)
    _yint: Callable = field(repr=False, compare=False)
    nodes: np.ndarray = field(default=None, repr=False, compare=False)
    open_ends: bool = False

    @property
    def k(self):
        return self.n - 1

    @property
    def domain(self):
        return (self.t_minus, self.t_plus)

    def contains(self, t):
        t = np.asarray(t, dtype=float)
        if self.open_ends:
            return bool(np.all((t > self.t_minus) & (t < self.t_plus)))
        return bool(np.all((t >= self.t_minus) & (t <= self.t_plus)))

    def _times(self, t):
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        if ts.ndim != 1:
            raise ArgumentError("times must be a scalar or a 1-d array")
        if not self.contains(ts):
            bad = ts[(ts < self.t_minus) | (ts > self.t_plus)]
            shown = bad[0] if bad.size else ts[0]
            raise DomainError(f"t={shown!r} outside trajectory domain [{self.t_minus!r}, {self.t_plus!r}]")
        return ts

    def evaluate(self, t):
        """Flat states ``[y, p]``; shape ``(2(n-1),)`` for scalar ``t`` else ``(len(t), 2(n-1))``."""
        out = self._state(self._times(t))
        return out[0] if np.ndim(t) == 0 else out

    def rate(self, t):
        """Exact time derivative of :meth:`evaluate` (of the interpolant, not of the field)."""
        out = self._rate(self._times(t))
        return out[0] if np.ndim(t) == 0 else out

    def state(self, t):
        return PhaseState.from_flat(self.evaluate(float(t)))

    def y(self, t):
        return self.evaluate(t)[..., : self.k]

    def p(self, t):
        return self.evaluate(t)[..., self.k :]

    def y_integral(self, t, t_ref=None):
        """``integral_{t_ref}^{t} y(s) ds`` componentwise; ``t_ref`` defaults to ``t0``."""
        t_ref = self.t0 if t_ref is None else t_ref
        ts = self._times(t)
        ref = self._yint(self._times(t_ref))[0]
        out = self._yint(ts) - ref
        return out[0] if np.ndim(t) == 0 else out

    def ode_residual(self, t):
        """Sup-norm of ``d/dt state - v(state)`` at each time.

        For integrated trajectories this is the derivative error of the quartic
        dense output, roughly the local error over the step: a few hundred times
        ``tol * max(1, |v|)``, not a small multiple of it.
        """
        ts = self._times(t)
        res = np.max(np.abs(self._rate(ts) - _rates(self._state(ts))), axis=-1)
        return res[0] if np.ndim(t) == 0 else res

    def window(self, horizon=DEFAULT_HORIZON):
        """A finite evaluable interval: infinite ends are clipped to ``t0 +- horizon``."""
        lo = self.t_minus if math.isfinite(self.t_minus) else self.t0 - horizon
        hi = self.t_plus if math.isfinite(self.t_plus) else self.t0 + horizon
        if self.open_ends:
            margin = POLE_MARGIN * (hi - lo)
            lo = lo + margin if math.isfinite(self.t_minus) else lo
            hi = hi - margin if math.isfinite(self.t_plus) else hi
        return lo, hi

    def sample_times(self, count, horizon=DEFAULT_HORIZON):
        if count < 2:
            raise ArgumentError("need at least two samples")
        lo, hi = self.window(horizon)
        return np.linspace(lo, hi, count)


def _drift(traj_state, s0, ts):
    states = traj_state(ts)
    k = states.shape[1] // 2
    y, p = states[:, :k], states[:, k:]
    s = 2.0 * p.sum(axis=1) - (y * y).sum(axis=1) - y.sum(axis=1) ** 2
    return float(np.max(np.abs(s - s0))) if s.size else 0.0


class _PiecewiseQuartic:
    """Union of Dormand-Prince dense-output segments, evaluated with exact calculus.

    On a segment starting at ``t_old`` with signed width ``h`` the state is
    ``y_old + h * sum_k Q[:, k-1] x**k`` with ``x = (t - t_old) / h``.
    """

    def __init__(self, dense_outputs):
        dense_outputs = sorted(dense_outputs, key=lambda d: min(d.t_old, d.t))
        self.t_old = np.array([d.t_old for d in dense_outputs])
        self.h = np.array([d.h for d in dense_outputs])
        self.y_old = np.array([d.y_old for d in dense_outputs])
        self.Q = np.array([d.Q for d in dense_outputs])
        self.left = np.minimum(self.t_old, self.t_old + self.h)
        order = self.Q.shape[2]
        self._kpow = np.arange(1, order + 1, dtype=float)
        # Antiderivative constants: cumulative integral up to each segment's left end.
        right_int = self._seg_integral(np.arange(len(self.h)), np.maximum(self.t_old, self.t_old + self.h))
        left_int = self._seg_integral(np.arange(len(self.h)), self.left)
        widths = right_int - left_int
        self._base = np.vstack([np.zeros((1, widths.shape[1])), np.cumsum(widths, axis=0)[:-1]])
        self._left_int = left_int

    def _index(self, ts):
        idx = np.searchsorted(self.left, ts, side="right") - 1
        return np.clip(idx, 0, len(self.left) - 1)

    def _seg_integral(self, idx, ts):
        # integral from t_old[idx] to ts of the segment polynomial
        h = self.h[idx][:, None]
        x = ((ts - self.t_old[idx]) / self.h[idx])[:, None]
        xp = x ** (self._kpow + 1) / (self._kpow + 1)
        return h * (self.y_old[idx] * x + h * np.einsum("mdk,mk->md", self.Q[idx], xp))

    def state(self, ts):
        idx = self._index(ts)
        x = ((ts - self.t_old[idx]) / self.h[idx])[:, None]
        xp = x**self._kpow
        return self.y_old[idx] + self.h[idx][:, None] * np.einsum("mdk,mk->md", self.Q[idx], xp)

    def rate(self, ts):
        idx = self._index(ts)
        x = ((ts - self.t_old[idx]) / self.h[idx])[:, None]
        xp = self._kpow * x ** (self._kpow - 1)
        return np.einsum("mdk,mk->md", self.Q[idx], xp)

    def integral(self, ts):
        idx = self._index(ts)
        return self._base[idx] + self._seg_integral(idx, ts) - self._left_int[idx]


def _march(x0, t0, t_end, tol, blowup_norm):
    solver = RK45(_rhs, t0, x0, t_end, rtol=tol, atol=tol)
    segments = []
    status = Status.REACHED_REQUESTED
    while solver.status == "running":
        last_t = solver.t
        solver.step()
        if solver.status == "failed":
            status = Status.STEP_UNDERFLOW
            break
        if not np.all(np.isfinite(solver.y)):
            raise IntegrationError("integrator produced a non-finite state", last_t)
        segments.append(solver.dense_output())
        if np.max(np.abs(solver.y)) > blowup_norm:
            status = Status.BLOWUP_DETECTED
            break
        if solver.status == "running" and solver.step_size < UNDERFLOW_FACTOR * max(1.0, abs(solver.t)):
            status = Status.STEP_UNDERFLOW
            break
    return segments, solver.t, status


def integrate(initial, t0=0.0, span=(-10.0, 10.0), tol=DEFAULT_TOL, *, blowup_norm=BLOWUP_NORM):
    """Integrate from ``initial`` at ``t0`` towards both ends of ``span``.

    Each direction stops at the span end (``ReachedRequested``), when the state
    sup-norm exceeds ``blowup_norm`` (``BlowupDetected``), or when the accepted
    step falls below ``1e-13 * max(1, |t|)`` (``StepUnderflow``). The reported
    endpoint is the last accepted mesh point.
    """
    lo, hi = (float(v) for v in span)
    t0 = float(t0)
    if not (lo < t0 < hi):
        raise ArgumentError(f"span {span!r} must strictly contain t0={t0!r}")
    if not (0.0 < tol <= 1e-4):
        raise ArgumentError(f"tol must lie in (0, 1e-4], got {tol!r}")
    x0 = initial.flat()
    fwd, t_plus, st_plus = _march(x0, t0, hi, tol, blowup_norm)
    bwd, t_minus, st_minus = _march(x0, t0, lo, tol, blowup_norm)
    pw = _PiecewiseQuartic(fwd + bwd)
    nodes = np.unique(np.concatenate([pw.t_old, pw.t_old + pw.h]))
    s0 = scalar_invariant(initial)
    drift = _drift(pw.state, s0, np.concatenate([nodes, np.linspace(t_minus, t_plus, 64)]))
    return Trajectory(
        n=initial.n,
        t0=t0,
        initial=initial,
        t_minus=float(t_minus),
        t_plus=float(t_plus),
        status_minus=st_minus,
        status_plus=st_plus,
        s0=s0,
        max_s_drift=drift,
        _state=pw.state,
        _rate=pw.rate,
        _yint=lambda ts: pw.integral(ts)[:, : initial.n - 1],
        nodes=nodes,
    )


def _logcosh(u):
    a = np.abs(u)
    return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)


def explicit_solution(kind, n, a=1.0, b=0.0):
    """Closed-form identity-multiple solution ``y(t) = a * y1(a t + b) * 1``.

    ``y1(u) = -2 tanh(n u)`` on the whole line (``Kind.TANH``) or
    ``y1(u) = 2 tan(n u)`` for ``|u| < pi / (2n)`` (``Kind.TAN``). The base time
    ``t0 = -b / a`` is where ``u = 0``.
    """
    kind = Kind(kind) if not isinstance(kind, Kind) else kind
    if n < 2:
        raise ArgumentError("n must be at least 2")
    if a == 0:
        raise ArgumentError("scaling parameter a must be nonzero")
    a, b = float(a), float(b)
    k = n - 1

    if kind is Kind.TANH:

        def jet(u):
            th = np.tanh(n * u)
            sech2 = 1.0 - th * th
            return -2.0 * th, -2.0 * n * sech2, 4.0 * n * n * sech2 * th, -(2.0 / n) * _logcosh(n * u)

        t_minus, t_plus = -math.inf, math.inf
        status = Status.REACHED_REQUESTED
    else:

        def jet(u):
            tn = np.tan(n * u)
            sec2 = 1.0 + tn * tn
            return 2.0 * tn, 2.0 * n * sec2, 4.0 * n * n * sec2 * tn, -(2.0 / n) * np.log(np.cos(n * u))

        ends = sorted(((-math.pi / (2 * n) - b) / a, (math.pi / (2 * n) - b) / a))
        t_minus, t_plus = ends
        status = Status.BLOWUP_DETECTED

    ones = np.ones(k)

    def state(ts):
        y1, d1, _, _ = jet(a * ts + b)
        return np.concatenate([np.outer(a * y1, ones), np.outer(a * a * d1, ones)], axis=1)

    def rate(ts):
        _, d1, d2, _ = jet(a * ts + b)
        return np.concatenate([np.outer(a * a * d1, ones), np.outer(a**3 * d2, ones)], axis=1)

    def yint(ts):
        return np.outer(jet(a * ts + b)[3], ones)

    t0 = -b / a
    initial = PhaseState.from_flat(state(np.array([t0]))[0])
    s0 = scalar_invariant(initial)
    return Trajectory(
        n=n,
        t0=t0,
        initial=initial,
        t_minus=t_minus,
        t_plus=t_plus,
        status_minus=status,
        status_plus=status,
        s0=s0,
        max_s_drift=0.0,
        _state=state,
        _rate=rate,
        _yint=yint,
        open_ends=kind is Kind.TAN,
    )


def _rebuild(traj, **changes):
    new = Trajectory(**{**{f: getattr(traj, f) for f in traj.__dataclass_fields__}, **changes})
    return new


def trivial_extend(traj, m):
    """Append ``m`` identically-zero components to ``y`` and ``p``."""
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ArgumentError(f"m must be a positive integer, got {m!r}")
    k = traj.k

    def pad(arr):
        z = np.zeros((arr.shape[0], m))
        return np.concatenate([arr[:, :k], z, arr[:, k:], z], axis=1)

    def yint(ts):
        v = traj._yint(ts)
        return np.concatenate([v, np.zeros((v.shape[0], m))], axis=1)

    zeros = np.zeros(m)
    initial = PhaseState(np.concatenate([traj.initial.y, zeros]), np.concatenate([traj.initial.p, zeros]))
    return _rebuild(
        traj,
        n=traj.n + m,
        initial=initial,
        _state=lambda ts: pad(traj._state(ts)),
        _rate=lambda ts: pad(traj._rate(ts)),
        _yint=yint,
    )


@dataclass(frozen=True)
class KElement:
    """``y -> t -> sign * sigma(y(shift + sign * t))``; ``perm[i]`` is the source of new component ``i``."""

    sign: int = 1
    shift: float = 0.0
    perm: Optional[Sequence[int]] = None

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ArgumentError(f"sign must be +1 or -1, got {self.sign!r}")
        if self.perm is not None:
            perm = tuple(int(i) for i in self.perm)
            if sorted(perm) != list(range(len(perm))):
                raise ArgumentError(f"perm {self.perm!r} is not a permutation")
            object.__setattr__(self, "perm", perm)

    def permutation(self, k):
        if self.perm is None:
            return tuple(range(k))
        if len(self.perm) != k:
            raise ArgumentError(f"permutation of length {len(self.perm)} does not act on {k} components")
        return self.perm


@dataclass(frozen=True)
class Scaling:
    """``y -> t -> a * y(a t)``."""

    a: float

    def __post_init__(self):
        if self.a == 0 or not math.isfinite(self.a):
            raise ArgumentError("scaling factor must be finite and nonzero")


SymmetryElement = Union[KElement, Scaling]


def apply_symmetry(traj, elem):
    """Transform a solution by a K-element or a scaling; the result is again a solution."""
    k = traj.k
    if isinstance(elem, KElement):
        eps, b = elem.sign, float(elem.shift)
        perm = np.array(elem.permutation(k))
        cols = np.concatenate([perm, perm + k])

        def inner(ts):
            return b + eps * ts

        def state(ts):
            x = traj._state(inner(ts))[:, cols]
            x[:, :k] *= eps
            return x

        def rate(ts):
            x = traj._rate(inner(ts))[:, cols]
            x[:, k:] *= eps
            return x

        def yint(ts):
            return traj._yint(inner(ts))[:, perm]

        ends = (traj.t_minus - b, traj.t_plus - b) if eps == 1 else (b - traj.t_plus, b - traj.t_minus)
        stats = (traj.status_minus, traj.status_plus) if eps == 1 else (traj.status_plus, traj.status_minus)
        t0 = eps * (traj.t0 - b)
        scale2 = 1.0
    elif isinstance(elem, Scaling):
        a = float(elem.a)

        def state(ts):
            x = traj._state(a * ts).copy()
            x[:, :k] *= a
            x[:, k:] *= a * a
            return x

        def rate(ts):
            x = traj._rate(a * ts).copy()
            x[:, :k] *= a * a
            x[:, k:] *= a**3
            return x

        def yint(ts):
            return traj._yint(a * ts)

        ends = (traj.t_minus / a, traj.t_plus / a) if a > 0 else (traj.t_plus / a, traj.t_minus / a)
        stats = (traj.status_minus, traj.status_plus) if a > 0 else (traj.status_plus, traj.status_minus)
        t0 = traj.t0 / a
        scale2 = a * a
    else:
        raise ArgumentError(f"unknown symmetry element {elem!r}")

    initial = PhaseState.from_flat(state(np.array([t0]))[0])
    nodes = None
    if traj.nodes is not None:
        nodes = np.sort((traj.nodes - elem.shift) * elem.sign if isinstance(elem, KElement) else traj.nodes / elem.a)
    return _rebuild(
        traj,
        t0=t0,
        initial=initial,
        t_minus=ends[0],
        t_plus=ends[1],
        status_minus=stats[0],
        status_plus=stats[1],
        s0=traj.s0 * scale2,
        max_s_drift=traj.max_s_drift * scale2,
        _state=state,
        _rate=rate,
        _yint=yint,
        nodes=nodes,
    )


def invariant_drift(traj, samples=256, state_cap=None):
    """Largest ``|s(t) - s0|`` over ``samples`` uniform times of the trajectory window.

    With ``state_cap`` only samples whose state sup-norm is at most the cap are
    used. Near a finite-time blow-up the terms of ``s`` grow without bound and
    a fixed absolute drift is not resolvable in double precision.
    """
    if samples < 2:
        raise ArgumentError("samples must be at least 2")
    ts = traj.sample_times(samples)
    if state_cap is not None:
        ts = ts[np.max(np.abs(traj._state(ts)), axis=1) <= state_cap]
    return _drift(traj._state, traj.s0, ts)


ATTAINABLE_FACTOR = 10.0


def attainable_drift(traj, samples=256):
    """Relative drift ``|s - s0| / max(1, |s0|)`` over the attainable part of the window.

    The attainable part is where the state stays within a decade of its initial
    scale, ``|x(t)| <= 10 max(1, |x0|)`` in the sup-norm. Beyond that the terms of
    ``s`` grow like ``|x|^2`` towards a blow-up and a fixed relative accuracy of
    their sum is out of reach of the integration tolerance.
    """
    cap = ATTAINABLE_FACTOR * max(1.0, float(np.max(np.abs(traj.initial.flat()))))
    return invariant_drift(traj, samples, state_cap=cap) / max(1.0, abs(traj.s0))


def scaled_drift(traj, samples=256):
    """Drift of ``s`` relative to the local size ``2|tr p| + tr y^2 + (tr y)^2`` of its terms."""
    states = traj._state(traj.sample_times(samples))
    y, p = states[:, : traj.k], states[:, traj.k :]
    s = 2.0 * p.sum(axis=1) - (y * y).sum(axis=1) - y.sum(axis=1) ** 2
    size = 2.0 * np.abs(p.sum(axis=1)) + (y * y).sum(axis=1) + y.sum(axis=1) ** 2
    return float(np.max(np.abs(s - traj.s0) / np.maximum(1.0, size)))


def _roots(f, lo, hi, count=400):
    ts = np.linspace(lo, hi, count)
    vals = f(ts)
    out = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]:
        if vals[i] == 0:
            out.append(ts[i])
        elif vals[i + 1] != 0:
            out.append(brentq(lambda t: f(np.array([t]))[0], ts[i], ts[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return out


def k_equivalent(t1, t2, tol=1e-6, samples=64):
    """Search for a :class:`KElement` carrying ``t1`` onto ``t2``.

    Tries both signs and every permutation; the shift is seeded by matching
    times where ``tr y`` takes the value it has at the middle of ``t2``'s
    window (with a coarse grid as fallback) and then refined by bounded 1-d
    minimization. Returns the best witness whose sup-distance on the common
    window is below ``tol * max(1, sup |y2|)``, or ``None``. This is numerical
    evidence only, never a proof of equivalence.
    """
    if t1.n != t2.n:
        raise DimensionError(f"trajectories have dimensions {t1.n} and {t2.n}")
    if not tol > 0:
        raise ArgumentError("tol must be positive")
    if t1.n > MAX_EQUIVALENCE_N:
        raise CapacityError(f"permutation search is limited to n <= {MAX_EQUIVALENCE_N}")
    s_scale = max(1.0, abs(t1.s0), abs(t2.s0))
    if abs(t1.s0 - t2.s0) > 10 * tol * s_scale + t1.max_s_drift + t2.max_s_drift:
        return None

    k = t1.k
    lo1, hi1 = t1.window()
    lo2, hi2 = t2.window()
    grid2 = np.linspace(lo2, hi2, samples)
    y2 = t2._state(grid2)[:, :k]
    scale = max(1.0, float(np.max(np.abs(y2))))
    tmid = 0.5 * (lo2 + hi2)
    target = float(t2._state(np.array([tmid]))[0, :k].sum())

    def overlap(eps, b):
        # times t in t2's window with b + eps*t inside t1's window
        a_, b_ = sorted(((lo1 - b) * eps, (hi1 - b) * eps))
        lo, hi = max(lo2, a_), min(hi2, b_)
        return (lo, hi) if hi - lo >= 0.5 * (hi2 - lo2) else None

    def distances(eps, perm, b):
        win = overlap(eps, b)
        if win is None:
            return math.inf, math.inf
        ts = np.linspace(win[0], win[1], samples)
        diff = eps * t1._state(b + eps * ts)[:, :k][:, perm] - t2._state(ts)[:, :k]
        return float(np.max(np.abs(diff))) / scale, float(np.mean(diff * diff)) / scale**2

    best = None
    for eps in (1, -1):
        trace = lambda ts, eps=eps: eps * t1._state(ts)[:, :k].sum(axis=1) - target
        seeds = [tau - eps * tmid for tau in _roots(trace, lo1, hi1)]
        width = (hi1 - lo1) + (hi2 - lo2)
        b_lo, b_hi = (lo1 - hi2, hi1 - lo2) if eps == 1 else (lo1 + lo2, hi1 + hi2)
        seeds += list(np.linspace(b_lo, b_hi, 25))
        for perm in itertools.permutations(range(k)):
            perm = list(perm)
            for b0 in seeds:
                sup0, _ = distances(eps, perm, b0)
                if not math.isfinite(sup0) or sup0 > max(0.5, 1e3 * tol):
                    continue
                delta = 0.02 * width
                res = minimize_scalar(
                    lambda b: min(distances(eps, perm, b)[1], 1e300), bounds=(b0 - delta, b0 + delta), method="bounded", options={"xatol": 1e-13}
                )
                for b in (b0, float(res.x)):
                    sup, _ = distances(eps, perm, b)
                    if sup < tol and (best is None or sup < best[0]):
                        best = (sup, KElement(eps, b, tuple(perm)))
    return None if best is None else best[1]
