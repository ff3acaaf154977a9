"""Phase-space analysis: linearization at identity multiples, scaling conjugacy, and two sampling experiments.

The phase field ``v(y, p) = (p, (tr y + y) p + (tr y^2) y - (tr y) y^2)`` vanishes
on the line ``q (1, 0)``. Its linearization there has eigenvalues
``0, nq, (n-1)q, q`` with multiplicities ``1, 1, n-2, n-2``. The map
``F_c(y, p) = (c y, c^2 p)`` satisfies ``v(F_c x) = c dF_c(v(x))``, so solutions
are carried to solutions with time rescaled by ``c``.
"""

from dataclasses import dataclass, field

import numpy as np

from .construction import Completeness, completeness_probe
from .core import PhaseState, acceleration, scalar_invariant
from .errors import ArgumentError, CapacityError
from .flow import integrate
from .parallel import ordered_map

LINEARIZATION_TOL = 1e-10
TRAP_RADIUS = 0.2
BASIN_HORIZON = 20.0
BASIN_THRESHOLD = 1e-2
BLOWUP_HORIZON = 50.0


def zero_matrix(q, n):
    """Matrix of ``(yh, ph) -> (ph, nq ph + q^2 tr(yh) 1 - (n-1) q^2 yh)`` on ``[yh, ph]``."""
    k = n - 1
    eye = np.eye(k)
    lower = q * q * (np.ones((k, k)) - (n - 1) * eye)
    return np.block([[np.zeros((k, k)), eye], [lower, n * q * eye]])


def expected_spectrum(q, n):
    return np.sort(np.array([0.0, n * q] + [(n - 1) * q] * (n - 2) + [q] * (n - 2)))


@dataclass
class LinearizationReport:
    q: float
    n: int
    matrix: np.ndarray
    eigenvalues: np.ndarray
    expected: np.ndarray
    spectrum_error: float
    eigenspaces: dict = field(default_factory=dict)

    @property
    def ok(self):
        tol = LINEARIZATION_TOL * max(1.0, abs(self.q))
        return self.spectrum_error <= tol and all(self.eigenspaces.values())

    def to_dict(self):
        return {
            "q": self.q,
            "n": self.n,
            "eigenvalues": self.eigenvalues.tolist(),
            "expected": self.expected.tolist(),
            "spectrum_error": self.spectrum_error,
            "eigenspaces": dict(self.eigenspaces),
            "ok": self.ok,
        }


def _eigenspace_checks(M, q, n, tol):
    """Check the four eigenspace descriptions and their dimensions.

    For ``lam`` in ``{0, nq}`` the vectors ``(1, lam 1)`` are eigenvectors; for
    ``lam`` in ``{(n-1)q, q}`` so is ``(yh, lam yh)`` for every trace-free ``yh``.
    """
    k = n - 1
    ones = np.ones(k)
    trace_free = [np.eye(k)[0] - np.eye(k)[j] for j in range(1, k)]
    out = {}
    for name, lam, basis in (
        ("zero", 0.0, [ones]),
        ("nq", n * q, [ones]),
        ("(n-1)q", (n - 1) * q, trace_free),
        ("q", q, trace_free),
    ):
        vecs = [np.concatenate([v, lam * v]) for v in basis]
        out[name] = all(np.max(np.abs(M @ v - lam * v)) <= tol for v in vecs)
    if q != 0:
        # multiplicities: nullity of M - lam I equals the claimed count
        for name, lam, mult in (("zero", 0.0, 1), ("nq", n * q, 1), ("(n-1)q", (n - 1) * q, n - 2), ("q", q, n - 2)):
            sv = np.linalg.svd(M - lam * np.eye(2 * k), compute_uv=False)
            out[name] = out[name] and int(np.sum(sv <= tol * max(1.0, sv[0]))) == mult
    return out


def linearize_zero(q, n):
    """Linearization of the phase field at ``q (1, 0)`` with spectrum and eigenspace checks."""
    if n < 3:
        raise CapacityError("linearization analysis needs n >= 3")
    q = float(q)
    M = zero_matrix(q, n)
    eig = np.sort(np.linalg.eigvals(M).real)
    expected = expected_spectrum(q, n)
    tol = LINEARIZATION_TOL * max(1.0, abs(q))
    return LinearizationReport(
        q=q,
        n=n,
        matrix=M,
        eigenvalues=eig,
        expected=expected,
        spectrum_error=float(np.max(np.abs(eig - expected))),
        eigenspaces=_eigenspace_checks(M, q, n, max(tol, 1e-12)),
    )


def scaling_map(state, c):
    """``F_c(y, p) = (c y, c^2 p)`` for nonzero ``c``."""
    if c == 0 or not np.isfinite(c):
        raise ArgumentError("scaling factor must be finite and nonzero")
    return PhaseState(c * state.y, c * c * state.p)


def scaling_pushforward(state, c, tangent):
    """``dF_c`` applied to a tangent vector (given as a :class:`PhaseState`) at ``state``."""
    if c == 0:
        raise ArgumentError("scaling factor must be nonzero")
    return PhaseState(c * tangent.y, c * c * tangent.p)


def field_at(state):
    return PhaseState(state.p, acceleration(state.y, state.p))


def conjugacy_error(state, c, ts, tol=1e-10):
    """Sup-norm gap between the solution from ``F_c(x0)`` and ``F_c`` of the solution from ``x0`` at ``c t``.

    Both sides are integrated over spans containing the requested times.
    """
    ts = np.asarray(ts, dtype=float)
    reach = float(np.max(np.abs(ts))) * 1.01 + 1e-3
    scaled = integrate(scaling_map(state, c), 0.0, (-reach, reach), tol)
    reach_c = reach * abs(c)
    base = integrate(state, 0.0, (-reach_c, reach_c), tol)
    lhs = scaled.evaluate(ts)
    x = base.evaluate(c * ts)
    k = state.y.size
    rhs = np.concatenate([c * x[:, :k], c * c * x[:, k:]], axis=1)
    scale = np.maximum(1.0, np.max(np.abs(rhs), axis=1))
    return float(np.max(np.max(np.abs(lhs - rhs), axis=1) / scale))


def tanh_parameter(n, xi, zeta):
    """``|a|`` of the identity-multiple tanh solution through ``(xi 1, -zeta 1)``."""
    if not zeta > 0:
        raise ArgumentError("zeta must be positive")
    return float(np.sqrt((2.0 * zeta + n * xi * xi) / (4.0 * n)))


def in_trap(state, q, radius=TRAP_RADIUS):
    """Whether ``state`` lies in the sup-norm ball of radius ``radius |q|`` around ``q (1, 0)``."""
    dist = max(np.max(np.abs(state.y - q)), np.max(np.abs(state.p)))
    return bool(dist <= radius * abs(q))


def _rng(seed, index):
    return np.random.default_rng([int(seed), int(index)])


def _basin_sample(args):
    index, y0, p0, horizon, a, delta, threshold = args
    state = PhaseState(y0, p0)
    traj = integrate(state, 0.0, (-horizon, horizon))
    reached = traj.t_minus <= -horizon and traj.t_plus >= horizon
    record = {
        "index": index,
        "initial": {"y": list(y0), "p": list(p0)},
        "domain": [traj.t_minus, traj.t_plus],
        "status": [traj.status_minus.value, traj.status_plus.value],
        "reached": bool(reached),
        "s": traj.s0,
    }
    if reached:
        y_plus, y_minus = traj.y(horizon), traj.y(-horizon)
        dist = max(float(np.max(np.abs(y_plus + 2 * a))), float(np.max(np.abs(y_minus - 2 * a))))
        record["terminal_y"] = {"minus": y_minus.tolist(), "plus": y_plus.tolist()}
        record["limit_distance"] = dist
        record["trapped"] = in_trap(traj.state(horizon), -2 * a) and in_trap(traj.state(-horizon), 2 * a)
    else:
        dist = None
        record["terminal_y"] = None
        record["limit_distance"] = None
        record["trapped"] = False
    flag = completeness_probe(traj, delta, horizon).flag
    record["completeness"] = flag.value
    record["passed"] = bool(reached and dist <= threshold and flag is Completeness.NUMERICALLY_COMPLETE)
    return record


def basin_experiment(n, xi, zeta, epsilon, count, seed=0, horizon=BASIN_HORIZON,
                     threshold=BASIN_THRESHOLD, delta=0.1, workers=1):
    """Integrate ``count`` states drawn from the sup-ball of radius ``epsilon`` around ``(xi 1, -zeta 1)``.

    Each sample records whether it reaches ``|t| = horizon``, its terminal ``y``
    values, their distance to the predicted limits ``-+2|a| 1`` of the tanh
    solution through the center, and the completeness probe flag. Failures are
    recorded, never raised.
    """
    if n < 3:
        raise CapacityError("basin experiment needs n >= 3")
    if epsilon < 0 or count < 1:
        raise ArgumentError("epsilon must be nonnegative and count positive")
    a = tanh_parameter(n, xi, zeta)
    k = n - 1
    center = np.concatenate([np.full(k, float(xi)), np.full(k, -float(zeta))])
    tasks = []
    for i in range(count):
        x = center + _rng(seed, i).uniform(-epsilon, epsilon, 2 * k) if epsilon > 0 else center
        tasks.append((i, x[:k].tolist(), x[k:].tolist(), horizon, a, delta, threshold))
    samples = ordered_map(_basin_sample, tasks, workers)
    return {
        "n": n,
        "xi": float(xi),
        "zeta": float(zeta),
        "epsilon": float(epsilon),
        "a": a,
        "predicted_limits": [2 * a, -2 * a],
        "horizon": horizon,
        "threshold": threshold,
        "seed": int(seed),
        "count": count,
        "passed": sum(s["passed"] for s in samples),
        "samples": samples,
    }


def draw_blowup_state(n, rng, box=3.0):
    """A nonzero state with ``s >= 0`` and ``|tr y| >= 1``.

    ``y`` is drawn uniformly and rescaled when its trace is small; ``p`` is
    drawn uniformly and shifted along ``1`` just enough to make ``s`` nonnegative.
    """
    k = n - 1
    while True:
        y = rng.uniform(-box, box, k)
        tr = y.sum()
        if abs(tr) > 1e-3:
            break
    if abs(tr) < 1.0:
        y = y / abs(tr)
        while abs(y.sum()) < 1.0:  # rounding can land just below 1
            y = y * (1.0 + 4 * np.finfo(float).eps)
    p = rng.uniform(-box, box, k)
    s = scalar_invariant(PhaseState(y, p))
    if s < 0:
        p = p + (-s / (2.0 * k)) * (1.0 + 1e-9) + 1e-12
    return PhaseState(y, p)


def _blowup_sample(args):
    index, y0, p0, horizon = args
    state = PhaseState(y0, p0)
    traj = integrate(state, 0.0, (-horizon, horizon))
    finite_minus, finite_plus = traj.status_minus.finite, traj.status_plus.finite
    return {
        "index": index,
        "initial": {"y": list(y0), "p": list(p0)},
        "s": traj.s0,
        "trace_y": float(np.sum(y0)),
        "domain": [traj.t_minus, traj.t_plus],
        "status": [traj.status_minus.value, traj.status_plus.value],
        "escape_times": [traj.t_minus if finite_minus else None, traj.t_plus if finite_plus else None],
        "finite_side": bool(finite_minus or finite_plus),
    }


def blowup_experiment(n, count, seed=0, horizon=BLOWUP_HORIZON, states=None, workers=1):
    """Integrate nonzero states with ``s >= 0`` and record which sides end in finite time.

    Only the zero solution is defined on the whole line with ``s >= 0``, so
    every sample should hit a blow-up or step underflow within ``|t| <= horizon``.
    """
    if count < 1:
        raise ArgumentError("count must be at least 1")
    if states is None:
        states = [draw_blowup_state(n, _rng(seed, i)) for i in range(count)]
    elif len(states) != count:
        raise ArgumentError("explicit states must number exactly count")
    for st in states:
        if not (np.any(st.y) or np.any(st.p)):
            raise ArgumentError("the zero state is excluded")
    tasks = [(i, st.y.tolist(), st.p.tolist(), horizon) for i, st in enumerate(states)]
    samples = ordered_map(_blowup_sample, tasks, workers)
    return {
        "n": n,
        "count": count,
        "seed": int(seed),
        "horizon": horizon,
        "finite": sum(s["finite_side"] for s in samples),
        "samples": samples,
    }
