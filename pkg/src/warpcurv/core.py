"""Pointwise algebra on diagonal matrices and the phase-space quantities built from it.

A diagonal ``(n-1) x (n-1)`` matrix is stored as a 1-d float array of its
diagonal entries. Products are entrywise and a scalar trace added to such an
array acts as ``trace * identity``, which is exactly NumPy broadcasting.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DimensionError

DEFAULT_GENERIC_TOL = 1e-8


def as_diag(values):
    """Return ``values`` as a read-only 1-d float array, validating shape and finiteness."""
    arr = np.atleast_1d(np.array(values, dtype=float))
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionError(f"a diagonal matrix needs a non-empty 1-d entry list, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError("diagonal entries must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PhaseState:
    """A point ``(y, p)`` of the first-order phase space, with ``p`` the time derivative of ``y``."""

    y: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        y = as_diag(self.y)
        p = as_diag(self.p)
        if y.shape != p.shape:
            raise DimensionError(f"y has {y.size} entries but p has {p.size}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "p", p)

    @property
    def n(self):
        """Manifold dimension, one more than the number of diagonal entries."""
        return self.y.size + 1

    @classmethod
    def from_flat(cls, x):
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size % 2 or x.size < 2:
            raise DimensionError(f"flat phase vector must have even positive length, got {x.shape}")
        k = x.size // 2
        return cls(x[:k], x[k:])

    def flat(self):
        return np.concatenate([self.y, self.p])

    @classmethod
    def identity_multiple(cls, n, q, r=0.0):
        """The state ``(q * 1, r * 1)`` in dimension ``n``."""
        if n < 2:
            raise ArgumentError("n must be at least 2")
        return cls(np.full(n - 1, float(q)), np.full(n - 1, float(r)))

    def __eq__(self, other):
        if not isinstance(other, PhaseState):
            return NotImplemented
        return np.array_equal(self.y, other.y) and np.array_equal(self.p, other.p)

    def __hash__(self):
        return hash((self.y.tobytes(), self.p.tobytes()))


def acceleration(y, p):
    """Second component of the phase vector field, vectorized over leading axes.

    ``y`` and ``p`` have the diagonal entries on their last axis.
    """
    tr = y.sum(axis=-1, keepdims=True)
    tr2 = (y * y).sum(axis=-1, keepdims=True)
    return (tr + y) * p + tr2 * y - tr * y * y


def phase_vector_field(state):
    """Evaluate the phase vector field ``(y, p) -> (p, (tr y + y) p + (tr y^2) y - (tr y) y^2)``."""
    return PhaseState(state.p, acceleration(state.y, state.p))


def scalar_invariant(state):
    """The conserved quantity ``2 tr p - tr y^2 - (tr y)^2``, which is also the scalar curvature."""
    y, p = state.y, state.p
    return float(2.0 * p.sum() - (y * y).sum() - y.sum() ** 2)


def ricci_eigenvalues(state):
    """Ricci eigenvalues ``(mu_1, ..., mu_n)`` along the coordinate directions of the metric.

    ``mu_1 = tr p - tr y^2`` belongs to the geodesic direction and
    ``mu_j = p_j - y_j tr y`` to the j-th warped direction.
    """
    y, p = state.y, state.p
    mu1 = p.sum() - (y * y).sum()
    return np.concatenate([[mu1], p - y * y.sum()])


def _check_tolerance(tolerance):
    if not tolerance > 0:
        raise ArgumentError(f"tolerance must be positive, got {tolerance!r}")


def eigenvalues_distinct(mu, tolerance=DEFAULT_GENERIC_TOL):
    """True iff all pairwise gaps of ``mu`` exceed ``tolerance * max(1, max |mu|)``."""
    _check_tolerance(tolerance)
    mu = np.sort(np.asarray(mu, dtype=float))
    scale = max(1.0, float(np.max(np.abs(mu))))
    return bool(np.all(np.diff(mu) > tolerance * scale))


def is_ricci_generic(state, tolerance=DEFAULT_GENERIC_TOL):
    """Whether the Ricci eigenvalues at ``state`` are pairwise distinct (relative tolerance)."""
    return eigenvalues_distinct(ricci_eigenvalues(state), tolerance)


def harmonic_defect(y, p, ydd):
    """Per-component defect ``mu_j' - y_j (mu_j - mu_1)`` for a curve with jet ``(y, p, ydd)``.

    The derivative of ``mu_j`` is taken by the chain rule,
    ``mu_j' = ydd_j - p_j tr y - y_j tr p``. The defect vanishes iff ``ydd`` equals
    the acceleration prescribed by the phase vector field.
    """
    y, p, ydd = (np.asarray(a, dtype=float) for a in (y, p, ydd))
    if not (y.shape == p.shape == ydd.shape):
        raise DimensionError("y, p and ydd must have the same length")
    tr, trp = y.sum(), p.sum()
    mu1 = trp - (y * y).sum()
    mu = p - y * tr
    mudot = ydd - p * tr - y * trp
    return mudot - y * (mu - mu1)
