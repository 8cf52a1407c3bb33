"""Normalized states, rays, projectors and the ray operator.

Conventions used throughout the package:

* ``inner(u, v)`` is conjugate-linear in ``u`` (``<u|v>``).
* Phases are reported on the principal branch ``(-pi, pi]``.
* States are complex128 numpy arrays wrapped in :class:`StateVector`; every
  public function also accepts a plain array-like and validates it the same way.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, InvalidInput, NotNormalized

NORM_TOL = 1e-12
# inputs whose norm is off by less than this are silently renormalized
RENORMALIZE_LIMIT = 1e-9
SAME_RAY_TOL = 1e-8

RayPhase = complex


def wrap_phase(x):
    """Reduce an angle (or array of angles) to the principal branch (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    out = x - 2.0 * np.pi * np.ceil((x - np.pi) / (2.0 * np.pi))
    # ceil puts exact odd multiples of pi at +pi already; guard the -pi rounding edge
    out = np.where(out <= -np.pi, out + 2.0 * np.pi, out)
    return float(out) if out.ndim == 0 else out


def phase_distance(a, b) -> float:
    """Distance between two angles on the circle, in [0, pi]."""
    return abs(wrap_phase(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def principal_arg(z) -> float:
    """``Arg z`` on (-pi, pi]. ``np.angle`` can return -pi for ``-1 - 0j``."""
    return wrap_phase(np.angle(z))


class StateVector:
    """An immutable, normalized complex amplitude vector.

    Inputs within ``RENORMALIZE_LIMIT`` of unit norm are renormalized;
    anything further off raises :class:`NotNormalized`.
    """

    __slots__ = ("_amps",)

    def __init__(self, amplitudes):
        amps = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size < 1:
            raise InvalidInput("state must have dimension >= 1")
        if not np.all(np.isfinite(amps)):
            raise InvalidInput("state amplitudes must be finite")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) >= RENORMALIZE_LIMIT:
            raise NotNormalized(f"state norm {norm!r} deviates from 1 by more than {RENORMALIZE_LIMIT}")
        amps = amps / norm
        amps.setflags(write=False)
        self._amps = amps

    @classmethod
    def normalized(cls, amplitudes) -> "StateVector":
        """Build a state from any nonzero vector by dividing out its norm."""
        amps = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        if not np.all(np.isfinite(amps)):
            raise InvalidInput("state amplitudes must be finite")
        norm = np.linalg.norm(amps)
        if norm == 0.0:
            raise InvalidInput("cannot normalize the zero vector")
        return cls(amps / norm)

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amps

    @property
    def dim(self) -> int:
        return self._amps.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._amps
        return self._amps.astype(dtype)

    def __len__(self) -> int:
        return self.dim

    def __mul__(self, c) -> "StateVector":
        return StateVector(complex(c) * self._amps)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"StateVector({np.array2string(self._amps, precision=6)})"


StateLike = Union[StateVector, Sequence[complex], np.ndarray]


def as_amplitudes(x: StateLike) -> np.ndarray:
    """Validated complex128 amplitude array for a state-like input."""
    if isinstance(x, StateVector):
        return x.amplitudes
    return StateVector(x).amplitudes


def as_square_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.array(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidInput(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} entries must be finite")
    return a


def state_array(states) -> np.ndarray:
    """Stack state-like inputs (or a Trajectory) into a validated (m, dim) array."""
    if hasattr(states, "states") and hasattr(states, "grid"):
        return states.states
    rows = [as_amplitudes(s) for s in states]
    if len({r.shape for r in rows}) > 1:
        raise DimensionMismatch("all states must share one dimension")
    return np.array(rows)


def basis_state(dim: int, k: int) -> StateVector:
    v = np.zeros(dim, dtype=np.complex128)
    v[k] = 1.0
    return StateVector(v)


def bloch_state(theta: float, phi: float = 0.0) -> StateVector:
    """cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>."""
    return StateVector([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])


def _check_dims(u: np.ndarray, v: np.ndarray) -> None:
    if u.shape != v.shape:
        raise DimensionMismatch(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")


def inner(u: StateLike, v: StateLike) -> complex:
    """Hilbert-space inner product <u|v>."""
    a, b = as_amplitudes(u), as_amplitudes(v)
    _check_dims(a, b)
    return complex(np.vdot(a, b))


def ray_operator(psi: StateLike, c: RayPhase) -> np.ndarray:
    """R(c) = I + (c - 1)|psi><psi|, which maps psi to c*psi and fixes its complement."""
    a = as_amplitudes(psi)
    c = complex(c)
    if not math.isfinite(c.real) or not math.isfinite(c.imag) or abs(abs(c) - 1.0) >= NORM_TOL:
        raise InvalidInput(f"ray phase must have unit modulus, got |c| = {abs(c)!r}")
    return np.eye(a.shape[0], dtype=np.complex128) + (c - 1.0) * np.outer(a, a.conj())


def same_ray(u: StateLike, v: StateLike, tol: float = SAME_RAY_TOL) -> Optional[RayPhase]:
    """Return the unit phase c with v = c*u if u and v lie in one ray, else None."""
    a, b = as_amplitudes(u), as_amplitudes(v)
    _check_dims(a, b)
    g = complex(np.vdot(a, b))
    if np.linalg.norm(b - g * a) >= tol or g == 0:
        return None
    return g / abs(g)


def projector(psi: StateLike) -> np.ndarray:
    """Rank-1 projector |psi><psi|."""
    a = as_amplitudes(psi)
    return np.outer(a, a.conj())


def is_hermitian(m, tol: float = 1e-10) -> bool:
    a = np.asarray(m)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and bool(np.max(np.abs(a - a.conj().T), initial=0.0) < tol)


def is_unitary(m, tol: float = 1e-10) -> bool:
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    eye = np.eye(a.shape[0])
    return bool(np.max(np.abs(a.conj().T @ a - eye)) < tol and np.max(np.abs(a @ a.conj().T - eye)) < tol)


def is_projector(m, tol: float = 1e-10) -> bool:
    a = np.asarray(m)
    return is_hermitian(a, tol) and bool(np.max(np.abs(a @ a - a)) < tol)


def transported_phases(states: np.ndarray) -> np.ndarray:
    """Unit phases that make every consecutive overlap of ``states`` real-positive.

    ``states`` has shape (n+1, dim). Returns phases ``p`` of shape (n+1,) with
    ``p[0] == 1`` such that ``<p_k psi_k | p_{k+1} psi_{k+1}> > 0``.
    """
    links = np.einsum("ki,ki->k", states[:-1].conj(), states[1:])
    if np.any(np.abs(links) == 0.0):
        raise InvalidInput("consecutive states are exactly orthogonal")
    unit = links / np.abs(links)
    # cumulative product of unit phases keeps each factor exact to rounding,
    # unlike summing angles, which drifts for long trajectories
    phases = np.empty(states.shape[0], dtype=np.complex128)
    phases[0] = 1.0
    phases[1:] = np.cumprod(unit.conj())
    phases /= np.abs(phases)
    return phases
