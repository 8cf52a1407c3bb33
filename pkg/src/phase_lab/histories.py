"""Consistent-histories machinery: weight operators and decoherence functionals.

A history is a time-ordered list of projector events. Its weight operator is
``C_P = Pi_n(t_n) ... Pi_1(t_1)`` with Heisenberg projectors
``Pi(t) = U(t)^dagger Pi U(t)``, where ``U(t)`` propagates from the first
event time of the history (or an explicit ``t0``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, InvalidInput, OrthogonalStates
from .evolution import DEFAULT_MAX_STEP, HamiltonianSpec, propagator
from .phases import ORTH_TOL
from .state_space import StateLike, as_square_matrix, principal_arg, projector, state_array

PROJECTOR_TOL = 1e-10
DENSITY_TOL = 1e-10
CONSISTENCY_TOL = 1e-8


def _validated_projector(p, name: str) -> np.ndarray:
    a = as_square_matrix(p, name)
    if np.max(np.abs(a - a.conj().T)) >= PROJECTOR_TOL or np.max(np.abs(a @ a - a)) >= PROJECTOR_TOL:
        raise InvalidInput(f"{name} is not a Hermitian idempotent projector")
    return a


@dataclass(frozen=True, eq=False)
class HistoryProposition:
    events: Tuple[Tuple[float, np.ndarray], ...]
    label: str = ""

    def __post_init__(self):
        if not self.events:
            raise InvalidInput("a history needs at least one event")
        events = []
        for i, (t, p) in enumerate(self.events):
            a = _validated_projector(p, f"projector of event {i}")
            a.setflags(write=False)
            events.append((float(t), a))
        times = [t for t, _ in events]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidInput("history event times must be strictly increasing")
        if len({p.shape for _, p in events}) > 1:
            raise DimensionMismatch("all projectors of a history must share one dimension")
        object.__setattr__(self, "events", tuple(events))

    @classmethod
    def fine_grained(cls, states: Sequence[StateLike], times: Optional[Sequence[float]] = None, label: str = ""):
        """History whose events are the rank-1 projectors of ``states``."""
        arr = state_array(states)
        if times is None:
            times = range(arr.shape[0])
        return cls(tuple((t, projector(s)) for t, s in zip(times, arr)), label)

    @property
    def times(self) -> Tuple[float, ...]:
        return tuple(t for t, _ in self.events)

    @property
    def dim(self) -> int:
        return self.events[0][1].shape[0]


@dataclass(frozen=True, eq=False)
class HistoryFamily:
    members: Tuple[HistoryProposition, ...]
    completeness_flag: bool = True

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise InvalidInput("a family needs at least one history")
        grid = members[0].times
        if any(m.times != grid for m in members):
            raise InvalidInput("all histories of a family must share one time grid")
        object.__setattr__(self, "members", members)
        if self.completeness_flag:
            _check_complete(members)

    @classmethod
    def from_decompositions(cls, decompositions: Sequence[Tuple[float, Sequence[np.ndarray]]]) -> "HistoryFamily":
        """Every combination of one projector per time from complete decompositions."""
        times = [t for t, _ in decompositions]
        choices = [list(enumerate(ps)) for _, ps in decompositions]
        members = []
        for combo in itertools.product(*choices):
            label = "".join(str(i) for i, _ in combo) if len(combo) else ""
            members.append(HistoryProposition(tuple((t, p) for t, (_, p) in zip(times, combo)), label))
        return cls(tuple(members), True)

    @property
    def dim(self) -> int:
        return self.members[0].dim


def _check_complete(members: Sequence[HistoryProposition]) -> None:
    dim = members[0].dim
    n_times = len(members[0].events)
    eye = np.eye(dim)
    per_time = []
    index_of = [[None] * n_times for _ in members]
    for k in range(n_times):
        distinct: List[np.ndarray] = []
        for mi, m in enumerate(members):
            p = m.events[k][1]
            for di, q in enumerate(distinct):
                if np.max(np.abs(p - q)) < PROJECTOR_TOL:
                    index_of[mi][k] = di
                    break
            else:
                index_of[mi][k] = len(distinct)
                distinct.append(p)
        if np.max(np.abs(sum(distinct) - eye)) >= PROJECTOR_TOL:
            raise InvalidInput(f"projectors at event {k} do not sum to the identity")
        for a, b in itertools.combinations(distinct, 2):
            if np.max(np.abs(a @ b)) >= PROJECTOR_TOL:
                raise InvalidInput(f"projectors at event {k} are not mutually orthogonal")
        per_time.append(len(distinct))
    combos = {tuple(row) for row in index_of}
    if len(combos) != len(members) or len(members) != int(np.prod(per_time)):
        raise InvalidInput("family does not contain every combination of per-time projectors exactly once")


def _check_dims(p: HistoryProposition, h: HamiltonianSpec) -> None:
    if p.dim != h.dim:
        raise DimensionMismatch(f"history dimension {p.dim} does not match Hamiltonian dimension {h.dim}")


def weight_operator(
    p: HistoryProposition, h: HamiltonianSpec, t0: Optional[float] = None, max_step: float = DEFAULT_MAX_STEP
) -> np.ndarray:
    """Time-ordered product of Heisenberg-picture projectors."""
    _check_dims(p, h)
    start = p.times[0] if t0 is None else float(t0)
    if p.times[0] < start:
        raise InvalidInput("reference time t0 must not come after the first event")
    c = np.eye(p.dim, dtype=np.complex128)
    u = np.eye(p.dim, dtype=np.complex128)
    t_prev = start
    for t, proj in p.events:
        u = propagator(h, t_prev, t, max_step) @ u
        t_prev = t
        c = (u.conj().T @ proj @ u) @ c
    return c


def _validated_density(rho0, dim: int) -> np.ndarray:
    rho = as_square_matrix(rho0, "rho0")
    if rho.shape[0] != dim:
        raise DimensionMismatch(f"rho0 is {rho.shape[0]}-dimensional, expected {dim}")
    if np.max(np.abs(rho - rho.conj().T)) >= DENSITY_TOL:
        raise InvalidInput("rho0 is not Hermitian")
    if abs(np.trace(rho) - 1.0) >= DENSITY_TOL:
        raise InvalidInput("rho0 does not have unit trace")
    if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -DENSITY_TOL:
        raise InvalidInput("rho0 is not positive semidefinite")
    return rho


def _functional(cp: np.ndarray, rho: np.ndarray, cq: np.ndarray) -> complex:
    return complex(np.trace(cp @ rho @ cq.conj().T))


@dataclass(frozen=True)
class DecoherenceValue:
    value: complex
    pair: Tuple[str, str]

    def as_dict(self) -> dict:
        return {"value": [self.value.real, self.value.imag], "pair": list(self.pair)}


def decoherence_functional(
    p: HistoryProposition, q: HistoryProposition, rho0, h: HamiltonianSpec, max_step: float = DEFAULT_MAX_STEP
) -> DecoherenceValue:
    """d(P, Q) = Tr(C_P rho0 C_Q^dagger)."""
    _check_dims(q, h)
    rho = _validated_density(rho0, p.dim)
    t0 = min(p.times[0], q.times[0])
    value = _functional(weight_operator(p, h, t0, max_step), rho, weight_operator(q, h, t0, max_step))
    return DecoherenceValue(value, (p.label, q.label))


def decoherence_matrix(family: HistoryFamily, rho0, h: HamiltonianSpec, max_step: float = DEFAULT_MAX_STEP):
    """All weight operators of ``family`` and the matrix D[i, j] = d(P_i, P_j)."""
    rho = _validated_density(rho0, family.dim)
    t0 = min(m.times[0] for m in family.members)
    weights = np.array([weight_operator(m, h, t0, max_step) for m in family.members])
    d = np.einsum("aij,jk,bik->ab", weights, rho, weights.conj())
    return weights, rho, d


@dataclass(frozen=True)
class AxiomReport:
    hermiticity: float
    positivity_min: float
    positivity_imag: float
    additivity: float
    normalization: float

    def as_dict(self) -> dict:
        return {
            "hermiticity": self.hermiticity,
            "positivity_min": self.positivity_min,
            "positivity_imag": self.positivity_imag,
            "additivity": self.additivity,
            "normalization": self.normalization,
        }


def _orthogonal(p: HistoryProposition, q: HistoryProposition) -> bool:
    return any(np.max(np.abs(a @ b)) < PROJECTOR_TOL for (_, a), (_, b) in zip(p.events, q.events))


def check_axioms(family: HistoryFamily, rho0, h: HamiltonianSpec, max_step: float = DEFAULT_MAX_STEP) -> AxiomReport:
    """Residuals of hermiticity, positivity, additivity and normalization."""
    weights, rho, d = decoherence_matrix(family, rho0, h, max_step)
    diag = np.diag(d)
    additivity = 0.0
    members = family.members
    for a, b in itertools.combinations(range(len(members)), 2):
        if not _orthogonal(members[a], members[b]):
            continue
        joined = weights[a] + weights[b]
        lhs = np.einsum("ij,jk,bik->b", joined, rho, weights.conj())
        additivity = max(additivity, float(np.max(np.abs(lhs - d[a] - d[b]))))
    if family.completeness_flag:
        total = weights.sum(axis=0)
        normalization = abs(_functional(total, rho, total) - 1.0)
    else:
        normalization = float("nan")
    return AxiomReport(
        hermiticity=float(np.max(np.abs(d - d.conj().T))),
        positivity_min=float(np.min(diag.real)),
        positivity_imag=float(np.max(np.abs(diag.imag))),
        additivity=additivity,
        normalization=normalization,
    )


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    max_offdiag: float
    probabilities: np.ndarray
    labels: Tuple[str, ...] = field(default=())

    def as_dict(self) -> dict:
        return {
            "consistent": self.consistent,
            "max_offdiag": self.max_offdiag,
            "probabilities": [float(x) for x in self.probabilities],
            "labels": list(self.labels),
        }


def consistency_check(
    family: HistoryFamily, rho0, h: HamiltonianSpec, tol: float = CONSISTENCY_TOL, max_step: float = DEFAULT_MAX_STEP
) -> ConsistencyReport:
    if not family.completeness_flag:
        raise InvalidInput("consistency check needs a complete family")
    _, _, d = decoherence_matrix(family, rho0, h, max_step)
    off = d - np.diag(np.diag(d))
    worst = float(np.max(np.abs(off))) if d.shape[0] > 1 else 0.0
    probs = np.real(np.diag(d)).copy()
    probs.setflags(write=False)
    return ConsistencyReport(worst < tol, worst, probs, tuple(m.label for m in family.members))


def fine_grained_trace(states: Sequence[StateLike]) -> complex:
    """Tr C_P of a zero-Hamiltonian fine-grained chain:
    <psi_0|psi_n><psi_n|psi_n-1>...<psi_1|psi_0>."""
    arr = state_array(states)
    if arr.shape[0] < 2:
        raise InvalidInput("a fine-grained chain needs at least two states")
    # links <psi_k+1|psi_k> closing with <psi_0|psi_n>
    links = np.einsum("ki,ki->k", np.roll(arr, -1, axis=0).conj(), arr)
    return complex(np.prod(links))


def history_geometric_phase(states: Sequence[StateLike], orth_tol: float = ORTH_TOL) -> float:
    """Arg Tr C_P of a fine-grained chain."""
    arr = state_array(states)
    links = np.einsum("ki,ki->k", np.roll(arr, -1, axis=0).conj(), arr)
    if np.any(np.abs(links) <= orth_tol):
        raise OrthogonalStates("chain contains an orthogonal link; Tr C_P carries no phase")
    return principal_arg(complex(np.prod(links)))
