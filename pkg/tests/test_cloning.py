import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phase_lab.cloning import (
    CloningSpec,
    ConstraintKind,
    Verdict,
    clonability_check,
    cp_history_check,
    gram_scan_feasible,
    history_cloning_check,
    multi_time_cloning_check,
    random_cloning_spec,
)
from phase_lab.errors import InvalidInput, NotCyclic, OrthogonalStates
from phase_lab.evolution import HamiltonianSpec, TimeGrid, Trajectory, evolve, evolve_parallel
from phase_lab.phases import bargmann_invariant, excess_geometric_phase
from phase_lab.sampling import random_state, random_trajectory

from conftest import KET0, KET1, PLUS, PLUS_I, precession

seeds = st.integers(0, 2**32 - 1)


def test_orthogonal_pair_feasible():
    report = clonability_check(CloningSpec((KET0, KET1)))
    assert report.verdict is Verdict.FEASIBLE and report.violated_constraints == ()


def test_ray_pair_infeasible():
    report = clonability_check(CloningSpec((PLUS, np.exp(1j * math.pi / 3) * PLUS)))
    assert report.verdict is Verdict.INFEASIBLE
    (v,) = report.violated_constraints
    assert v.kind is ConstraintKind.RAY_PHASE_MISMATCH
    assert abs(v.residual - math.pi / 3) < 1e-12


def test_nonorthogonal_pair_infeasible():
    report = clonability_check(CloningSpec((KET0, PLUS)))
    (v,) = report.violated_constraints
    assert v.kind is ConstraintKind.NON_ORTHOGONAL_OVERLAP
    assert abs(v.residual - (1 - 1 / math.sqrt(2))) < 1e-12


def test_identical_states_feasible():
    assert clonability_check(CloningSpec((PLUS, PLUS))).feasible


def test_phase_freedom_and_ancilla_lift_ray_mismatch():
    states = (PLUS, np.exp(1j * math.pi / 3) * PLUS, np.exp(-2.0j) * PLUS)
    assert clonability_check(CloningSpec(states, phase_freedom=True)).feasible
    report = clonability_check(CloningSpec(states, allow_ancilla=True))
    assert report.feasible
    g = CloningSpec(states).gram()
    a = report.required_ancilla_overlaps
    assert abs(a[0, 1] - np.exp(-1j * np.angle(g[0, 1]))) < 1e-12
    # g = g^2 <A_0|A_1>
    assert abs(g[0, 1] - g[0, 1] ** 2 * a[0, 1]) < 1e-12


def test_ancilla_cannot_fix_modulus():
    report = clonability_check(CloningSpec((KET0, PLUS), allow_ancilla=True))
    assert report.kinds() == {ConstraintKind.NON_ORTHOGONAL_OVERLAP}
    d = report.as_dict()
    assert d["required_ancilla_overlaps"][0][1] is None


def test_report_serialization():
    d = clonability_check(CloningSpec((PLUS, 1j * PLUS))).as_dict()
    assert d["verdict"] == "Infeasible"
    assert d["violated_constraints"][0]["kind"] == "RayPhaseMismatch"
    assert d["violated_constraints"][0]["indices"] == [0, 1]


def test_history_examples(oracle):
    const = Trajectory.from_states([PLUS] * 10)
    assert history_cloning_check(const).feasible

    h, psi0, grid = precession(math.pi / 2, 100_000)
    report = history_cloning_check(evolve(h, psi0, grid))
    (v,) = report.violated_constraints
    assert v.kind is ConstraintKind.RAY_PHASE_MISMATCH
    assert abs(v.residual - abs(oracle["cyclic_geometric_equator"])) < 1e-9

    energy = 1.0
    eig = evolve(HamiltonianSpec.static(np.diag([energy, -3.0])), KET0, TimeGrid.uniform(0, 2 * math.pi, 6000))
    assert history_cloning_check(eig).feasible

    with pytest.raises(NotCyclic):
        history_cloning_check(evolve(h, psi0, TimeGrid.uniform(0, 1, 100)))


def test_history_transported_note():
    h, psi0, grid = precession(math.pi / 3, 5000)
    report = history_cloning_check(evolve_parallel(h, psi0, grid))
    assert report.details["parallel_transported"]
    assert abs(report.details["total_phase"] - report.details["geometric_phase"]) < 1e-9


def test_cp_history_examples():
    assert cp_history_check(0.0, 1.0).feasible
    assert cp_history_check(math.pi / 2, np.exp(-1j * math.pi / 2)).feasible
    report = cp_history_check(math.pi / 2, 0.9 * np.exp(-1j * math.pi / 2))
    (v,) = report.violated_constraints
    assert v.kind is ConstraintKind.ANCILLA_GRAM_INVALID
    assert abs(v.residual - 0.1) < 1e-12
    with pytest.raises(InvalidInput):
        cp_history_check(0.3, 1.5)


def test_multi_time_examples(oracle):
    psi = random_state(np.random.default_rng(3), 2)
    collinear = Trajectory.from_states([psi, 1j * psi, -psi])
    assert multi_time_cloning_check(collinear, (0, 1, 2)).feasible

    snaps = Trajectory.from_states([KET0, PLUS, PLUS_I])
    report = multi_time_cloning_check(snaps, (0, 1, 2))
    (v,) = report.violated_constraints
    assert v.kind is ConstraintKind.BARGMANN_OBSTRUCTION
    assert abs(v.residual - oracle["bargmann_arg_0_plus_plusi"]) < 1e-12

    s8 = np.array([math.cos(math.pi / 8), math.sin(math.pi / 8)])
    real = Trajectory.from_states([KET0, s8, PLUS])
    report = multi_time_cloning_check(real, (0, 1, 2))
    assert report.feasible and report.details["bargmann_arg"] == oracle["real_triple_bargmann_arg"]

    chain = Trajectory.from_states([KET0, PLUS, KET1])
    with pytest.raises(OrthogonalStates):
        multi_time_cloning_check(chain, (0, 1, 2))
    with pytest.raises(InvalidInput):
        multi_time_cloning_check(snaps, (0, 0, 2))


def test_oracle_matches_examples():
    assert gram_scan_feasible(CloningSpec((KET0, KET1)))
    assert not gram_scan_feasible(CloningSpec((KET0, PLUS)))
    assert not gram_scan_feasible(CloningSpec((PLUS, 1j * PLUS)))
    assert gram_scan_feasible(CloningSpec((PLUS, 1j * PLUS), phase_freedom=True))


@given(st.integers(1, 359))
def test_ray_mismatch_on_alpha_grid(k):
    alpha = 2 * math.pi * k / 360
    assert clonability_check(CloningSpec((PLUS_I, np.exp(1j * alpha) * PLUS_I))).verdict is Verdict.INFEASIBLE


@given(seeds, st.integers(1, 4), st.integers(1, 3), st.integers(0, 2))
def test_audit_agrees_with_scan_oracle(seed, dim, m, flags):
    spec = random_cloning_spec(np.random.default_rng(seed), dim, m, flags == 2, flags == 1)
    assert clonability_check(spec).feasible == gram_scan_feasible(spec)


@given(seeds, st.integers(1, 4), st.integers(1, 4), st.floats(-math.pi, math.pi))
def test_verdict_invariant_under_global_phase(seed, dim, m, alpha):
    rng = np.random.default_rng(seed)
    spec = random_cloning_spec(rng, dim, m, bool(rng.integers(2)), bool(rng.integers(2)))
    shifted = CloningSpec(tuple(np.exp(1j * alpha) * s for s in spec.inputs), spec.allow_ancilla, spec.phase_freedom)
    assert clonability_check(spec).kinds() == clonability_check(shifted).kinds()


@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_freedom_only_binds_modulus(seed, dim, m):
    spec = random_cloning_spec(np.random.default_rng(seed), dim, m, phase_freedom=True)
    assert clonability_check(spec).kinds() <= {ConstraintKind.NON_ORTHOGONAL_OVERLAP}


@given(seeds, st.integers(2, 6), st.integers(3, 80), st.data())
def test_multi_time_matches_bargmann_and_excess(seed, dim, steps, data):
    traj = random_trajectory(np.random.default_rng(seed), dim, steps)
    i = data.draw(st.integers(0, steps - 2))
    j = data.draw(st.integers(i + 1, steps - 1))
    k = data.draw(st.integers(j + 1, steps))
    report = multi_time_cloning_check(traj, (i, j, k))
    b = bargmann_invariant([traj.states[i], traj.states[j], traj.states[k]])
    assert report.feasible == (abs(b.argument) <= 1e-8)
    lhs, rhs = excess_geometric_phase(traj.segment(i, k), j - i)
    assert abs(report.details["excess_phase"]["lhs"] - lhs) < 1e-10
    assert abs(report.details["bargmann_arg"] - b.argument) < 1e-10


@given(seeds, st.floats(0.05, 3.0))
def test_cyclic_with_nonzero_phase_is_infeasible(seed, theta):
    rng = np.random.default_rng(seed)
    omega = rng.uniform(0.5, 2.0)
    h, psi0, grid = precession(theta, 3000, omega=omega)
    traj = evolve(h, psi0, grid)
    report = history_cloning_check(traj)
    phi = report.details["total_phase"]
    if abs(phi) > 1e-6:
        assert report.verdict is Verdict.INFEASIBLE
