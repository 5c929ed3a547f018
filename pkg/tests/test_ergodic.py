import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from lr_ergo.algebra import LocalOperator, adjoint, operator_norm, pauli, random_operator
from lr_ergo.dynamics import build_engine
from lr_ergo.ergodic import (
    ErgodicError,
    HorizonError,
    QuadratureSpec,
    RaySpec,
    SweepMode,
    convergence_sweep,
    euler_scale_average,
    mean_square,
    moment,
    multi_ray_average,
    oscillatory_ray_average,
    ray_average,
    ray_average_operator,
    ray_average_operator_result,
    spacelike_probe,
    structure_factor,
)
from lr_ergo.lattice import RationalDirection, Region, Torus
from lr_ergo.model import build_interaction, hamiltonian
from lr_ergo.states import expect, gibbs_state, tracial_state

from conftest import chain_engine, random_hamiltonian

Q1 = RationalDirection((1,))


def random_instance(seed, L=3, kind="tilted_ising"):
    rng = np.random.default_rng(seed)
    torus = Torus((L,), "periodic")
    couplings = {"J": rng.uniform(0.5, 1.5), "h_x": rng.uniform(0.3, 1.2), "h_z": rng.uniform(-0.5, 0.5)}
    eng = build_engine(hamiltonian(build_interaction(kind, torus, couplings)), torus)
    s = gibbs_state(eng, rng.uniform(0.0, 1.0))
    A = random_operator(rng, Region([0]))
    B = random_operator(rng, Region([0, 1]))
    return rng, eng, s, A, B


def two_site_z_field():
    H = LocalOperator(Region([0, 1]), np.kron(np.diag([1.0, -1.0]), np.eye(2)).astype(complex))
    return build_engine(H, Torus((2,), "open"))


def test_closed_form_two_site_example():
    eng = two_site_z_field()
    s = tracial_state(eng.volume)
    r = ray_average(s, pauli("X", 0), pauli("X", 0), RaySpec(Q1, 0.0), math.pi, eng)
    assert abs(r.value) <= 1e-10
    # and the integrand really is cos(2t): average on [0, pi/4] is 2/pi
    r = ray_average(s, pauli("X", 0), pauli("X", 0), RaySpec(Q1, 0.0), math.pi / 4, eng)
    assert r.value == pytest.approx(2 / math.pi, abs=1e-12)


def test_identity_and_conserved_cases():
    _, eng = chain_engine("ising", 4, J=1.0, h_z=0.3)
    s = gibbs_state(eng, 0.4)
    B = pauli("Z", 1)
    ident = LocalOperator.identity(Region([0]))
    r = ray_average(s, ident, B, RaySpec(Q1, 0.7), 5.0, eng)
    assert abs(r.value - expect(s, B)) <= 1e-12
    Z0 = pauli("Z", 0)
    r = ray_average(s, Z0, B, RaySpec(Q1, 0.0), 3.0, eng)
    assert abs(r.value - expect(s, Z0 @ B)) <= 1e-12


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("v", [0.0, 0.45, 1.3])
def test_ray_average_matches_brute_force(seed, v):
    _, eng, s, A, B = random_instance(seed)
    r = ray_average(s, A, B, RaySpec(Q1, v), 4.0, eng)
    ref = oracles.ray_average(eng, s.rho, A, B, v, (1,), 4.0)
    assert abs(r.value - ref) <= 1e-10
    assert r.connected == pytest.approx(r.value - expect(s, A) * expect(s, B), abs=1e-15)


def test_ray_average_two_dimensional_direction():
    torus = Torus((2, 2), "periodic")
    eng = build_engine(hamiltonian(build_interaction("tilted_ising", torus)), torus)
    s = gibbs_state(eng, 0.3)
    rng = np.random.default_rng(3)
    A, B = random_operator(rng, Region([(0, 0)])), random_operator(rng, Region([(1, 0)]))
    q = RationalDirection((1, 2))
    r = ray_average(s, A, B, RaySpec(q, 0.9), 3.0, eng)
    ref = oracles.ray_average(eng, s.rho, A, B, 0.9, (1, 2), 3.0)
    assert abs(r.value - ref) <= 1e-10


def test_open_boundary_ray_uses_translated_operator():
    rng = np.random.default_rng(5)
    eng = random_hamiltonian(rng, 3, "open")
    s = tracial_state(eng.volume)
    A, B = random_operator(rng, Region([0])), random_operator(rng, Region([1]))
    r = ray_average(s, A, B, RaySpec(Q1, 0.6), 3.0, eng)
    ref = oracles.ray_average(eng, s.rho, A, B, 0.6, (1,), 3.0)
    assert abs(r.value - ref) <= 1e-10
    with pytest.raises(HorizonError):
        ray_average(s, A, B, RaySpec(Q1, 1.0), 3.5, eng)


def test_uniform_scheme_agrees():
    _, eng, s, A, B = random_instance(11)
    ray = RaySpec(Q1, 0.7)
    exact = ray_average(s, A, B, ray, 4.0, eng).value
    uni = ray_average(s, A, B, ray, 4.0, eng, QuadratureSpec("uniform", dt=0.05, per_piece_order=6))
    # uniform panels straddle jumps; their error is first order in dt
    assert abs(uni.value - exact) <= 0.1
    with pytest.raises(ErgodicError):
        QuadratureSpec("uniform", dt=1.0).check_horizon(4.0)
    with pytest.raises(ErgodicError):
        ray_average(s, A, B, ray, 0.0, eng)


def test_oscillatory_constant_integrands():
    _, eng = chain_engine("tilted_ising", 3)
    s = gibbs_state(eng, 0.5)
    ident = LocalOperator.identity(Region([0]))
    full_period = RaySpec(Q1, 0.0, (0.0,), -math.pi)
    r = oscillatory_ray_average(s, ident, ident, full_period, 2.0, eng)
    assert abs(r.unsubtracted) <= 1e-12
    assert abs(r.value) <= 1e-12
    # generic theta: closed form (e^{i theta T} - 1)/(i theta T)
    theta, T = 0.37, 5.0
    r = oscillatory_ray_average(s, ident, ident, RaySpec(Q1, 0.0, (0.0,), -theta), T, eng)
    assert r.unsubtracted == pytest.approx((np.exp(1j * theta * T) - 1) / (1j * theta * T), abs=1e-12)
    assert abs(r.unsubtracted) <= 2 / (abs(theta) * T) + r.estimated_quadrature_error
    # A = identity: the connected integrand vanishes identically
    B = pauli("X", 1)
    r = oscillatory_ray_average(s, ident, B, RaySpec(Q1, 0.4, (1.0,), 0.3), 3.0, eng)
    assert abs(r.value) <= 1e-12


def test_oscillatory_reduces_to_plain_at_zero_phase():
    _, eng, s, A, B = random_instance(2)
    v = 0.6
    osc = oscillatory_ray_average(s, A, B, RaySpec(Q1, v, (1.0,), v), 4.0, eng)
    plain = ray_average(s, A, B, RaySpec(Q1, v), 4.0, eng)
    assert abs(osc.value - (plain.value - expect(s, A) * expect(s, B))) <= 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_oscillatory_matches_brute_force(seed):
    _, eng, s, A, B = random_instance(seed + 20)
    ray = RaySpec(Q1, 0.8, (0.9,), 1.7)
    r = oscillatory_ray_average(s, A, B, ray, 3.0, eng)
    c = expect(s, A) * expect(s, B)
    ref = oracles.ray_average(eng, s.rho, A, B, 0.8, (1,), 3.0, theta=ray.theta, subtract=c)
    assert abs(r.value - ref) <= 1e-10


def test_operator_average_examples():
    _, eng = chain_engine("ising", 3, J=1.0, h_z=0.2)
    ident = LocalOperator.identity(Region([0]))
    out = ray_average_operator(ident, RaySpec(Q1, 0.5), 3.0, eng)
    assert np.allclose(out.matrix, np.eye(8), atol=1e-13)
    Z = pauli("Z", 1)
    out = ray_average_operator(Z, RaySpec(Q1, 0.0), 3.0, eng)
    assert np.allclose(out.matrix, eng.embed(Z).matrix, atol=1e-13)


@pytest.mark.parametrize("seed", range(3))
def test_operator_average_consistent_with_scalar(seed):
    _, eng, s, A, B = random_instance(seed, L=2)
    ray = RaySpec(Q1, 0.7)
    op, err = ray_average_operator_result(A, ray, 3.0, eng)
    scalar = ray_average(s, A, B, ray, 3.0, eng).value
    assert abs(expect(s, op @ B) - scalar) <= 1e-9
    assert operator_norm(op) <= operator_norm(A) + err + 1e-12


def test_moment_examples():
    _, eng, s, A, B = random_instance(7)
    ray = RaySpec(Q1, 0.5)
    ident = LocalOperator.identity(Region([0]))
    assert abs(moment(s, ident, ray, 3.0, 4, eng).value - 1) <= 1e-12
    m1 = moment(s, A, ray, 3.0, 1, eng).value
    assert abs(m1 - ray_average(s, A, ident, ray, 3.0, eng).value) <= 1e-10
    with pytest.raises(ErgodicError):
        moment(s, A, ray, 3.0, 0, eng)


def test_mean_square_examples():
    _, eng, s, A, B = random_instance(8)
    ray = RaySpec(Q1, 0.5)
    ident = LocalOperator.identity(Region([0]))
    assert abs(mean_square(s, ident, ident, ray, 2.0, 3.0, eng).value - 1) <= 1e-12
    ms = mean_square(s, ident, B, ray, 2.0, 3.0, eng).value
    assert abs(ms - ray_average(s, B, ident, ray, 3.0, eng).value) <= 1e-10


def test_mean_square_swap_symmetry():
    _, eng = chain_engine("tilted_ising", 2)
    s = tracial_state(eng.volume)
    ray = RaySpec(Q1, 0.4)
    A, B = pauli("Z", 0), pauli("X", 1)
    forward = mean_square(s, A, B, ray, 2.0, 3.0, eng).value
    swapped = mean_square(s, adjoint(B), adjoint(A), ray, 3.0, 2.0, eng).value
    assert abs(forward - np.conj(swapped)) <= 1e-9


def test_multi_point_examples():
    _, eng, s, A, B = random_instance(9)
    ray = RaySpec(Q1, 0.3)
    ident = LocalOperator.identity(Region([0]))
    C = pauli("Y", 2)
    r = multi_ray_average(s, [A, B, C], [ident, ident], ray, [2.0, 3.0], eng)
    assert abs(r.value - expect(s, A @ B @ C)) <= 1e-12
    r = multi_ray_average(s, [ident, ident], [A], ray, [2.5], eng)
    assert abs(r.value - moment(s, A, ray, 2.5, 1, eng).value) <= 1e-10
    r = multi_ray_average(s, [ident] * 3, [A, B], ray, [2.0, 3.0], eng)
    assert abs(r.value - mean_square(s, A, B, ray, 2.0, 3.0, eng).value) <= 1e-9
    with pytest.raises(ErgodicError):
        multi_ray_average(s, [A], [B], ray, [1.0], eng)


def test_sweep_single_cell_and_identity():
    _, eng, s, A, B = random_instance(4)
    row = convergence_sweep(s, A, B, Q1, [0.5], [3.0], SweepMode(), eng)[0]
    direct = ray_average(s, A, B, RaySpec(Q1, 0.5), 3.0, eng)
    assert row.value == direct.value
    ident = LocalOperator.identity(Region([0]))
    rows = convergence_sweep(s, A, ident, Q1, [0.0, 0.5], [1.0, 2.0], SweepMode(), eng)
    for r in rows:
        unsub = ray_average(s, A, ident, RaySpec(Q1, r.v), r.T, eng).value
        assert r.abs_deviation == pytest.approx(abs(unsub - expect(s, A)), abs=1e-14)
    assert [(r.v, r.T) for r in rows] == [(0.0, 1.0), (0.0, 2.0), (0.5, 1.0), (0.5, 2.0)]


@pytest.mark.parametrize(
    "mode", [SweepMode(), SweepMode("oscillatory", (0.5,), 0.2), SweepMode("mean_square"), SweepMode("moment", n=2)]
)
def test_sweep_independent_of_workers(mode):
    _, eng, s, A, B = random_instance(6)
    one = convergence_sweep(s, A, B, Q1, [0.0, 0.6], [1.5, 2.5], mode, eng, workers=1)
    four = convergence_sweep(s, A, B, Q1, [0.0, 0.6], [1.5, 2.5], mode, eng, workers=4)
    assert one == four


def test_sweep_references():
    _, eng, s, A, B = random_instance(10)
    for mode, ref in [
        (SweepMode(), expect(s, A) * expect(s, B)),
        (SweepMode("oscillatory", (0.5,), 0.2), 0.0),
        (SweepMode("mean_square"), expect(s, A) * expect(s, B)),
        (SweepMode("moment", n=3), expect(s, A) ** 3),
    ]:
        row = convergence_sweep(s, A, B, Q1, [0.2], [1.0], mode, eng)[0]
        assert row.reference == pytest.approx(complex(ref), abs=1e-15)
    with pytest.raises(ErgodicError):
        convergence_sweep(s, A, B, Q1, [], [1.0], SweepMode(), eng)


def test_spacelike_probe_examples():
    _, eng = chain_engine("tilted_ising", 8)
    s = tracial_state(eng.volume)
    B = pauli("Z", 0)
    ident = LocalOperator.identity(Region([0]))
    pr = spacelike_probe(s, ident, B, (1,), 5.0, 5, eng)
    assert np.allclose(pr.means, expect(s, B), atol=1e-15)
    A = pauli("X", 0)
    pr = spacelike_probe(s, A, B, (1,), 5.0, 1, eng)
    assert pr.means[0] == pytest.approx(expect(s, A @ B), abs=1e-15)
    pr = spacelike_probe(s, pauli("Z", 0), B, (1,), 1e6, 3, eng)
    assert abs(pr.connected_means[0] - 1.0) <= 1e-12
    assert abs(pr.terms[1]) <= 1e-6
    with pytest.raises(HorizonError):
        spacelike_probe(s, A, B, (1,), 5.0, 6, eng)


def test_spacelike_probe_against_direct_terms():
    _, eng = chain_engine("tilted_ising", 8)
    s = gibbs_state(eng, 0.4)
    A, B = pauli("Z", 0), pauli("X", 0)
    k, f, v = (0.8,), 1.1, 2.0
    pr = spacelike_probe(s, A, B, (1,), v, 4, eng, k, f)
    b = eng.embed(B).matrix
    terms = [np.trace(s.rho @ oracles.shifted_evolved(eng, A, (m,), m / v) @ b) for m in range(4)]
    assert np.allclose(pr.terms, terms, atol=1e-12)
    phases = np.exp(-1j * (0.8 - f / v) * np.arange(4))
    assert np.allclose(pr.means, np.cumsum(phases * terms) / np.arange(1, 5), atol=1e-12)


def test_structure_factor_examples():
    _, eng = chain_engine("tilted_ising", 4)
    s = tracial_state(eng.volume)
    ident = LocalOperator.identity(Region([0]))
    assert abs(structure_factor(s, ident, pauli("Z", 1), (0.3,), 0.7, eng)) <= 1e-14
    Z = pauli("Z", 0)
    assert structure_factor(s, Z, Z, (0.0,), 0.0, eng) == pytest.approx(1.0, abs=1e-15)
    for t in (0.0, 0.9):
        plus = structure_factor(s, Z, Z, (0.7,), t, eng)
        minus = structure_factor(s, Z, Z, (-0.7,), t, eng)
        assert abs(minus - np.conj(plus)) <= 1e-10


@pytest.mark.parametrize("seed", range(3))
def test_structure_factor_matches_literal_sum(seed):
    rng = np.random.default_rng(seed)
    _, eng = chain_engine("tilted_ising", 5)
    s = gibbs_state(eng, 0.6)
    A, B = random_operator(rng, Region([0])), random_operator(rng, Region([1]))
    got = structure_factor(s, A, B, (1.3,), 0.8, eng)
    ref = oracles.structure_factor(eng, s.rho, A, B, np.array([1.3]), 0.8)
    assert abs(got - ref) <= 1e-11


def test_euler_average_examples():
    _, eng = chain_engine("xy", 4, J=1.0, h_z=0.2)
    s = gibbs_state(eng, 0.5)
    ident = LocalOperator.identity(Region([0]))
    Z = pauli("Z", 0)
    assert abs(euler_scale_average(s, ident, Z, (0.4,), 3.0, eng).value) <= 1e-14
    assert abs(euler_scale_average(s, Z, ident, (0.4,), 3.0, eng).value) <= 1e-14
    r = euler_scale_average(s, Z, Z, (0.0,), 3.0, eng, t_min=0.5)
    assert r.t_min == 0.5
    ref = oracles.cquad(lambda t: structure_factor(s, Z, Z, (0.0,), t, eng), 0.5, 3.0) / 2.5
    assert abs(r.value - ref) <= 1e-8
    with pytest.raises(ErgodicError):
        euler_scale_average(s, Z, Z, (0.0,), 1.0, eng, t_min=1.0)


def test_euler_average_nonzero_kappa_against_literal_sum():
    _, eng = chain_engine("tilted_ising", 4)
    s = gibbs_state(eng, 0.3)
    A = pauli("Z", 0)
    r = euler_scale_average(s, A, A, (0.6,), 2.5, eng, t_min=1.0)
    ref = oracles.cquad(lambda t: oracles.structure_factor(eng, s.rho, A, A, np.array([0.6 / t]), t), 1.0, 2.5) / 1.5
    assert abs(r.value - ref) <= 1e-8


@given(st.integers(0, 2**31), st.floats(0.0, 2.0), st.floats(0.5, 6.0))
def test_ray_average_bounded_by_norms(seed, v, T):
    _, eng, s, A, B = random_instance(seed % 1000)
    r = ray_average(s, A, B, RaySpec(Q1, v), T, eng)
    assert r.estimated_quadrature_error >= 0
    assert abs(r.value) <= operator_norm(A) * operator_norm(B) + 1e-9


@given(st.integers(0, 2**31), st.floats(0.0, 2.0), st.floats(0.5, 6.0), st.integers(2, 8))
def test_refinement_within_reported_error(seed, v, T, order):
    _, eng, s, A, B = random_instance(seed % 1000)
    ray = RaySpec(Q1, v, (0.4,), 0.9)
    base = oscillatory_ray_average(s, A, B, ray, T, eng, QuadratureSpec(per_piece_order=order))
    finer = oscillatory_ray_average(s, A, B, ray, T, eng, QuadratureSpec(per_piece_order=2 * order))
    assert abs(finer.value - base.value) < base.estimated_quadrature_error


def test_uniform_refinement_within_reported_error():
    _, eng, s, A, B = random_instance(12)
    ray = RaySpec(Q1, 0.0)
    base = ray_average(s, A, B, ray, 4.0, eng, QuadratureSpec("uniform", dt=0.4, per_piece_order=3))
    finer = ray_average(s, A, B, ray, 4.0, eng, QuadratureSpec("uniform", dt=0.2, per_piece_order=3))
    assert abs(finer.value - base.value) < base.estimated_quadrature_error
