import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from lr_ergo.algebra import PAULI, AlgebraError, LocalOperator, adjoint, operator_norm, pauli, random_operator
from lr_ergo.dynamics import (
    NumericalGuardError,
    build_engine,
    evolve,
    evolve_grid,
    evolve_imaginary,
)
from lr_ergo.lattice import Region

from conftest import chain_engine, random_hamiltonian

X, Y, Z = PAULI["X"], PAULI["Y"], PAULI["Z"]


def single_site(matrix):
    return build_engine(LocalOperator(Region([0]), np.asarray(matrix, dtype=complex)))


def test_engine_reconstruction_and_unitarity(rng):
    eng = random_hamiltonian(rng, 3)
    U, E = eng.eigenvectors, eng.eigenvalues
    H = eng.hamiltonian.matrix
    assert np.linalg.norm(U @ np.diag(E) @ U.conj().T - H, 2) <= 1e-9 * np.linalg.norm(H, 2)
    assert np.allclose(U.conj().T @ U, np.eye(len(E)), atol=1e-10)


def test_engine_examples():
    eng = single_site(np.zeros((2, 2)))
    assert np.array_equal(eng.eigenvalues, [0, 0])
    assert np.allclose(np.abs(eng.eigenvectors), np.eye(2)) or np.allclose(np.abs(eng.eigenvectors), np.eye(2)[::-1])
    eng = single_site(Z)
    assert np.allclose(eng.eigenvalues, [-1, 1])
    again = single_site(Z)
    assert np.array_equal(eng.eigenvalues, again.eigenvalues)


def test_engine_rejects_non_self_adjoint():
    with pytest.raises(AlgebraError):
        single_site([[0, 1], [0, 0]])


def test_evolve_single_site_closed_form():
    eng = single_site(Z)
    for t in (0.1, 0.7, np.pi / 4):
        out = evolve(eng, pauli("X", 0), t).matrix
        assert np.allclose(out, np.cos(2 * t) * X - np.sin(2 * t) * Y, atol=1e-13)
    assert np.allclose(evolve(eng, pauli("X", 0), np.pi / 4).matrix, -Y, atol=1e-13)


def test_evolve_matches_matrix_exponential(rng):
    eng = random_hamiltonian(rng, 3)
    A = random_operator(rng, Region([1]))
    H = eng.hamiltonian.matrix
    for t in (0.3, 2.1, -1.4):
        U = expm(1j * t * H)
        oracle = U @ eng.embed(A).matrix @ U.conj().T
        assert np.allclose(evolve(eng, A, t).matrix, oracle, atol=1e-11)


def test_conserved_quantity_is_static():
    phi, eng = chain_engine("ising", 4, J=1.0, h_z=0.4)
    A = pauli("Z", 2)
    for t in (0.5, 3.0):
        assert np.allclose(evolve(eng, A, t).matrix, eng.embed(A).matrix, atol=1e-12)


def test_evolve_zero_time_is_exact_embedding(rng):
    eng = random_hamiltonian(rng, 2)
    A = random_operator(rng, Region([0]))
    assert np.array_equal(evolve(eng, A, 0.0).matrix, eng.embed(A).matrix)


def test_evolve_grid(rng):
    eng = random_hamiltonian(rng, 2)
    A = random_operator(rng, Region([1]))
    assert evolve_grid(eng, A, []) == []
    assert np.array_equal(evolve_grid(eng, A, [0.0])[0].matrix, eng.embed(A).matrix)
    times = sorted(rng.uniform(0, 5, 5))
    for t, op in zip(times, evolve_grid(eng, A, times)):
        assert np.allclose(op.matrix, evolve(eng, A, t).matrix, atol=1e-12, rtol=0)


def test_evolve_imaginary_single_site_oracle():
    eng = single_site(Z)
    for beta in (0.0, 0.3, 1.2):
        oracle = expm(-beta * Z) @ X @ expm(beta * Z)
        assert np.allclose(evolve_imaginary(eng, pauli("X", 0), beta).matrix, oracle, atol=1e-12)
    # explicit form: cosh(2b) X - sinh(2b) iY
    b = 0.3
    assert np.allclose(
        evolve_imaginary(eng, pauli("X", 0), b).matrix, np.cosh(2 * b) * X - np.sinh(2 * b) * 1j * Y, atol=1e-12
    )


def test_evolve_imaginary_commuting_is_static():
    eng = single_site(Z)
    assert np.allclose(evolve_imaginary(eng, pauli("Z", 0), 2.0).matrix, Z)


def test_imaginary_guard():
    eng = single_site(Z)
    evolve_imaginary(eng, pauli("X", 0), 149.0)
    with pytest.raises(NumericalGuardError):
        evolve_imaginary(eng, pauli("X", 0), 151.0)


@given(st.integers(0, 2**31), st.floats(0.0, 10.0), st.floats(-5.0, 5.0))
def test_evolution_automorphism_properties(seed, t, s):
    rng = np.random.default_rng(seed)
    eng = random_hamiltonian(rng, 2)
    A = random_operator(rng, Region([0]))
    B = random_operator(rng, Region([1]))
    At = evolve(eng, A, t)
    assert operator_norm(At) == pytest.approx(operator_norm(A), abs=1e-9)
    assert np.allclose(evolve(eng, A @ B, t).matrix, (At @ evolve(eng, B, t)).matrix, atol=1e-9)
    assert np.allclose(evolve(eng, adjoint(A), t).matrix, adjoint(At).matrix, atol=1e-12)
    assert np.allclose(evolve(eng, At, s).matrix, evolve(eng, A, s + t).matrix, atol=1e-9)
