import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lr_ergo.algebra import PAULI, LocalOperator, pauli, translate_op
from lr_ergo.lattice import Region, Torus
from lr_ergo.model import (
    ModelError,
    build_interaction,
    hamiltonian,
    interaction_norm,
    lr_bound_rhs,
    lr_velocity,
    site_norm_sums,
    zero_interaction,
)

LN2 = math.log(2)


def test_zero_interaction():
    phi = zero_interaction(Torus((4,), "periodic"))
    assert interaction_norm(phi) == 0.0
    assert lr_velocity(phi) == 0.0
    assert not np.any(hamiltonian(phi).matrix)


@pytest.mark.parametrize("J, h, lam", [(1.0, 0.0, LN2), (0.7, 1.3, 0.4), (-2.0, 0.5, 1.0)])
def test_transverse_ising_norm_closed_form(J, h, lam):
    phi = build_interaction("transverse_ising", Torus((6,), "periodic"), {"J": J, "h_x": h}, lam)
    assert interaction_norm(phi) == pytest.approx(64 * abs(J) * math.exp(lam) + 4 * abs(h), rel=1e-13)
    # every site gives the same sum on a translation-covariant periodic chain
    sums = list(site_norm_sums(phi).values())
    assert max(sums) - min(sums) < 1e-12


def test_norm_and_velocity_reference_values():
    phi = build_interaction("transverse_ising", Torus((6,), "periodic"), {"J": 1.0, "h_x": 0.0}, LN2)
    assert interaction_norm(phi) == pytest.approx(128.0, rel=1e-14)
    assert lr_velocity(phi) == pytest.approx(2 * 128 / LN2, rel=1e-14)
    assert lr_velocity(phi) == pytest.approx(369.33, abs=5e-3)


def test_open_chain_edge_sites_have_smaller_sums():
    phi = build_interaction("transverse_ising", Torus((8,), "open"), {"J": 1.0, "h_x": 1.0})
    sums = site_norm_sums(phi)
    assert sums[(0,)] == pytest.approx(32 * 2 + 4)
    assert interaction_norm(phi) == pytest.approx(132.0)


def test_velocity_doubles_with_couplings():
    torus = Torus((5,), "periodic")
    phi = build_interaction("tilted_ising", torus)
    assert lr_velocity(phi.scaled(2.0)) == pytest.approx(2 * lr_velocity(phi), rel=1e-14)


def test_two_site_ising_hamiltonian():
    phi = build_interaction("ising", Torus((2,), "open"), {"J": 1.0})
    H = hamiltonian(phi)
    Z = PAULI["Z"]
    assert np.allclose(H.matrix, -np.kron(Z, Z))
    assert np.allclose(np.linalg.eigvalsh(H.matrix), [-1, -1, 1, 1])


def test_periodic_length_two_axis_doubles_bond():
    phi = build_interaction("ising", Torus((2,), "periodic"), {"J": 1.0})
    Z = PAULI["Z"]
    assert np.allclose(hamiltonian(phi).matrix, -2 * np.kron(Z, Z))


def test_heisenberg_and_xy_conventions():
    X, Y, Z = PAULI["X"], PAULI["Y"], PAULI["Z"]
    phi = build_interaction("heisenberg", Torus((2,), "open"), {"J": 0.5, "Delta": 2.0, "h_z": 0.3})
    expected = 0.5 * (np.kron(X, X) + np.kron(Y, Y) + 2.0 * np.kron(Z, Z)) - 0.3 * (np.kron(Z, np.eye(2)) + np.kron(np.eye(2), Z))
    assert np.allclose(hamiltonian(phi).matrix, expected)
    phi = build_interaction("xy", Torus((2,), "open"), {"J": 1.0})
    assert np.allclose(hamiltonian(phi).matrix, np.kron(X, X) + np.kron(Y, Y))


def test_custom_terms_match_preset():
    torus = Torus((4,), "periodic")
    custom = build_interaction("custom", torus, terms=["-1 * Z@(0) Z@(1)", "-0.8 * X@(0)"])
    preset = build_interaction("transverse_ising", torus, {"J": 1.0, "h_x": 0.8})
    assert np.allclose(hamiltonian(custom).matrix, hamiltonian(preset).matrix)


def test_two_dimensional_lattice_bonds():
    phi = build_interaction("ising", Torus((3, 3), "open"), {"J": 1.0})
    assert len(phi.terms) == 12


def test_model_errors():
    torus = Torus((3,), "open")
    with pytest.raises(ModelError):
        build_interaction("isingg", torus)
    with pytest.raises(ModelError):
        build_interaction("ising", torus, {"h_x": 1.0})
    with pytest.raises(ModelError):
        build_interaction("custom", torus, terms=["1j * X@(0)"])


def test_lr_bound_rhs_examples():
    A, B = pauli("Z", 0), pauli("Z", 5)
    assert lr_bound_rhs(A, B, 1.0, 1.0, 2.0) == pytest.approx(16 * math.exp(-3), rel=1e-14)
    assert lr_bound_rhs(A, B, 1.0, 1.0, 2.0) == pytest.approx(0.796593, abs=1e-6)
    assert lr_bound_rhs(A * 0.0, B, 1.0, 1.0, 2.0) == 0.0
    # at dist = v |t| the exponential is 1
    assert lr_bound_rhs(A, B, 2.5, 1.0, 2.0) == pytest.approx(16.0)


@given(st.integers(1, 8), st.floats(0.0, 3.0), st.floats(0.1, 2.0))
def test_lr_bound_rhs_decreases_with_distance(d, t, lam):
    A = pauli("X", 0)
    near = lr_bound_rhs(A, pauli("X", d), t, lam, 3.0)
    far = lr_bound_rhs(A, pauli("X", d + 1), t, lam, 3.0)
    assert 0 <= far < near


@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0), st.sampled_from(["transverse_ising", "tilted_ising", "heisenberg", "xy"]))
def test_norm_homogeneous_and_monotone_in_lambda(lam1, lam2, kind):
    torus = Torus((4,), "periodic")
    phi = build_interaction(kind, torus, decay_lambda=lam1)
    assert interaction_norm(phi.scaled(-1.7)) == pytest.approx(1.7 * interaction_norm(phi), rel=1e-13)
    lo, hi = sorted((lam1, lam2))
    assert interaction_norm(phi, lo) <= interaction_norm(phi, hi) + 1e-12


@pytest.mark.parametrize("kind", ["transverse_ising", "tilted_ising", "heisenberg", "xy"])
@pytest.mark.parametrize("extent", [(5,), (3, 3)])
def test_periodic_hamiltonian_translation_invariant(kind, extent):
    torus = Torus(extent, "periodic")
    H = hamiltonian(build_interaction(kind, torus))
    for axis in range(len(extent)):
        n = tuple(1 if i == axis else 0 for i in range(len(extent)))
        moved = translate_op(H, n, torus)
        assert np.max(np.abs(moved.matrix - H.matrix)) <= 1e-10


def test_hamiltonian_self_adjoint():
    H = hamiltonian(build_interaction("tilted_ising", Torus((5,), "open")))
    assert np.array_equal(H.matrix, H.matrix.conj().T)
