"""States as density matrices on the finite volume."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import LocalOperator, compose, embed, translate_op
from .dynamics import EvolutionEngine, check_imaginary_guard, evolve, evolve_imaginary, shifted_evolution
from .lattice import LatticeError, Region


class StateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class State:
    rho: np.ndarray
    volume: Region
    site_dim: int = 2
    beta: float | None = None
    label: str = ""

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        d = self.site_dim ** len(self.volume)
        if rho.shape != (d, d):
            raise StateError(f"density matrix shape {rho.shape} does not match volume dimension {d}")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
            raise StateError("density matrix is not self-adjoint")
        if abs(np.trace(rho) - 1.0) > 1e-10:
            raise StateError(f"density matrix trace {np.trace(rho).real:.3g} != 1")
        if np.linalg.eigvalsh(rho)[0] < -1e-10:
            raise StateError("density matrix is not positive")
        object.__setattr__(self, "rho", rho)


def gibbs_state(eng: EvolutionEngine, beta: float) -> State:
    """exp(-beta H)/Z, the finite-volume KMS state."""
    if beta < 0:
        raise StateError("beta must be nonnegative")
    check_imaginary_guard(eng, beta)
    E = eng.eigenvalues
    w = np.exp(-beta * (E - E[0]))
    w /= w.sum()
    U = eng.eigenvectors
    rho = (U * w) @ U.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return State(rho, eng.volume, eng.site_dim, beta, f"gibbs(beta={beta:g})")


def tracial_state(volume: Region, site_dim: int = 2) -> State:
    d = site_dim ** len(volume)
    return State(np.eye(d, dtype=complex) / d, volume, site_dim, 0.0, "tracial")


def product_state(volume: Region, vectors: Sequence[Sequence[complex]], site_dim: int = 2) -> State:
    """Pure product state; one vector per site, or a single vector repeated on every site."""
    vecs = [np.asarray(v, dtype=complex) for v in vectors]
    if len(vecs) == 1:
        vecs = vecs * len(volume)
    if len(vecs) != len(volume):
        raise StateError(f"need {len(volume)} site vectors, got {len(vecs)}")
    psi = np.ones(1, dtype=complex)
    for v in vecs:
        if v.shape != (site_dim,):
            raise StateError(f"site vector must have length {site_dim}")
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise StateError("zero site vector")
        psi = np.kron(psi, v / nrm)
    return State(np.outer(psi, psi.conj()), volume, site_dim, None, "product")


def expect(s: State, A: LocalOperator) -> complex:
    a = embed(A, s.volume)
    return complex(np.einsum("ij,ji->", s.rho, a.matrix))


def connected_correlator(
    s: State, A: LocalOperator, B: LocalOperator, n: Sequence[int], t: float, eng: EvolutionEngine
) -> complex:
    """omega(iota_n tau_t(A) B) - omega(A) omega(B)."""
    X = shifted_evolution(eng, A, n, t)
    return expect(s, compose(X, B)) - expect(s, A) * expect(s, B)


def kms_residual(s: State, A: LocalOperator, B: LocalOperator, beta: float, eng: EvolutionEngine) -> float:
    """|omega(A tau_{i beta}(B)) - omega(B A)|."""
    lhs = expect(s, compose(A, evolve_imaginary(eng, B, beta)))
    rhs = expect(s, compose(B, A))
    return abs(lhs - rhs)


def invariance_check(
    s: State,
    eng: EvolutionEngine,
    ops: Sequence[LocalOperator],
    times: Sequence[float] = (),
    shifts: Sequence[Sequence[int]] = (),
) -> dict[str, float]:
    """Largest |omega(iota_n A) - omega(A)| and |omega(tau_t A) - omega(A)| over the samples."""
    space = 0.0
    time = 0.0
    if shifts and (eng.torus is None or not eng.torus.periodic):
        raise LatticeError("space invariance needs a periodic torus")
    for A in ops:
        base = expect(s, A)
        for n in shifts:
            space = max(space, abs(expect(s, translate_op(eng.embed(A), n, eng.torus)) - base))
        for t in times:
            time = max(time, abs(expect(s, evolve(eng, A, t)) - base))
    return {"space": space, "time": time}
