"""Heisenberg evolution on a finite volume from one cached eigendecomposition.

With H = U diag(E) U*, the evolved operator in the eigenbasis is
(U* A U)_{jk} exp(i (E_j - E_k) t); imaginary time replaces i t by -beta.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import AlgebraError, LocalOperator, check_dim, embed, translate_op
from .lattice import Region, Torus

IMAG_TIME_GUARD = 300.0


class NumericalGuardError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class EvolutionEngine:
    hamiltonian: LocalOperator
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    torus: Torus | None = None

    @property
    def volume(self) -> Region:
        return self.hamiltonian.support

    @property
    def site_dim(self) -> int:
        return self.hamiltonian.site_dim

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @property
    def spread(self) -> float:
        E = self.eigenvalues
        return float(E[-1] - E[0]) if len(E) else 0.0

    def embed(self, A: LocalOperator) -> LocalOperator:
        return embed(A, self.volume)

    def to_eigenbasis(self, m: np.ndarray) -> np.ndarray:
        U = self.eigenvectors
        return U.conj().T @ m @ U

    def from_eigenbasis(self, m: np.ndarray) -> np.ndarray:
        U = self.eigenvectors
        return U @ m @ U.conj().T

    def phases(self, t: float) -> np.ndarray:
        return np.exp(1j * self.eigenvalues * t)

    def frequency_matrix(self) -> np.ndarray:
        E = self.eigenvalues
        return E[:, None] - E[None, :]


def build_engine(H: LocalOperator, torus: Torus | None = None) -> EvolutionEngine:
    check_dim(len(H.support), H.site_dim)
    m = H.matrix
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-10 * scale:
        raise AlgebraError("Hamiltonian is not self-adjoint")
    E, U = np.linalg.eigh(0.5 * (m + m.conj().T))
    return EvolutionEngine(H, E, U, torus)


def _evolve_eig(eng: EvolutionEngine, a_eig: np.ndarray, t: float) -> np.ndarray:
    p = eng.phases(t)
    return eng.from_eigenbasis(p[:, None] * a_eig * p.conj()[None, :])


def evolve(eng: EvolutionEngine, A: LocalOperator, t: float) -> LocalOperator:
    """tau_t(A) = exp(itH) A exp(-itH), supported on the whole volume."""
    a = eng.embed(A)
    if t == 0:
        return a
    out = _evolve_eig(eng, eng.to_eigenbasis(a.matrix), t)
    return LocalOperator(eng.volume, out, eng.site_dim)


def evolve_grid(eng: EvolutionEngine, A: LocalOperator, times: Sequence[float]) -> list[LocalOperator]:
    if len(times) == 0:
        return []
    a = eng.embed(A)
    a_eig = eng.to_eigenbasis(a.matrix)
    return [
        a if t == 0 else LocalOperator(eng.volume, _evolve_eig(eng, a_eig, t), eng.site_dim)
        for t in times
    ]


def check_imaginary_guard(eng: EvolutionEngine, beta: float) -> None:
    if abs(beta) * eng.spread > IMAG_TIME_GUARD:
        raise NumericalGuardError(
            f"|beta| * spectral spread = {abs(beta) * eng.spread:.3g} exceeds {IMAG_TIME_GUARD}"
        )


def evolve_imaginary(eng: EvolutionEngine, B: LocalOperator, beta: float) -> LocalOperator:
    """tau_{i beta}(B) = exp(-beta H) B exp(beta H); not norm preserving."""
    b = eng.embed(B)
    if beta == 0:
        return b
    check_imaginary_guard(eng, beta)
    factor = np.exp(-beta * eng.frequency_matrix())
    out = eng.from_eigenbasis(factor * eng.to_eigenbasis(b.matrix))
    return LocalOperator(eng.volume, out, eng.site_dim)


def shifted_evolution(eng: EvolutionEngine, A: LocalOperator, n: Sequence[int], t: float) -> LocalOperator:
    """iota_n tau_t(A) on the engine's volume.

    On a periodic torus the evolved operator is translated (a leg permutation of
    the full volume).  Without wrap-around the translation cannot act on a
    full-volume operator, so the homogeneity iota_n tau_t = tau_t iota_n is used
    and A is translated before evolving; this raises when A leaves the box.
    """
    if not any(n):
        return evolve(eng, A, t)
    if eng.torus is not None and eng.torus.periodic:
        return translate_op(evolve(eng, A, t), n, eng.torus)
    return evolve(eng, translate_op(A, n, eng.torus), t)
