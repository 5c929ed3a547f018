"""Dense finite-volume realisation of the quasi-local algebra.

Tensor legs of a :class:`LocalOperator` follow the lexicographic order of its
support, first site most significant (``kron`` order).
"""
from __future__ import annotations

import ast
import math
import os
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .lattice import Region, Site, Torus, as_site, translate as translate_region

DEFAULT_DIM_CAP = 2**14

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class AlgebraError(ValueError):
    pass


class SiteDimensionMismatch(AlgebraError):
    pass


class SupportError(AlgebraError):
    pass


class DimensionCapError(AlgebraError):
    def __init__(self, dim: int, cap: int):
        super().__init__(f"Hilbert dimension {dim} exceeds cap {cap} (set LR_ERGO_DIM_CAP to override)")
        self.dim = dim
        self.cap = cap


def dim_cap() -> int:
    return int(os.environ.get("LR_ERGO_DIM_CAP", DEFAULT_DIM_CAP))


def check_dim(n_sites: int, site_dim: int) -> int:
    dim = site_dim**n_sites
    cap = dim_cap()
    if dim > cap:
        raise DimensionCapError(dim, cap)
    return dim


def _permute_legs(matrix: np.ndarray, perm: Sequence[int], N: int) -> np.ndarray:
    """Reorder tensor legs so that new leg i is old leg perm[i]."""
    n = len(perm)
    if list(perm) == list(range(n)):
        return matrix
    t = matrix.reshape((N,) * (2 * n))
    axes = list(perm) + [n + p for p in perm]
    d = N**n
    return np.ascontiguousarray(t.transpose(axes)).reshape(d, d)


@dataclass(frozen=True, eq=False)
class LocalOperator:
    support: Region
    matrix: np.ndarray
    site_dim: int = 2

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.site_dim ** len(self.support)
        if m.shape != (d, d):
            raise AlgebraError(
                f"matrix shape {m.shape} inconsistent with {len(self.support)} sites of dimension {self.site_dim}"
            )
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_legs(cls, sites: Sequence[Site], matrix: np.ndarray, site_dim: int = 2) -> "LocalOperator":
        """Build an operator whose legs are given in an arbitrary site order."""
        sites = [as_site(s) for s in sites]
        if len(set(sites)) != len(sites):
            raise AlgebraError("repeated site in leg list")
        region = Region(sites)
        perm = [sites.index(s) for s in region]
        return cls(region, _permute_legs(np.asarray(matrix, dtype=complex), perm, site_dim), site_dim)

    @classmethod
    def identity(cls, support: Region = Region(), site_dim: int = 2) -> "LocalOperator":
        return cls(support, np.eye(site_dim ** len(support), dtype=complex), site_dim)

    @classmethod
    def zeros(cls, support: Region = Region(), site_dim: int = 2) -> "LocalOperator":
        d = site_dim ** len(support)
        return cls(support, np.zeros((d, d), dtype=complex), site_dim)

    @classmethod
    def single_site(cls, site, matrix, site_dim: int | None = None) -> "LocalOperator":
        matrix = np.asarray(matrix, dtype=complex)
        return cls(Region([as_site(site)]), matrix, site_dim or matrix.shape[0])

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __add__(self, other: "LocalOperator") -> "LocalOperator":
        return add(self, other)

    def __sub__(self, other: "LocalOperator") -> "LocalOperator":
        return add(self, scale(other, -1.0))

    def __matmul__(self, other: "LocalOperator") -> "LocalOperator":
        return compose(self, other)

    def __mul__(self, c: complex) -> "LocalOperator":
        return scale(self, c)

    __rmul__ = __mul__

    def __neg__(self) -> "LocalOperator":
        return scale(self, -1.0)

    def __repr__(self) -> str:
        return f"LocalOperator(support={self.support!r}, dim={self.dim})"


def _check_dims(*ops: LocalOperator) -> int:
    dims = {op.site_dim for op in ops}
    if len(dims) != 1:
        raise SiteDimensionMismatch(f"site dimensions differ: {sorted(dims)}")
    return dims.pop()


def embed(A: LocalOperator, region: Region) -> LocalOperator:
    """Tensor A with the identity on ``region`` minus its support."""
    if A.support == region:
        return A
    if not A.support.issubset(region):
        raise SupportError(f"support {A.support} not contained in {region}")
    N = A.site_dim
    rest = region.difference(A.support)
    big = np.kron(A.matrix, np.eye(N ** len(rest), dtype=complex))
    current = list(A.support.sites) + list(rest.sites)
    perm = [current.index(s) for s in region]
    return LocalOperator(region, _permute_legs(big, perm, N), N)


def _common(A: LocalOperator, B: LocalOperator) -> tuple[LocalOperator, LocalOperator]:
    _check_dims(A, B)
    if A.support == B.support:
        return A, B
    region = A.support.union(B.support)
    return embed(A, region), embed(B, region)


def compose(A: LocalOperator, B: LocalOperator) -> LocalOperator:
    a, b = _common(A, B)
    return LocalOperator(a.support, a.matrix @ b.matrix, a.site_dim)


def add(A: LocalOperator, B: LocalOperator) -> LocalOperator:
    a, b = _common(A, B)
    return LocalOperator(a.support, a.matrix + b.matrix, a.site_dim)


def scale(A: LocalOperator, c: complex) -> LocalOperator:
    return LocalOperator(A.support, c * A.matrix, A.site_dim)


def adjoint(A: LocalOperator) -> LocalOperator:
    return LocalOperator(A.support, A.matrix.conj().T, A.site_dim)


def commutator(A: LocalOperator, B: LocalOperator) -> LocalOperator:
    """AB - BA on the union of supports; structurally zero for disjoint supports."""
    _check_dims(A, B)
    if A.support.isdisjoint(B.support):
        return LocalOperator.zeros(A.support.union(B.support), A.site_dim)
    a, b = _common(A, B)
    return LocalOperator(a.support, a.matrix @ b.matrix - b.matrix @ a.matrix, a.site_dim)


def operator_norm(A: LocalOperator | np.ndarray) -> float:
    m = A.matrix if isinstance(A, LocalOperator) else np.asarray(A)
    if m.size == 0:
        return 0.0
    if m.shape == (1, 1):
        return float(abs(m[0, 0]))
    return float(np.linalg.norm(m, 2))


def is_self_adjoint(A: LocalOperator, atol: float = 1e-12) -> bool:
    m = A.matrix
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= atol * max(1.0, np.max(np.abs(m), initial=0.0)))


def translate_op(A: LocalOperator, n: Sequence[int], torus: Torus | None = None) -> LocalOperator:
    """Shift the support by n; legs are re-sorted when the torus wraps them around."""
    n = as_site(n)
    if not any(n):
        return A
    legs = [translate_region(Region([s]), n, torus).sites[0] for s in A.support]
    return LocalOperator.from_legs(legs, A.matrix, A.site_dim)


def partial_trace(A: LocalOperator, keep: Region, normalized: bool = True) -> LocalOperator:
    """Trace out support(A) minus ``keep``; divides by the traced dimension when normalized."""
    keep = keep.intersection(A.support)
    if keep == A.support:
        return A
    N = A.site_dim
    traced = A.support.difference(keep)
    current = list(keep.sites) + list(traced.sites)
    perm = [A.support.index(s) for s in current]
    m = _permute_legs(A.matrix, perm, N)
    dk, dt = N ** len(keep), N ** len(traced)
    reduced = np.einsum("atbt->ab", m.reshape(dk, dt, dk, dt))
    if normalized:
        reduced = reduced / dt
    return LocalOperator(keep, reduced, N)


def localize(A: LocalOperator, region: Region) -> LocalOperator:
    """Tracial conditional expectation of A onto the algebra of ``region``.

    The result lives on support(A) (joined with ``region`` if needed) so that it can
    be compared with A directly.
    """
    if not region.issubset(A.support):
        A = embed(A, A.support.union(region))
    if region.issubset(A.support) and A.support.issubset(region):
        return A
    return embed(partial_trace(A, region), A.support)


def pauli(letter: str, site, site_dim: int = 2) -> LocalOperator:
    if site_dim != 2:
        raise AlgebraError("Pauli letters need site_dim 2; use an explicit matrix")
    return LocalOperator.single_site(site, PAULI[letter.upper()], 2)


@dataclass
class PauliString:
    """Product of single-site factors times a coefficient.

    Factors are Pauli letters (``I X Y Z``, only for site dimension 2) or explicit
    matrices.  Text form: ``"0.5 * X@(0) Z@(1)"`` or ``"M@(0)=[[0,1],[1,0]]"``.
    """

    factors: dict[Site, str | np.ndarray] = field(default_factory=dict)
    coefficient: complex = 1.0

    def to_operator(self, site_dim: int = 2) -> LocalOperator:
        if not self.factors:
            return LocalOperator(Region(), np.array([[self.coefficient]], dtype=complex), site_dim)
        sites = sorted(self.factors)
        mats = []
        for s in sites:
            f = self.factors[s]
            if isinstance(f, str):
                if site_dim != 2:
                    raise AlgebraError(f"letter {f!r} requires site_dim 2")
                mats.append(PAULI[f])
            else:
                m = np.asarray(f, dtype=complex)
                if m.shape != (site_dim, site_dim):
                    raise AlgebraError(f"explicit factor at {s} has shape {m.shape}, expected {(site_dim, site_dim)}")
                mats.append(m)
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return LocalOperator(Region(sites), self.coefficient * out, site_dim)

    def __str__(self) -> str:
        parts = []
        for s in sorted(self.factors):
            f = self.factors[s]
            site = "(" + ",".join(str(c) for c in s) + ")"
            if isinstance(f, str):
                parts.append(f"{f}@{site}")
            else:
                rows = ",".join("[" + ",".join(_fmt_complex(x) for x in row) + "]" for row in np.asarray(f))
                parts.append(f"M@{site}=[{rows}]")
        return f"{_fmt_complex(self.coefficient)} * " + " ".join(parts)


def _fmt_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    return repr(z)


_FACTOR = re.compile(r"\s*([A-Za-z])@\(([^)]*)\)")


def _literal_matrix(text: str, pos: int) -> tuple[np.ndarray, int]:
    depth = 0
    for i in range(pos, len(text)):
        if text[i] == "[":
            depth += 1
        elif text[i] == "]":
            depth -= 1
            if depth == 0:
                value = ast.literal_eval(text[pos : i + 1])
                return np.asarray(value, dtype=complex), i + 1
    raise AlgebraError(f"unbalanced matrix literal in {text!r}")


def parse_pauli(text: str) -> PauliString:
    coef: complex = 1.0
    body = text.strip()
    if "*" in body and "@" not in body.split("*", 1)[0]:
        head, body = body.split("*", 1)
        try:
            coef = complex(ast.literal_eval(head.strip()))
        except (ValueError, SyntaxError) as exc:
            raise AlgebraError(f"bad coefficient {head.strip()!r}") from exc
    factors: dict[Site, str | np.ndarray] = {}
    pos = 0
    while pos < len(body):
        if body[pos].isspace():
            pos += 1
            continue
        m = _FACTOR.match(body, pos)
        if not m:
            raise AlgebraError(f"cannot parse factor at {body[pos:]!r}")
        letter, coords = m.group(1).upper(), m.group(2)
        try:
            site = tuple(int(c) for c in coords.split(",") if c.strip())
        except ValueError as exc:
            raise AlgebraError(f"bad site {coords!r}") from exc
        if not site:
            raise AlgebraError("empty site tuple")
        pos = m.end()
        if letter == "M":
            if pos >= len(body) or body[pos] != "=":
                raise AlgebraError("explicit factor needs '=[[...]]'")
            mat, pos = _literal_matrix(body, pos + 1)
            factor: str | np.ndarray = mat
        elif letter in PAULI:
            factor = letter
        else:
            raise AlgebraError(f"unknown factor letter {letter!r}")
        if site in factors:
            raise AlgebraError(f"site {site} appears twice")
        factors[site] = factor
    return PauliString(factors, coef)


def operator_from_spec(spec: str | Sequence[str], site_dim: int = 2) -> LocalOperator:
    """A PauliString, or a list of them summed, as a LocalOperator."""
    if isinstance(spec, str):
        return parse_pauli(spec).to_operator(site_dim)
    if not spec:
        raise AlgebraError("empty operator sum")
    ops = [parse_pauli(s).to_operator(site_dim) for s in spec]
    out = ops[0]
    for op in ops[1:]:
        out = add(out, op)
    return out


def random_operator(rng: np.random.Generator, support: Region, site_dim: int = 2, hermitian: bool = False) -> LocalOperator:
    d = site_dim ** len(support)
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    if hermitian:
        m = 0.5 * (m + m.conj().T)
    return LocalOperator(support, m / math.sqrt(d), site_dim)


def operators_close(A: LocalOperator, B: LocalOperator, atol: float) -> bool:
    a, b = _common(A, B)
    return operator_norm(a.matrix - b.matrix) <= atol

