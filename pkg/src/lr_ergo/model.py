"""Interactions, their exponential decay norm, and Hamiltonian assembly."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .algebra import (
    PAULI,
    AlgebraError,
    LocalOperator,
    add,
    check_dim,
    embed,
    is_self_adjoint,
    operator_norm,
    parse_pauli,
    translate_op,
)
from .lattice import OutOfBoxError, Region, Torus, diam, dist

DEFAULT_LAMBDA = math.log(2.0)

# Allowed couplings per preset kind, with defaults.
PRESETS: dict[str, dict[str, float]] = {
    "ising": {"J": 1.0, "h_z": 0.0},
    "transverse_ising": {"J": 1.0, "h_x": 1.0},
    "tilted_ising": {"J": 1.0, "h_x": 1.05, "h_z": 0.5},
    "heisenberg": {"J": 1.0, "Delta": 1.0, "h_z": 0.0},
    "xy": {"J": 1.0, "h_z": 0.0},
    "custom": {},
}


class ModelError(ValueError):
    pass


@dataclass
class Interaction:
    """Finite family of self-adjoint terms keyed by their support."""

    terms: dict[Region, LocalOperator]
    torus: Torus
    decay_lambda: float = DEFAULT_LAMBDA
    name: str = "custom"
    site_dim: int = 2
    translation_covariant: bool = False
    couplings: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.decay_lambda <= 0:
            raise ModelError("decay lambda must be positive")
        for key, op in self.terms.items():
            if op.support != key:
                raise ModelError(f"term keyed by {key} has support {op.support}")
            if op.site_dim != self.site_dim:
                raise ModelError("term site dimension differs from the interaction's")
            if not is_self_adjoint(op, 1e-12):
                raise ModelError(f"term on {key} is not self-adjoint")
            for s in key:
                if not self.torus.in_box(s):
                    raise ModelError(f"term site {s} outside the torus box")

    def scaled(self, c: float) -> "Interaction":
        return Interaction(
            {k: op * c for k, op in self.terms.items()}, self.torus, self.decay_lambda,
            self.name, self.site_dim, self.translation_covariant,
            {k: v * c for k, v in self.couplings.items()},
        )


def _accumulate(terms: dict[Region, LocalOperator], op: LocalOperator) -> None:
    if not np.any(op.matrix):
        return
    key = op.support
    terms[key] = add(terms[key], op) if key in terms else op


def _generator_terms(kind: str, c: Mapping[str, float]) -> tuple[np.ndarray | None, np.ndarray | None]:
    """Two-site bond matrix and single-site field matrix for a preset."""
    X, Y, Z = PAULI["X"], PAULI["Y"], PAULI["Z"]
    J = c.get("J", 0.0)
    field_ = -c.get("h_x", 0.0) * X - c.get("h_z", 0.0) * Z
    if kind in ("ising", "transverse_ising", "tilted_ising"):
        bond = -J * np.kron(Z, Z)
    elif kind == "heisenberg":
        bond = J * (np.kron(X, X) + np.kron(Y, Y) + c.get("Delta", 1.0) * np.kron(Z, Z))
    elif kind == "xy":
        bond = J * (np.kron(X, X) + np.kron(Y, Y))
    else:
        raise ModelError(f"unknown preset kind {kind!r}")
    return bond, field_


def build_interaction(
    kind: str,
    torus: Torus,
    couplings: Mapping[str, float] | None = None,
    decay_lambda: float = DEFAULT_LAMBDA,
    terms: Sequence[str] | None = None,
    site_dim: int = 2,
) -> Interaction:
    """Expand a preset (or custom translation-covariant generator) on the torus.

    Custom ``terms`` are PauliString texts placed near the origin; every lattice
    translate that fits the box contributes.  Translates landing on the same
    region are summed, so a periodic axis of length 2 doubles the bond.
    """
    if kind not in PRESETS:
        raise ModelError(f"unknown model kind {kind!r}; valid: {sorted(PRESETS)}")
    c = dict(PRESETS[kind])
    for k, v in (couplings or {}).items():
        if kind != "custom" and k not in c:
            raise ModelError(f"coupling {k!r} not valid for {kind}; valid: {sorted(c)}")
        c[k] = float(v)

    generators: list[LocalOperator] = []
    if kind == "custom":
        if not terms:
            raise ModelError("custom model needs a 'terms' list")
        for text in terms:
            op = parse_pauli(text).to_operator(site_dim)
            if not is_self_adjoint(op):
                raise ModelError(f"custom term {text!r} is not self-adjoint")
            generators.append(op)
    else:
        if site_dim != 2:
            raise ModelError("presets are spin-1/2 (site_dim 2)")
        bond, field_ = _generator_terms(kind, c)
        origin = (0,) * torus.dim
        if np.any(field_):
            generators.append(LocalOperator(Region([origin]), field_, 2))
        for axis in range(torus.dim):
            if torus.extent[axis] < 2:
                continue
            nb = tuple(1 if i == axis else 0 for i in range(torus.dim))
            if np.any(bond):
                generators.append(LocalOperator.from_legs([origin, nb], bond, 2))

    out: dict[Region, LocalOperator] = {}
    for gen in generators:
        if gen.support.dim != torus.dim:
            raise ModelError(f"term dimension {gen.support.dim} differs from lattice dimension {torus.dim}")
        for x in torus.sites():
            try:
                _accumulate(out, translate_op(gen, x, torus))
            except OutOfBoxError:
                continue
            except AlgebraError:
                # wrapped onto itself (axis shorter than the term)
                continue
    return Interaction(out, torus, decay_lambda, kind, site_dim, True, c)


def zero_interaction(torus: Torus, decay_lambda: float = DEFAULT_LAMBDA, site_dim: int = 2) -> Interaction:
    return Interaction({}, torus, decay_lambda, "zero", site_dim, True)


def site_norm_sums(phi: Interaction, lam: float | None = None) -> dict:
    """Per-site sums  sum_{X containing n} ||Phi(X)|| |X| N^(2|X|) exp(lam diam X)."""
    lam = phi.decay_lambda if lam is None else lam
    N = phi.site_dim
    sums = {s: 0.0 for s in phi.torus.sites()}
    for X, op in phi.terms.items():
        w = operator_norm(op) * len(X) * N ** (2 * len(X)) * math.exp(lam * diam(X, phi.torus))
        for s in X:
            sums[s] += w
    return sums


def interaction_norm(phi: Interaction, lam: float | None = None) -> float:
    sums = site_norm_sums(phi, lam)
    return max(sums.values(), default=0.0)


def lr_velocity(phi: Interaction, lam: float | None = None) -> float:
    lam = phi.decay_lambda if lam is None else lam
    return 2.0 * interaction_norm(phi, lam) / lam


def hamiltonian(phi: Interaction, region: Region | None = None) -> LocalOperator:
    """Sum of all terms whose support lies inside ``region`` (whole torus by default)."""
    region = phi.torus.sites() if region is None else region
    check_dim(len(region), phi.site_dim)
    d = phi.site_dim ** len(region)
    H = np.zeros((d, d), dtype=complex)
    for X in sorted(phi.terms, key=lambda r: r.sites):
        if X.issubset(region):
            H += embed(phi.terms[X], region).matrix
    return LocalOperator(region, H, phi.site_dim)


def lr_bound_rhs(
    A: LocalOperator,
    B: LocalOperator,
    t: float,
    lam: float,
    v_lr: float,
    torus: Torus | None = None,
    distance: float | None = None,
) -> float:
    """Right-hand side  4||A|| ||B|| |A| |B| N^(2|A|) exp(-lam (dist - v_lr |t|))."""
    if len(A.support) == 0 or len(B.support) == 0:
        raise ModelError("bound needs non-empty supports")
    d = dist(A.support, B.support, torus) if distance is None else distance
    N = A.site_dim
    pref = 4.0 * operator_norm(A) * operator_norm(B) * len(A.support) * len(B.support) * N ** (2 * len(A.support))
    if pref == 0.0:
        return 0.0
    try:
        return pref * math.exp(-lam * (d - v_lr * abs(t)))
    except OverflowError:
        return math.inf
