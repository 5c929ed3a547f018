"""Space-time ray averages of correlation functions and their relatives.

Every average is a finite-T quadrature of t -> iota_{floor(v t)} tau_t(A).  The
translation index is piecewise constant; the default ``breakpoint_exact`` scheme
splits [0, T] where it jumps and runs composite Gauss-Legendre on each piece,
with panel widths set by the largest frequency present (spectral spread of H
plus the oscillatory phase rate).

Each functional is evaluated with the configured order p and with 2p.  The
2p value is reported; |F(p) - F(2p)| plus a roundoff floor is the error
estimate.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad_vec

from .algebra import LocalOperator, adjoint, operator_norm, translate_op
from .dynamics import EvolutionEngine, evolve, evolve_grid, shifted_evolution
from .lattice import (
    OutOfBoxError,
    RationalDirection,
    Site,
    l1_norm,
    ray_breakpoints,
    ray_point,
)
from .states import State, expect

EPS = np.finfo(float).eps
ROUNDOFF_FACTOR = 1e3
_NODE_CHUNK_BYTES = 64 * 2**20


class ErgodicError(ValueError):
    pass


class HorizonError(ErgodicError):
    pass


@dataclass(frozen=True)
class RaySpec:
    q: RationalDirection
    v: float
    k: tuple[float, ...] | None = None
    f: float | None = None

    def __post_init__(self):
        if (self.k is None) != (self.f is None):
            raise ErgodicError("wavevector k and frequency f must be given together")
        if self.k is not None:
            object.__setattr__(self, "k", tuple(float(x) for x in self.k))
            if len(self.k) != self.q.dim:
                raise ErgodicError(f"k has {len(self.k)} components, lattice has {self.q.dim}")

    @property
    def velocity(self) -> np.ndarray:
        return self.v * np.array(self.q.unit_float)

    @property
    def theta(self) -> float:
        """Phase rate k . v - f (zero without an oscillatory pair)."""
        if self.k is None:
            return 0.0
        return float(np.dot(self.k, self.velocity) - self.f)


@dataclass(frozen=True)
class QuadratureSpec:
    scheme: str = "breakpoint_exact"
    dt: float | None = None
    per_piece_order: int = 8
    panel_factor: float = 4.0

    def __post_init__(self):
        if self.scheme not in ("breakpoint_exact", "uniform"):
            raise ErgodicError(f"unknown quadrature scheme {self.scheme!r}")
        if self.per_piece_order < 1:
            raise ErgodicError("per_piece_order must be >= 1")
        if self.scheme == "uniform" and (self.dt is None or self.dt <= 0):
            raise ErgodicError("uniform scheme needs a positive dt")
        if self.panel_factor <= 0:
            raise ErgodicError("panel_factor must be positive")

    def check_horizon(self, T: float) -> None:
        if T <= 0:
            raise ErgodicError("horizon T must be positive")
        if self.scheme == "uniform" and self.dt > T / 10 + 1e-15:
            raise ErgodicError(f"uniform dt={self.dt} exceeds T/10={T / 10}")


@dataclass
class AverageResult:
    value: complex
    T: float
    estimated_quadrature_error: float
    ray: RaySpec | None = None
    unsubtracted: complex | None = None
    connected: complex | None = None

    def __complex__(self) -> complex:
        return complex(self.value)


@dataclass
class _Group:
    shift: Site
    times: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=64)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _composite(a: float, b: float, panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    times = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return times, weights


def ray_nodes(ray: RaySpec, T: float, quad: QuadratureSpec, omega_max: float, order: int) -> list[_Group]:
    """Quadrature nodes on [0, T] grouped by their (constant) lattice shift."""
    quad.check_horizon(T)
    groups: dict[Site, list] = {}

    def push(shift, t, w):
        g = groups.setdefault(shift, [[], []])
        g[0].append(t)
        g[1].append(w)

    if quad.scheme == "breakpoint_exact":
        edges = [0.0, *ray_breakpoints(ray.v, ray.q, T), float(T)]
        for a, b in zip(edges[:-1], edges[1:]):
            shift = ray_point(ray.v, ray.q, 0.5 * (a + b))
            panels = max(1, math.ceil(omega_max * (b - a) / quad.panel_factor))
            t, w = _composite(a, b, panels, order)
            push(shift, t, w)
    else:
        panels = math.ceil(T / quad.dt - 1e-12)
        edges = np.minimum(np.arange(panels + 1) * quad.dt, T)
        x, wq = _gauss_legendre(order)
        for a, b in zip(edges[:-1], edges[1:]):
            h = 0.5 * (b - a)
            for xi, wi in zip(x, wq):
                t = 0.5 * (a + b) + h * xi
                push(ray_point(ray.v, ray.q, t), np.array([t]), np.array([h * wi]))
    return [_Group(s, np.concatenate(tw[0]), np.concatenate(tw[1])) for s, tw in groups.items()]


def _omega_max(eng: EvolutionEngine, ray: RaySpec) -> float:
    return eng.spread + abs(ray.theta)


def _shift_pair(eng: EvolutionEngine, a_full: LocalOperator, A: LocalOperator, right: np.ndarray, shift: Site):
    """Eigenbasis matrices (X, Y) with omega(iota_n tau_t(A) R) = sum_jk X_jk Y_kj e^{i(E_j-E_k)t}.

    ``right`` is the full-volume matrix B rho (the state folded in).
    """
    if not any(shift):
        return eng.to_eigenbasis(a_full.matrix), eng.to_eigenbasis(right)
    if eng.torus is not None and eng.torus.periodic:
        moved = translate_op(LocalOperator(eng.volume, right, eng.site_dim), tuple(-c for c in shift), eng.torus)
        return eng.to_eigenbasis(a_full.matrix), eng.to_eigenbasis(moved.matrix)
    try:
        moved_a = eng.embed(translate_op(A, shift, eng.torus))
    except OutOfBoxError as exc:
        raise HorizonError(f"ray shift {shift} leaves the open box: {exc}") from exc
    return eng.to_eigenbasis(moved_a.matrix), eng.to_eigenbasis(right)


def _bilinear_values(eng: EvolutionEngine, W: np.ndarray, times: np.ndarray) -> np.ndarray:
    """sum_jk W_jk e^{i(E_j - E_k) t} for each t."""
    d = eng.dim
    chunk = max(1, _NODE_CHUNK_BYTES // (16 * d))
    out = np.empty(len(times), dtype=complex)
    for i in range(0, len(times), chunk):
        P = np.exp(1j * np.outer(times[i : i + chunk], eng.eigenvalues))
        out[i : i + chunk] = np.einsum("mk,mk->m", P @ W, P.conj())
    return out


def _phase_weights(eng: EvolutionEngine, times: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Phi_jk = sum_i c_i e^{i(E_j - E_k) t_i}."""
    d = eng.dim
    chunk = max(1, _NODE_CHUNK_BYTES // (16 * d))
    Phi = np.zeros((d, d), dtype=complex)
    for i in range(0, len(times), chunk):
        P = np.exp(1j * np.outer(times[i : i + chunk], eng.eigenvalues))
        Phi += (P.T * c[i : i + chunk]) @ P.conj()
    return Phi


def _scalar_average(s, A, B, ray, T, quad, eng, order, subtract):
    """(1/T) sum_nodes w e^{i theta t} (omega(iota tau_t(A) B) - subtract), and sum |w g| / T."""
    a_full = eng.embed(A)
    right = eng.embed(B).matrix @ s.rho
    theta = ray.theta
    total = 0.0 + 0.0j
    mag = 0.0
    for g in ray_nodes(ray, T, quad, _omega_max(eng, ray), order):
        X, Y = _shift_pair(eng, a_full, A, right, g.shift)
        vals = _bilinear_values(eng, X * Y.T, g.times) - subtract
        if theta:
            vals = vals * np.exp(1j * theta * g.times)
        total += np.dot(g.weights, vals)
        mag += np.dot(g.weights, np.abs(vals))
    return total / T, mag / T


def _refined(fn: Callable[[int], tuple[complex, float]], quad: QuadratureSpec) -> tuple[complex, float]:
    lo, _ = fn(quad.per_piece_order)
    hi, mag = fn(2 * quad.per_piece_order)
    return hi, abs(hi - lo) + ROUNDOFF_FACTOR * EPS * max(mag, abs(hi))


def ray_average(
    s: State, A: LocalOperator, B: LocalOperator, ray: RaySpec, T: float,
    eng: EvolutionEngine, quad: QuadratureSpec = QuadratureSpec(),
) -> AverageResult:
    """(1/T) int_0^T omega(iota_{floor(v t)} tau_t(A) B) dt (no phase)."""
    plain = replace(ray, k=None, f=None)
    value, err = _refined(lambda p: _scalar_average(s, A, B, plain, T, quad, eng, p, 0.0), quad)
    wA, wB = expect(s, A), expect(s, B)
    return AverageResult(value, T, err, plain, unsubtracted=value, connected=value - wA * wB)


def oscillatory_ray_average(
    s: State, A: LocalOperator, B: LocalOperator, ray: RaySpec, T: float,
    eng: EvolutionEngine, quad: QuadratureSpec = QuadratureSpec(),
) -> AverageResult:
    """(1/T) int_0^T e^{i(k.v - f)t} (omega(iota tau_t(A) B) - omega(A) omega(B)) dt.

    ``value`` is the connected average; ``unsubtracted`` omits the product term.
    """
    if ray.k is None:
        raise ErgodicError("oscillatory average needs (k, f) on the ray")
    c = expect(s, A) * expect(s, B)
    conn, err_c = _refined(lambda p: _scalar_average(s, A, B, ray, T, quad, eng, p, c), quad)
    unsub, err_u = _refined(lambda p: _scalar_average(s, A, B, ray, T, quad, eng, p, 0.0), quad)
    return AverageResult(conn, T, max(err_c, err_u), ray, unsubtracted=unsub, connected=conn)


def _operator_average(A, ray, T, quad, eng, order) -> np.ndarray:
    a_full = eng.embed(A)
    a_eig = None
    theta = ray.theta
    total = np.zeros((eng.dim, eng.dim), dtype=complex)
    periodic = eng.torus is not None and eng.torus.periodic
    for g in ray_nodes(ray, T, quad, _omega_max(eng, ray), order):
        c = g.weights * np.exp(1j * theta * g.times) if theta else g.weights.astype(complex)
        Phi = _phase_weights(eng, g.times, c)
        if not any(g.shift) or periodic:
            if a_eig is None:
                a_eig = eng.to_eigenbasis(a_full.matrix)
            M = eng.from_eigenbasis(a_eig * Phi)
            if any(g.shift):
                M = translate_op(LocalOperator(eng.volume, M, eng.site_dim), g.shift, eng.torus).matrix
        else:
            try:
                moved = eng.embed(translate_op(A, g.shift, eng.torus))
            except OutOfBoxError as exc:
                raise HorizonError(f"ray shift {g.shift} leaves the open box: {exc}") from exc
            M = eng.from_eigenbasis(eng.to_eigenbasis(moved.matrix) * Phi)
        total += M
    return total / T


def ray_average_operator_result(
    A: LocalOperator, ray: RaySpec, T: float, eng: EvolutionEngine, quad: QuadratureSpec = QuadratureSpec()
) -> tuple[LocalOperator, float]:
    """Normalised operator-valued average and its estimated quadrature error (operator norm)."""
    lo = _operator_average(A, ray, T, quad, eng, quad.per_piece_order)
    hi = _operator_average(A, ray, T, quad, eng, 2 * quad.per_piece_order)
    scale = max(operator_norm(hi), operator_norm(A))
    err = operator_norm(hi - lo) + ROUNDOFF_FACTOR * EPS * scale
    return LocalOperator(eng.volume, hi, eng.site_dim), err


def ray_average_operator(
    A: LocalOperator, ray: RaySpec, T: float, eng: EvolutionEngine, quad: QuadratureSpec = QuadratureSpec()
) -> LocalOperator:
    """(1/T) int_0^T e^{i theta t} iota_{floor(v t)} tau_t(A) dt as a full-volume operator."""
    op, _ = ray_average_operator_result(A, ray, T, eng, quad)
    return op


def _expect_power(s: State, M: np.ndarray, n: int) -> complex:
    return complex(np.einsum("ij,ji->", s.rho, np.linalg.matrix_power(M, n)))


def moment(
    s: State, A: LocalOperator, ray: RaySpec, T: float, n: int,
    eng: EvolutionEngine, quad: QuadratureSpec = QuadratureSpec(),
) -> AverageResult:
    """omega(Abar_T ** n) with Abar_T the normalised ray average of A."""
    if n < 1:
        raise ErgodicError("moment order must be >= 1")

    def at(order):
        M = _operator_average(A, ray, T, quad, eng, order)
        return _expect_power(s, M, n), 0.0

    value, err = _refined(at, quad)
    return AverageResult(value, T, err, ray)


def _node_operators(A, ray, T, quad, eng, order) -> tuple[list[np.ndarray], np.ndarray]:
    """Literal integrand values iota_{n_i} tau_{t_i}(A) e^{i theta t_i} at every node, with weights."""
    ops, weights = [], []
    theta = ray.theta
    periodic = eng.torus is not None and eng.torus.periodic
    for g in ray_nodes(ray, T, quad, _omega_max(eng, ray), order):
        if periodic or not any(g.shift):
            evolved = evolve_grid(eng, A, g.times)
            mats = [
                translate_op(op, g.shift, eng.torus).matrix if any(g.shift) else op.matrix for op in evolved
            ]
        else:
            try:
                moved = translate_op(A, g.shift, eng.torus)
            except OutOfBoxError as exc:
                raise HorizonError(f"ray shift {g.shift} leaves the open box: {exc}") from exc
            mats = [op.matrix for op in evolve_grid(eng, moved, g.times)]
        for t, m in zip(g.times, mats):
            ops.append(m * np.exp(1j * theta * t) if theta else m)
        weights.append(g.weights)
    return ops, np.concatenate(weights)


def _double_sum(s: State, left: list[np.ndarray], wl: np.ndarray, right: list[np.ndarray], wr: np.ndarray) -> complex:
    """sum_ij wl_i wr_j tr(rho L_i R_j), accumulated over chunks of the product grid."""
    d = s.rho.shape[0]
    chunk = max(1, _NODE_CHUNK_BYTES // (16 * d * d))
    total = 0.0 + 0.0j
    for i in range(0, len(left), chunk):
        F = np.stack([s.rho @ m for m in left[i : i + chunk]]).reshape(-1, d * d)
        for j in range(0, len(right), chunk):
            G = np.stack([m.T for m in right[j : j + chunk]]).reshape(-1, d * d)
            total += wl[i : i + chunk] @ (F @ G.T) @ wr[j : j + chunk]
    return complex(total)


def mean_square(
    s: State, A: LocalOperator, B: LocalOperator, ray: RaySpec, T: float, T2: float,
    eng: EvolutionEngine, quad: QuadratureSpec = QuadratureSpec(),
) -> AverageResult:
    """(1/(T T2)) double integral of omega(iota tau_{t1}(A) iota tau_{t2}(B)) on the product grid."""
    if T2 <= 0:
        raise ErgodicError("horizon T' must be positive")

    def at(order):
        L, wl = _node_operators(A, ray, T, quad, eng, order)
        R, wr = _node_operators(B, ray, T2, quad, eng, order)
        return _double_sum(s, L, wl, R, wr) / (T * T2), 0.0

    value, err = _refined(at, quad)
    return AverageResult(value, T, err, ray)


def multi_ray_average(
    s: State, A_list: Sequence[LocalOperator], B_list: Sequence[LocalOperator], ray: RaySpec,
    T_list: Sequence[float], eng: EvolutionEngine, quad: QuadratureSpec = QuadratureSpec(),
) -> AverageResult:
    """omega(A_1 Bbar_1 A_2 Bbar_2 ... Bbar_n A_{n+1}) with Bbar_j averaged up to T_j."""
    n = len(B_list)
    if n < 1 or len(A_list) != n + 1 or len(T_list) != n:
        raise ErgodicError(
            f"need n >= 1 averaged operators, n+1 fixed ones and n horizons; got {len(A_list)}, {n}, {len(T_list)}"
        )
    fixed = [eng.embed(a).matrix for a in A_list]

    def at(order):
        M = fixed[0]
        for j in range(n):
            M = M @ _operator_average(B_list[j], ray, T_list[j], quad, eng, order) @ fixed[j + 1]
        return complex(np.einsum("ij,ji->", s.rho, M)), 0.0

    value, err = _refined(at, quad)
    return AverageResult(value, max(T_list), err, ray)


@dataclass(frozen=True)
class SweepMode:
    kind: str = "plain"
    k: tuple[float, ...] | None = None
    f: float | None = None
    n: int | None = None

    def __post_init__(self):
        if self.kind not in ("plain", "oscillatory", "mean_square", "moment"):
            raise ErgodicError(f"unknown sweep mode {self.kind!r}")
        if self.kind == "oscillatory" and (self.k is None or self.f is None):
            raise ErgodicError("oscillatory mode needs k and f")
        if self.kind == "moment" and (self.n is None or self.n < 1):
            raise ErgodicError("moment mode needs n >= 1")

    @property
    def label(self) -> str:
        if self.kind == "moment":
            return f"moment({self.n})"
        return self.kind


@dataclass
class SweepRow:
    mode: str
    v: float
    T: float
    value: complex
    reference: complex
    abs_deviation: float
    quad_error: float
    wall_ms: float = field(default=0.0, compare=False)


def _sweep_cell(s, A, B, q, v, T, mode, eng, quad) -> SweepRow:
    start = time.perf_counter()
    if mode.kind == "plain":
        ray = RaySpec(q, v)
        r = ray_average(s, A, B, ray, T, eng, quad)
        ref = expect(s, A) * expect(s, B)
    elif mode.kind == "oscillatory":
        ray = RaySpec(q, v, mode.k, mode.f)
        r = oscillatory_ray_average(s, A, B, ray, T, eng, quad)
        ref = 0.0
    elif mode.kind == "mean_square":
        ray = RaySpec(q, v)
        r = mean_square(s, A, B, ray, T, T, eng, quad)
        ref = expect(s, A) * expect(s, B)
    else:
        ray = RaySpec(q, v)
        r = moment(s, A, ray, T, mode.n, eng, quad)
        ref = expect(s, A) ** mode.n
    ref = complex(ref)
    wall = 1e3 * (time.perf_counter() - start)
    return SweepRow(mode.label, v, T, r.value, ref, abs(r.value - ref), r.estimated_quadrature_error, wall)


def convergence_sweep(
    s: State, A: LocalOperator, B: LocalOperator, q: RationalDirection,
    v_grid: Sequence[float], T_grid: Sequence[float], mode: SweepMode, eng: EvolutionEngine,
    quad: QuadratureSpec = QuadratureSpec(), workers: int = 1,
) -> list[SweepRow]:
    """Deviation of finite-T values from the limit the theorems predict, per (v, T) cell.

    Rows come back in (v, T) row-major order whatever the worker count.
    """
    if not len(v_grid) or not len(T_grid):
        raise ErgodicError("speed and horizon grids must be non-empty")
    cells = [(v, T) for v in v_grid for T in T_grid]

    def run(cell):
        return _sweep_cell(s, A, B, q, cell[0], cell[1], mode, eng, quad)

    if workers <= 1:
        return [run(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, cells))


@dataclass
class SpacelikeProbe:
    terms: np.ndarray
    means: np.ndarray
    connected_means: np.ndarray


def spacelike_probe(
    s: State, A: LocalOperator, B: LocalOperator, n: Sequence[int], v: float, m_max: int,
    eng: EvolutionEngine, k: Sequence[float] | None = None, f: float | None = None,
) -> SpacelikeProbe:
    """Cesaro means (1/M) sum_{m<M} phase^m omega(iota_n^m tau_{|n|/v}^m (A) B) for M = 1..m_max.

    ``v = inf`` stands for the equal-time ray.  With (k, f) the m-th term carries
    exp(-i (k.n - f |n|/v) m).
    """
    n = tuple(int(c) for c in n)
    if m_max < 1:
        raise ErgodicError("m_max must be >= 1")
    if (k is None) != (f is None):
        raise ErgodicError("k and f must be given together")
    if eng.torus is not None and eng.torus.periodic:
        for c, L in zip(n, eng.torus.extent):
            if abs(c) * (m_max - 1) > L / 2:
                raise HorizonError(f"shift {(m_max - 1)} * {n} exceeds half the torus extent {eng.torus.extent}")
    step = 0.0 if math.isinf(v) else l1_norm(n) / v
    phase_rate = 0.0
    if k is not None:
        phase_rate = float(np.dot(k, n) - f * step)
    terms = np.empty(m_max, dtype=complex)
    for m in range(m_max):
        try:
            X = shifted_evolution(eng, A, tuple(m * c for c in n), m * step)
        except OutOfBoxError as exc:
            raise HorizonError(f"probe shift {m} * {n} leaves the open box") from exc
        terms[m] = expect(s, X @ B)
    phases = np.exp(-1j * phase_rate * np.arange(m_max))
    c = expect(s, A) * expect(s, B)
    counts = np.arange(1, m_max + 1)
    means = np.cumsum(phases * terms) / counts
    conn = np.cumsum(phases * (terms - c)) / counts
    return SpacelikeProbe(terms, means, conn)


def _shifts(eng: EvolutionEngine, A: LocalOperator) -> list[tuple[Site, np.ndarray]]:
    """Lattice shifts n for the structure-factor sum, with their position vector for e^{ik.n}."""
    torus = eng.torus
    if torus is None:
        raise ErgodicError("structure factor needs a torus")
    out = []
    for site in torus.sites():
        if torus.periodic:
            out.append((site, np.array(torus.minimal_image(site), dtype=float)))
        else:
            try:
                translate_op(A, site, torus)
            except OutOfBoxError:
                continue
            out.append((site, np.array(site, dtype=float)))
    return out


def structure_factor(
    s: State, A: LocalOperator, B: LocalOperator, k: Sequence[float], t: float, eng: EvolutionEngine
) -> complex:
    """sum_n e^{i k.n} (omega(iota_n tau_t(A*) B) - omega(A*) omega(B)) over the torus."""
    Astar = adjoint(A)
    c = expect(s, Astar) * expect(s, B)
    k = np.asarray(k, dtype=float)
    periodic = eng.torus is not None and eng.torus.periodic
    evolved = evolve(eng, Astar, t) if periodic else None
    total = 0.0 + 0.0j
    for site, pos in _shifts(eng, Astar):
        if periodic:
            X = translate_op(evolved, site, eng.torus)
        else:
            X = shifted_evolution(eng, Astar, site, t)
        total += np.exp(1j * float(np.dot(k, pos))) * (expect(s, X @ B) - c)
    return complex(total)


@dataclass
class EulerResult:
    value: complex
    kappa: tuple[float, ...]
    T: float
    t_min: float
    estimated_error: float


def euler_scale_average(
    s: State, A: LocalOperator, B: LocalOperator, kappa: Sequence[float], T: float,
    eng: EvolutionEngine, t_min: float = 1.0, epsabs: float = 1e-12, epsrel: float = 1e-10,
) -> EulerResult:
    """(1/(T - t_min)) int_{t_min}^T S(kappa/t, t) dt by adaptive quadrature.

    The lower cut-off regularises k = kappa/t at t -> 0 and is reported back.
    """
    if not 0 < t_min < T:
        raise ErgodicError(f"need 0 < t_min < T, got t_min={t_min}, T={T}")
    kappa_arr = np.asarray(kappa, dtype=float)
    Astar = adjoint(A)
    c = expect(s, Astar) * expect(s, B)
    a_full = eng.embed(Astar)
    right = eng.embed(B).matrix @ s.rho
    table = []
    for site, pos in _shifts(eng, Astar):
        X, Y = _shift_pair(eng, a_full, Astar, right, site)
        table.append((pos, X * Y.T))

    def integrand(t):
        tt = np.array([t])
        val = 0.0 + 0.0j
        for pos, W in table:
            phase = np.exp(1j * float(np.dot(kappa_arr, pos)) / t)
            val += phase * (_bilinear_values(eng, W, tt)[0] - c)
        return np.array([val.real, val.imag])

    res, err = quad_vec(integrand, t_min, T, epsabs=epsabs, epsrel=epsrel, limit=2000)
    span = T - t_min
    return EulerResult(complex(res[0], res[1]) / span, tuple(kappa_arr), T, t_min, float(err) / span)
