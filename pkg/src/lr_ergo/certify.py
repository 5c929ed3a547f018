"""Lieb-Robinson certificates and quasi-locality measurements on the finite volume."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .algebra import LocalOperator, commutator, localize, operator_norm, translate_op
from .dynamics import EvolutionEngine, evolve, evolve_grid, shifted_evolution
from .lattice import OutOfBoxError, ball_extension, dist, distance_to_boundary, l1_norm
from .model import Interaction, interaction_norm, lr_bound_rhs, lr_velocity

BOUND_SLACK = 1e-10
DEFAULT_C = 4.0


class CertificateViolation(AssertionError):
    pass


def commutator_norm_curve(
    eng: EvolutionEngine, A: LocalOperator, B: LocalOperator, times: Sequence[float]
) -> list[tuple[float, float]]:
    """(t, ||[tau_t(A), B]||) on the engine's volume."""
    out = []
    evolved = evolve_grid(eng, A, list(times))
    for t, X in zip(times, evolved):
        if t == 0:
            out.append((t, operator_norm(commutator(A, B))))
        else:
            out.append((t, operator_norm(commutator(X, B))))
    return out


@dataclass
class CertificateRow:
    a_id: str
    b_id: str
    dist: int
    t: float
    empirical_norm: float
    bound_rhs: float
    satisfied: bool
    margin: float
    boundary_affected: bool


@dataclass
class LRCertificate:
    model: str
    lam: float
    interaction_norm: float
    v_lr: float
    boundary: str
    rows: list[CertificateRow] = field(default_factory=list)

    @property
    def violations(self) -> list[CertificateRow]:
        return [r for r in self.rows if not r.satisfied and not r.boundary_affected]

    @property
    def passed(self) -> bool:
        return not self.violations

    def check(self) -> None:
        bad = self.violations
        if bad:
            r = bad[0]
            raise CertificateViolation(
                f"{len(bad)} row(s) violate the Lieb-Robinson bound; first: {r.a_id},{r.b_id} t={r.t} "
                f"empirical={r.empirical_norm:.6g} > bound={r.bound_rhs:.6g}"
            )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_text(self) -> str:
        head = (
            f"model={self.model} lambda={self.lam:.6g} ||Phi||={self.interaction_norm:.6g} "
            f"v_LR={self.v_lr:.6g} boundary={self.boundary} passed={self.passed}"
        )
        cols = f"{'A':>8} {'B':>8} {'dist':>4} {'t':>10} {'empirical':>14} {'bound':>14} {'margin':>14} ok  edge"
        lines = [head, cols]
        for r in self.rows:
            lines.append(
                f"{r.a_id:>8} {r.b_id:>8} {r.dist:>4d} {r.t:>10.5f} {r.empirical_norm:>14.6e} "
                f"{r.bound_rhs:>14.6e} {r.margin:>14.6e} {'y' if r.satisfied else 'N':>2}  {'y' if r.boundary_affected else '-'}"
            )
        return "\n".join(lines)


def _horizon(eng: EvolutionEngine, A: LocalOperator, B: LocalOperator) -> float:
    """Distance the light cone may travel before the finite box is felt."""
    torus = eng.torus
    if torus is None:
        return math.inf
    if torus.periodic:
        return min(torus.extent) // 2
    return distance_to_boundary(A.support.union(B.support), torus)


def certify_lr(
    eng: EvolutionEngine,
    phi: Interaction,
    pairs: Sequence[tuple[str, LocalOperator, str, LocalOperator]],
    times: Sequence[float],
    lam: float | None = None,
    workers: int = 1,
) -> LRCertificate:
    """Evaluate both sides of the Lieb-Robinson inequality on every (pair, t) row.

    Rows where v_LR |t| exceeds the distance to the box edge (open) or half the
    smallest extent (periodic) are marked boundary-affected and do not count.
    """
    lam = phi.decay_lambda if lam is None else lam
    norm = interaction_norm(phi, lam)
    v = lr_velocity(phi, lam)
    cert = LRCertificate(phi.name, lam, norm, v, phi.torus.boundary)

    def rows_for(pair):
        a_id, A, b_id, B = pair
        d = dist(A.support, B.support, eng.torus)
        horizon = _horizon(eng, A, B)
        out = []
        for t, emp in commutator_norm_curve(eng, A, B, times):
            rhs = lr_bound_rhs(A, B, t, lam, v, distance=d)
            out.append(CertificateRow(
                a_id, b_id, d, float(t), emp, rhs, emp <= rhs + BOUND_SLACK, rhs - emp, v * abs(t) > horizon
            ))
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(rows_for, pairs))
    else:
        chunks = [rows_for(p) for p in pairs]
    for c in chunks:
        cert.rows.extend(c)
    return cert


@dataclass
class LocalizationRow:
    r: int
    t: float
    empirical_error: float
    theoretical: float
    C: float


@dataclass
class LocalizationReport:
    rows: list[LocalizationRow]
    lam: float
    v_lr: float

    @property
    def monotone(self) -> bool:
        errs = [row.empirical_error for row in self.rows]
        return all(b <= a + 1e-10 for a, b in zip(errs, errs[1:]))


def localization_curve(
    eng: EvolutionEngine,
    A: LocalOperator,
    t: float,
    r_list: Sequence[int],
    phi: Interaction,
    C: float = DEFAULT_C,
    lam: float | None = None,
) -> LocalizationReport:
    """||P_{Lambda_r}(tau_t A) - tau_t A|| against 2 eps_r ||A||.

    eps_r = C |Lambda| N^(2|Lambda|) exp(-lambda (r - v_LR |t|)); C is not fixed by
    theory and is recorded with every row.
    """
    lam = phi.decay_lambda if lam is None else lam
    v = lr_velocity(phi, lam)
    X = evolve(eng, A, t)
    nA = operator_norm(A)
    size = len(A.support)
    N = A.site_dim
    rows = []
    for r in r_list:
        region = ball_extension(A.support, int(r), eng.torus).intersection(eng.volume)
        err = operator_norm(localize(X, region) - X)
        try:
            eps = C * size * N ** (2 * size) * math.exp(-lam * (r - v * abs(t)))
        except OverflowError:
            eps = math.inf
        rows.append(LocalizationRow(int(r), float(t), err, 2 * eps * nA, C))
    return LocalizationReport(rows, lam, v)


@dataclass
class AbelianRow:
    r: int
    t: float
    norm: float
    bound_rhs: float


def abelianness_probe(
    eng: EvolutionEngine,
    A: LocalOperator,
    B: LocalOperator,
    n: Sequence[int],
    v: float,
    r_max: int,
    phi: Interaction | None = None,
    lam: float | None = None,
) -> list[AbelianRow]:
    """||[iota_{rn} tau_{r|n|/v}(A), B]|| for r = 1..r_max (v = inf gives t = 0).

    With an interaction supplied, each row also carries the Lieb-Robinson
    right-hand side at the translated distance.
    """
    n = tuple(int(c) for c in n)
    torus = eng.torus
    if torus is not None and torus.periodic:
        for c, L in zip(n, torus.extent):
            if abs(c) * r_max > L / 2:
                raise OutOfBoxError(f"shift {r_max} * {n} exceeds half the torus extent {torus.extent}")
    step = 0.0 if math.isinf(v) else l1_norm(n) / v
    v_lr = lam_ = None
    if phi is not None:
        lam_ = phi.decay_lambda if lam is None else lam
        v_lr = lr_velocity(phi, lam_)
    rows = []
    for r in range(1, r_max + 1):
        shift = tuple(r * c for c in n)
        t = r * step
        X = shifted_evolution(eng, A, shift, t)
        norm = operator_norm(commutator(X, B))
        bound = math.nan
        if phi is not None:
            moved = translate_op(A, shift, torus)
            bound = lr_bound_rhs(moved, B, t, lam_, v_lr, torus)
        rows.append(AbelianRow(r, t, norm, bound))
    return rows


def commutator_upper(A: LocalOperator, B: LocalOperator) -> float:
    return 2 * operator_norm(A) * operator_norm(B)

