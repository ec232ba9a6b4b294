"""Bi-variational coupled-cluster ground-state solver.

The ket amplitudes come from Newton's method on the projected equations
``<Phi|C_j^- h|Phi> = 0`` with ``h = exp(-S) H exp(S)``; the bra amplitudes
then follow from a linear solve at fixed ``S``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config_space import ConfigurationBasis, OperatorFamily
from .errors import (
    BasisMismatch,
    EmptyTruncation,
    NoConvergence,
    NonTerminatingSeries,
    SingularJacobian,
    SingularSystem,
)

log = logging.getLogger(__name__)

SERIES_CUTOFF = 1e-15
JACOBIAN_COND_LIMIT = 1e13
BRA_COND_LIMIT = 1e12


@dataclass(frozen=True)
class TruncationSet:
    """Ordered set of retained excited configurations (ordinals into the basis)."""

    indices: tuple[int, ...]
    dimension: int
    scheme: str = "explicit"
    n: int | None = None

    def __post_init__(self):
        if not self.indices:
            raise EmptyTruncation("truncation set is empty")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("duplicate indices in truncation set")
        if 0 in self.indices:
            raise ValueError("the reference configuration (0) cannot be truncated into S")
        if min(self.indices) < 0 or max(self.indices) >= self.dimension:
            raise ValueError(f"indices must lie in 1..{self.dimension - 1}")

    def __len__(self) -> int:
        return len(self.indices)


def full_truncation(basis: ConfigurationBasis) -> TruncationSet:
    if basis.dimension < 2:
        raise EmptyTruncation("basis has no excited configurations")
    return TruncationSet(tuple(range(1, basis.dimension)), basis.dimension, "full")


def sub_n_truncation(basis: ConfigurationBasis, n: int) -> TruncationSet:
    """Configurations with excitation level between 1 and ``n``."""
    if n < 1:
        raise ValueError(f"SUB-n needs n >= 1, got {n}")
    kept = tuple(c.ordinal for c, lv in zip(basis.configs, basis.levels) if 1 <= lv <= n)
    if not kept:
        raise EmptyTruncation(f"no configuration with level <= {n}")
    if len(kept) == basis.dimension - 1:
        return TruncationSet(kept, basis.dimension, "full", n)
    return TruncationSet(kept, basis.dimension, "sub_n", n)


def explicit_truncation(basis: ConfigurationBasis, indices: Sequence[int]) -> TruncationSet:
    return TruncationSet(tuple(int(i) for i in indices), basis.dimension, "explicit")


@dataclass(frozen=True)
class ClusterAmplitudes:
    values: np.ndarray
    truncation: TruncationSet

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).reshape(-1)
        if len(vals) != len(self.truncation):
            raise ValueError("one amplitude per truncation index is required")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, truncation: TruncationSet):
        return cls(np.zeros(len(truncation), dtype=complex), truncation)

    def as_dict(self) -> dict[int, complex]:
        return dict(zip(self.truncation.indices, self.values.tolist()))


class BraAmplitudes(ClusterAmplitudes):
    pass


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-10
    max_iterations: int = 200
    damping: float = 1.0
    continuation: bool = True
    check_jacobian: bool = False


@dataclass(frozen=True)
class IterationRecord:
    step: int
    residual: float
    damping: float
    tau: float = 1.0


@dataclass(frozen=True)
class CcmSolution:
    energy: float
    ket: ClusterAmplitudes
    bra: BraAmplitudes
    ket_residual_norm: float
    bra_residual_norm: float
    tolerance: float
    iterations: tuple[IterationRecord, ...] = ()
    energy_imag: float = 0.0
    max_imag_amplitude: float = 0.0
    transformed: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def newton_steps(self) -> int:
        return len(self.iterations)


# ---------------------------------------------------------------------------
# operator assembly and the similarity transform
# ---------------------------------------------------------------------------


def _check_basis(truncation: TruncationSet, family: OperatorFamily):
    if truncation.dimension != family.dimension:
        raise BasisMismatch(
            f"truncation built for dimension {truncation.dimension}, family has {family.dimension}"
        )


def assemble_cluster(amps: ClusterAmplitudes, family: OperatorFamily) -> np.ndarray:
    """``S = sum_j s_j C_j^+``."""
    _check_basis(amps.truncation, family)
    s = np.zeros((family.dimension, family.dimension), dtype=complex)
    for j, a in zip(amps.truncation.indices, amps.values):
        if a != 0:
            s += a * family.creation(j)
    return s


def assemble_bra(amps: BraAmplitudes, family: OperatorFamily) -> np.ndarray:
    """``S~ = I + sum_j s~_j C_j^-``."""
    _check_basis(amps.truncation, family)
    st = np.eye(family.dimension, dtype=complex)
    for j, a in zip(amps.truncation.indices, amps.values):
        if a != 0:
            st += a * family.annihilation(j)
    return st


def nested_commutator_series(h: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, int]:
    """Sum of ``[...[[H,S],S]...,S] / k!`` until a term vanishes.

    Returns the sum and the number of nonzero terms kept (the k=0 term counts).
    """
    h = np.asarray(h, dtype=complex)
    s = np.asarray(s, dtype=complex)
    cutoff = SERIES_CUTOFF * max(np.abs(h).max(initial=0.0), np.finfo(float).tiny)
    out = h.copy()
    term = h
    limit = 2 * len(h) + 1
    for k in range(1, limit + 1):
        term = (term @ s - s @ term) / k
        if np.abs(term).max(initial=0.0) <= cutoff:
            return out, k
        out += term
    raise NonTerminatingSeries(f"{limit} nested commutators without termination; is S nilpotent?")


def similarity_transform(h: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``exp(-S) H exp(S)`` for nilpotent ``S`` via the terminating commutator series."""
    return nested_commutator_series(h, s)[0]


def energy_functional(hhat: np.ndarray) -> float:
    """``<Phi|h|Phi>``; the imaginary part is logged when it is not negligible."""
    e = complex(hhat[0, 0])
    if abs(e.imag) > 1e-10 * max(abs(e.real), 1.0):
        log.warning("energy has imaginary part %.3e", e.imag)
    return e.real


def _generated_columns(truncation: TruncationSet, family: OperatorFamily) -> np.ndarray:
    """Columns ``C_j^+ |Phi>`` for ``j`` in the truncation, as a D x m matrix."""
    return np.stack([family.creation(j)[:, 0] for j in truncation.indices], axis=1)


def ket_residuals(hhat: np.ndarray, truncation: TruncationSet, family: OperatorFamily) -> np.ndarray:
    """``r_j = <Phi| C_j^- h |Phi>`` in truncation order."""
    _check_basis(truncation, family)
    return _generated_columns(truncation, family).conj().T @ hhat[:, 0]


def ket_jacobian(hhat: np.ndarray, truncation: TruncationSet, family: OperatorFamily) -> np.ndarray:
    """``d r_j / d s_J = <Phi| C_j^- [h, C_J^+] |Phi>``.

    Every ``C_J^+`` commutes with ``S``, so the directional derivative
    ``exp(-S) [H, C_J^+] exp(S)`` collapses to ``[h, C_J^+]``.
    """
    _check_basis(truncation, family)
    g = _generated_columns(truncation, family)
    ref_col = hhat[:, 0]
    lifted = np.stack([family.creation(j) @ ref_col for j in truncation.indices], axis=1)
    return g.conj().T @ (hhat @ g - lifted)


def _residual_at(h, family, truncation, values):
    s = assemble_cluster(ClusterAmplitudes(values, truncation), family)
    hhat = similarity_transform(h, s)
    return hhat, ket_residuals(hhat, truncation, family)


def finite_difference_jacobian(
    h: np.ndarray, family: OperatorFamily, truncation: TruncationSet, values, step: float = 1e-6
) -> np.ndarray:
    """Central differences of the ket residuals (residuals are holomorphic in ``s``)."""
    values = np.asarray(values, dtype=complex)
    m = len(truncation)
    jac = np.zeros((m, m), dtype=complex)
    for col in range(m):
        e = np.zeros(m, dtype=complex)
        e[col] = step
        plus = _residual_at(h, family, truncation, values + e)[1]
        minus = _residual_at(h, family, truncation, values - e)[1]
        jac[:, col] = (plus - minus) / (2 * step)
    return jac


def _newton(h, family, truncation, values, opts: SolverOptions, tol, budget, trace, tau):
    """Damped Newton from ``values``; appends to ``trace`` and returns (values, hhat)."""
    hhat, r = _residual_at(h, family, truncation, values)
    for _ in range(budget):
        rinf = float(np.abs(r).max())
        if rinf <= tol:
            return values, hhat
        jac = ket_jacobian(hhat, truncation, family)
        if opts.check_jacobian:
            fd = finite_difference_jacobian(h, family, truncation, values)
            rel = np.linalg.norm(fd - jac) / max(np.linalg.norm(jac), 1e-300)
            if rel > 1e-5:
                log.warning("analytic Jacobian deviates from finite differences by %.2e", rel)
        if np.linalg.cond(jac) > JACOBIAN_COND_LIMIT:
            raise SingularJacobian(
                "ket Jacobian is singular; degenerate reference or truncation pathology suspected"
            )
        delta = np.linalg.solve(jac, -r)
        r2norm = np.linalg.norm(r)
        t = opts.damping
        while True:
            trial = values + t * delta
            hhat_t, r_t = _residual_at(h, family, truncation, trial)
            if np.linalg.norm(r_t) < r2norm:
                break
            t *= 0.5
            if t < 2.0**-30:
                raise NoConvergence("line search could not reduce the residual", rinf, trace)
        values, hhat, r = trial, hhat_t, r_t
        trace.append(IterationRecord(len(trace) + 1, float(np.abs(r).max()), t, tau))
    rinf = float(np.abs(r).max())
    if rinf <= tol:
        return values, hhat
    raise NoConvergence("Newton iteration budget exhausted", rinf, trace)


def _continuation(model, truncation, opts: SolverOptions, trace):
    """Track the ground branch of ``H + (1 - tau) mu N_exc`` from tau = 0 to 1.

    At tau = 0 the excitation penalty ``mu`` (a Gershgorin bound on ``H``) makes
    the reference dominant, so S = 0 is a good start; each stage is
    warm-started from the last and the step shrinks whenever Newton struggles.
    """
    h = model.hamiltonian
    family = model.ops
    penalty = model.basis.excitation_operator()
    mu = 2.0 * np.abs(h).sum(axis=1).max()
    values = np.zeros(len(truncation), dtype=complex)
    tau, dtau = 0.0, 0.25
    stage_budget = 15
    while True:
        target = min(1.0, tau + dtau)
        final = target >= 1.0
        remaining = opts.max_iterations - len(trace)
        if remaining <= 0:
            raise NoConvergence("iteration budget exhausted during continuation", np.inf, trace)
        shifted = h + (1.0 - target) * mu * penalty
        tol = opts.tolerance if final else max(opts.tolerance, 1e-8)
        mark = len(trace)
        try:
            new, hhat = _newton(shifted, family, truncation, values.copy(), opts, tol,
                                min(stage_budget, remaining), trace, target)
        except (NoConvergence, SingularJacobian):
            del trace[mark:]
            dtau *= 0.5
            if dtau < 1e-4:
                raise NoConvergence("continuation step collapsed", np.inf, trace) from None
            continue
        values, tau = new, target
        if final:
            return values, hhat
        dtau = min(1.5 * dtau, 0.25)


def solve_ket(model, truncation: TruncationSet, opts: SolverOptions | None = None):
    """Solve the ket equations; returns ``(ClusterAmplitudes, E, trace)``.

    Starts from ``S = 0``. If the reference already satisfies the equations no
    Newton step is taken. Otherwise the default path follows the ground branch
    by continuation in an excitation penalty, which keeps Newton off excited
    solutions when the reference is degenerate with another configuration.
    """
    opts = opts or SolverOptions()
    family = model.ops
    _check_basis(truncation, family)
    h = model.hamiltonian
    trace: list[IterationRecord] = []
    zero = np.zeros(len(truncation), dtype=complex)
    hhat, r = _residual_at(h, family, truncation, zero)
    if float(np.abs(r).max()) <= opts.tolerance:
        values = zero
    elif opts.continuation:
        values, hhat = _continuation(model, truncation, opts, trace)
    else:
        values, hhat = _newton(h, family, truncation, zero, opts, opts.tolerance,
                               opts.max_iterations, trace, 1.0)
    amps = ClusterAmplitudes(values, truncation)
    return amps, energy_functional(hhat), tuple(trace)


def solve_bra(hhat: np.ndarray, energy: float, truncation: TruncationSet, family: OperatorFamily) -> BraAmplitudes:
    """Linear equations ``<Phi|S~ (h - E) C_j^+|Phi> = 0`` for the bra amplitudes."""
    _check_basis(truncation, family)
    g = _generated_columns(truncation, family)
    shifted = hhat - energy * np.eye(len(hhat))
    rhs = shifted[0, :] @ g  # <Phi|(h - E) C_j^+|Phi>
    coeff = g.conj().T @ shifted @ g  # [J, j] = <Phi|C_J^- (h - E) C_j^+|Phi>
    if np.linalg.cond(coeff) <= BRA_COND_LIMIT:
        return BraAmplitudes(np.linalg.solve(coeff.T, -rhs), truncation)
    # rank deficient: accept only a consistent system (e.g. an exact reference
    # that is degenerate with another configuration) and take the minimum-norm root
    x = np.linalg.lstsq(coeff.T, -rhs, rcond=1.0 / BRA_COND_LIMIT)[0]
    scale = max(np.abs(hhat).max(), 1.0)
    if np.abs(coeff.T @ x + rhs).max() > 1e-10 * scale:
        raise SingularSystem("bra equations are rank deficient; degenerate ground state suspected")
    log.warning("bra equations are rank deficient but consistent; using the minimum-norm solution")
    return BraAmplitudes(x, truncation)


def bra_residuals(hhat, energy, bra: BraAmplitudes, family: OperatorFamily) -> np.ndarray:
    """``<Phi| S~ (h - E) C_j^+ |Phi>`` evaluated with the assembled ``S~``."""
    st = assemble_bra(bra, family)
    row = st[0, :] @ (hhat - energy * np.eye(len(hhat)))
    return row @ _generated_columns(bra.truncation, family)


def expectation(lam: np.ndarray, ket: ClusterAmplitudes, bra: BraAmplitudes, family: OperatorFamily) -> complex:
    """``<Phi| S~ exp(-S) Lambda exp(S) |Phi>``."""
    s = assemble_cluster(ket, family)
    st = assemble_bra(bra, family)
    return complex(st[0, :] @ similarity_transform(lam, s)[:, 0])


def solve(model, truncation: TruncationSet | None = None, opts: SolverOptions | None = None) -> CcmSolution:
    """Ket solve followed by the bra solve at the converged ``S``."""
    opts = opts or SolverOptions()
    truncation = truncation or full_truncation(model.basis)
    ket, energy, trace = solve_ket(model, truncation, opts)
    hhat = similarity_transform(model.hamiltonian, assemble_cluster(ket, model.ops))
    bra = solve_bra(hhat, energy, truncation, model.ops)
    scale = max(np.abs(hhat).max(), 1.0)
    ket_res = float(np.abs(ket_residuals(hhat, truncation, model.ops)).max())
    bra_res = float(np.abs(bra_residuals(hhat, energy, bra, model.ops)).max())
    if bra_res > 1e-10 * scale:
        log.warning("bra residual %.2e above 1e-10 * ||h||", bra_res)
    max_imag = 0.0
    if np.all(np.asarray(model.hamiltonian).imag == 0):
        max_imag = float(max(np.abs(ket.values.imag).max(), np.abs(bra.values.imag).max()))
        if max_imag > 1e-9:
            log.warning("real Hamiltonian but amplitudes carry imaginary parts up to %.2e", max_imag)
    return CcmSolution(
        energy=energy,
        ket=ket,
        bra=bra,
        ket_residual_norm=ket_res,
        bra_residual_norm=bra_res,
        tolerance=opts.tolerance,
        iterations=trace,
        energy_imag=float(hhat[0, 0].imag),
        max_imag_amplitude=max_imag,
        transformed=hhat,
    )
