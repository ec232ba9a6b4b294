"""Metric operators, quasi-Hermiticity and re-Hermitization of non-Hermitian maps.

Conventions: ``H`` is Hermitian in the physical space, ``h = Omega^-1 H Omega``
lives in the friendly space, and ``Theta = Omega^dagger Omega`` turns the
friendly space into the standard one where ``h`` is self-adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .ccm_solver import CcmSolution, assemble_bra, assemble_cluster
from .config_space import adjoint, hermiticity_defect
from .errors import (
    ComplexSpectrum,
    DefectiveMatrix,
    DegenerateGroundState,
    IncompleteSystem,
    IndefiniteMetric,
    InvariantViolation,
    NotHermitianInput,
    NotQuasiHermitian,
    SingularMap,
)

METRIC_TOL = 1e-12
MAP_COND_LIMIT = 1e12
EIGVEC_COND_LIMIT = 1e10
REHERMITIZE_TOL = 1e-8


def _fro(a) -> float:
    return float(np.linalg.norm(a))


@dataclass(frozen=True)
class MetricOperator:
    """Hermitian positive-definite metric; validated on construction."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=complex)
        scale = _fro(theta)
        if scale == 0.0:
            raise IndefiniteMetric("zero metric")
        herm = _fro(theta - adjoint(theta)) / scale
        if herm > METRIC_TOL:
            raise IndefiniteMetric(f"metric is not Hermitian (defect {herm:.2e})")
        w = np.linalg.eigvalsh(theta)
        if w[0] <= METRIC_TOL * w[-1]:
            raise IndefiniteMetric(f"metric not positive definite (eigenvalues {w[0]:.3e} .. {w[-1]:.3e})")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def condition_number(self) -> float:
        w = np.linalg.eigvalsh(self.theta)
        return float(w[-1] / w[0])


def _theta_array(theta) -> np.ndarray:
    return theta.theta if isinstance(theta, MetricOperator) else np.asarray(theta, dtype=complex)


def metric_from_map(omega: np.ndarray) -> MetricOperator:
    """``Theta = Omega^dagger Omega``."""
    omega = np.asarray(omega, dtype=complex)
    cond = np.linalg.cond(omega)
    if not np.isfinite(cond) or cond > MAP_COND_LIMIT:
        raise SingularMap(f"map condition number {cond:.2e} exceeds {MAP_COND_LIMIT:g}")
    return MetricOperator(adjoint(omega) @ omega)


def quasi_hermiticity_defect(h: np.ndarray, theta) -> float:
    """``||h^dagger Theta - Theta h|| / (||h|| ||Theta||)`` in the Frobenius norm."""
    h = np.asarray(h, dtype=complex)
    t = _theta_array(theta)
    denom = _fro(h) * _fro(t)
    if denom == 0.0:
        return 0.0
    return _fro(adjoint(h) @ t - t @ h) / denom


def relative_hermiticity_defect(a: np.ndarray) -> float:
    """``||A - A^dagger|| / ||A||`` (Frobenius)."""
    scale = _fro(a)
    return 0.0 if scale == 0.0 else _fro(a - adjoint(a)) / scale


def metric_roots(theta) -> tuple[np.ndarray, np.ndarray]:
    """``Theta^(1/2)`` and ``Theta^(-1/2)`` from the Hermitian eigendecomposition."""
    t = _theta_array(theta)
    w, v = np.linalg.eigh(t)
    if w[0] <= 0:
        raise IndefiniteMetric(f"metric has nonpositive eigenvalue {w[0]:.3e}")
    root = (v * np.sqrt(w)) @ adjoint(v)
    inv_root = (v / np.sqrt(w)) @ adjoint(v)
    return root, inv_root


def rehermitize(h: np.ndarray, theta, tol: float = REHERMITIZE_TOL) -> np.ndarray:
    """``Theta^(1/2) h Theta^(-1/2)``, Hermitian whenever ``h`` is Theta-quasi-Hermitian."""
    defect = quasi_hermiticity_defect(h, theta)
    if defect > tol:
        raise NotQuasiHermitian(f"quasi-Hermiticity defect {defect:.2e} exceeds {tol:g}")
    root, inv_root = metric_roots(theta)
    return root @ np.asarray(h, dtype=complex) @ inv_root


@dataclass(frozen=True)
class ThsTriple:
    """Physical Hamiltonian, its friendly image, the map and the metric."""

    H_physical: np.ndarray
    h_friendly: np.ndarray
    theta: MetricOperator
    omega: np.ndarray

    def defects(self) -> dict[str, float]:
        omega = self.omega
        mapped = np.linalg.solve(omega, self.H_physical @ omega)
        return {
            "similarity": _fro(self.h_friendly - mapped) / max(_fro(mapped), 1e-300),
            "metric": _fro(self.theta.theta - adjoint(omega) @ omega) / _fro(self.theta.theta),
            "quasi_hermiticity": quasi_hermiticity_defect(self.h_friendly, self.theta),
        }


def ths_triple(H: np.ndarray, omega: np.ndarray) -> ThsTriple:
    theta = metric_from_map(omega)
    h = np.linalg.solve(omega, np.asarray(H, dtype=complex) @ omega)
    return ThsTriple(np.asarray(H, dtype=complex), h, theta, np.asarray(omega, dtype=complex))


def ccm_map(solution: CcmSolution, model) -> np.ndarray:
    """``Omega = exp(S)`` for a solved cluster operator."""
    return sla.expm(assemble_cluster(solution.ket, model.ops))


def triple_from_solution(solution: CcmSolution, model) -> ThsTriple:
    """THS reading of a CCM run: ``Omega = exp S`` and ``h = exp(-S) H exp(S)``."""
    s = assemble_cluster(solution.ket, model.ops)
    omega = sla.expm(s)
    h = solution.transformed if solution.transformed is not None else sla.expm(-s) @ model.hamiltonian @ omega
    return ThsTriple(np.asarray(model.hamiltonian), h, metric_from_map(omega), omega)


# ---------------------------------------------------------------------------
# the doublet eigenproblem
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Doublet:
    """Biorthonormal right columns and left rows of a diagonalizable matrix."""

    eigenvalues: np.ndarray
    right: np.ndarray  # columns |Phi_n>
    left: np.ndarray  # rows <Phi~_n|
    matrix: np.ndarray
    clusters: tuple[tuple[int, ...], ...] = ()

    def biorthonormality_defect(self) -> float:
        return float(np.abs(self.left @ self.right - np.eye(len(self.eigenvalues))).max())

    def completeness_defect(self) -> float:
        return float(np.abs(self.right @ self.left - np.eye(len(self.matrix))).max())

    def residuals(self) -> tuple[float, float]:
        """Largest right and left eigen-equation residual, relative to ``||h||_2``."""
        h = self.matrix
        scale = max(np.linalg.norm(h, 2), 1e-300)
        right = np.linalg.norm(h @ self.right - self.right * self.eigenvalues[None, :], axis=0)
        left_unit = self.left / np.linalg.norm(self.left, axis=1, keepdims=True)
        left = np.linalg.norm(left_unit @ h - left_unit * self.eigenvalues[:, None], axis=1)
        return float(right.max() / scale), float(left.max() / scale)


def _clusters(w: np.ndarray, tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i in range(len(w)):
        if groups and abs(w[i] - w[groups[-1][-1]]) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def doublet_eigensolve(h: np.ndarray, cluster_tol: float = 1e-8) -> Doublet:
    """Right and left eigenvectors, sorted by (real, imag) and biorthonormalized.

    Left rows are paired with right columns by eigenvalue; inside a cluster of
    (numerically) degenerate eigenvalues the left block is replaced by
    ``O^-1 L`` with ``O = L R``, the generalized Gram-Schmidt step that makes
    the cluster biorthonormal.
    """
    h = np.asarray(h, dtype=complex)
    w, vl, vr = sla.eig(h, left=True, right=True)
    order = np.lexsort((w.imag, w.real))
    w, vl, vr = w[order], vl[:, order], vr[:, order]
    vr = vr / np.linalg.norm(vr, axis=0, keepdims=True)
    cond = np.linalg.cond(vr)
    if not np.isfinite(cond) or cond > EIGVEC_COND_LIMIT:
        raise DefectiveMatrix(f"eigenvector matrix condition {cond:.2e}; exceptional point suspected")
    left = vl.conj().T
    scale = max(np.abs(w).max(initial=0.0), 1.0)
    groups = _clusters(w, cluster_tol * scale)
    for g in groups:
        idx = np.asarray(g)
        if len(idx) > 1:
            # a cluster's left block may come back in an arbitrary order or basis
            overlap = left[idx] @ vr[:, idx]
            left[idx] = np.linalg.solve(overlap, left[idx])
        else:
            i = idx[0]
            left[i] = left[i] / (left[i] @ vr[:, i])
    return Doublet(w, vr, left, h, tuple(tuple(g) for g in groups))


def metric_from_spectrum(doublet: Doublet, weights=None, imag_tol: float = 1e-8) -> MetricOperator:
    """``Theta = sum_n c_n <Phi~_n|^dagger <Phi~_n|`` over unit-normalized left rows.

    ``weights`` (default all ones) exposes the nonuniqueness of the metric: any
    positive choice keeps ``h`` quasi-Hermitian.
    """
    w = doublet.eigenvalues
    if np.any(np.abs(w.imag) > imag_tol * np.maximum(np.abs(w.real), 1.0)):
        raise ComplexSpectrum(f"largest imaginary part {np.abs(w.imag).max():.2e}")
    d = len(doublet.matrix)
    if len(w) != d or doublet.completeness_defect() > 1e-8:
        raise IncompleteSystem("left/right system does not resolve the identity")
    weights = np.ones(d) if weights is None else np.asarray(weights, dtype=float)
    if weights.shape != (d,) or np.any(weights <= 0):
        raise ValueError("weights must be one positive number per eigenpair")
    rows = doublet.left / np.linalg.norm(doublet.left, axis=1, keepdims=True)
    theta = adjoint(rows) @ (weights[:, None] * rows)
    return MetricOperator((theta + adjoint(theta)) / 2)


def hermitian_map(s_h: np.ndarray) -> tuple[np.ndarray, MetricOperator]:
    """``Omega_s = exp(S_s)`` and ``Theta_s = exp(2 S_s)`` for Hermitian ``S_s``."""
    s_h = np.asarray(s_h, dtype=complex)
    if hermiticity_defect(s_h) > METRIC_TOL:
        raise NotHermitianInput("generator of a Hermitian map must be Hermitian")
    w, v = np.linalg.eigh((s_h + adjoint(s_h)) / 2)
    omega = (v * np.exp(w)) @ adjoint(v)
    theta = (v * np.exp(2 * w)) @ adjoint(v)
    defect = _fro(theta - adjoint(omega) @ omega) / _fro(theta)
    if defect > METRIC_TOL:
        raise InvariantViolation("hermitian_map", defect)
    return omega, MetricOperator(theta)


def transformed_hermiticity_defect(H: np.ndarray, omega: np.ndarray) -> float:
    """Relative Hermiticity defect of ``Omega^-1 H Omega``."""
    return relative_hermiticity_defect(np.linalg.solve(omega, np.asarray(H, dtype=complex) @ omega))


def pi_symmetry_defect(H: np.ndarray, omega: np.ndarray) -> float:
    """``||[H, Omega Omega^dagger]|| / (||H|| ||Omega Omega^dagger||)``.

    Vanishes exactly when ``Omega^-1 H Omega`` is Hermitian.
    """
    H = np.asarray(H, dtype=complex)
    pi = np.asarray(omega) @ adjoint(omega)
    denom = _fro(H) * _fro(pi)
    return 0.0 if denom == 0.0 else _fro(H @ pi - pi @ H) / denom


def solution_metric(solution: CcmSolution, model) -> MetricOperator:
    """``exp(S)^dagger exp(S)`` for a solved cluster operator."""
    return metric_from_map(ccm_map(solution, model))


def ccm_ths_dictionary_check(solution: CcmSolution, model, gap_tol: float = 1e-6,
                             require_full: bool = True) -> float:
    """Distance between the normalized bra row ``<Phi|S~`` and ``<Phi|Theta / <Phi|Theta|Phi>``.

    At full truncation both are the left ground eigenrow of ``h`` with unit
    reference component, so the distance measures how literally the bra
    correlation operator plays the role of the metric.
    """
    if require_full and solution.ket.truncation.scheme != "full":
        raise ValueError("dictionary check needs a full-truncation solution")
    trivial = not np.any(solution.ket.values) and not np.any(solution.bra.values)
    levels = np.linalg.eigvalsh(model.hamiltonian)
    if not trivial and len(levels) > 1 and levels[1] - levels[0] <= gap_tol:
        # the left ground eigenrow is not unique, so the two rows need not agree
        raise DegenerateGroundState(f"ground-state gap {levels[1] - levels[0]:.2e} <= {gap_tol:g}")
    theta = solution_metric(solution, model).theta
    bra_row = assemble_bra(solution.bra, model.ops)[0]
    u = bra_row / bra_row[0]
    v = theta[0] / theta[0, 0]
    return float(np.linalg.norm(u - v))
