"""Brute-force reference computations.

Nothing here imports the solver's transform code: agreement between the two
paths is only evidence if they share no routines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config_space import hermiticity_defect
from .errors import ConvergenceFailure, OrthogonalReference

RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class Eigensystem:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0].real)

    @property
    def ground_vector(self) -> np.ndarray:
        return self.eigenvectors[:, 0]


def exact_eigensystem(h: np.ndarray, hermitian: bool | None = None) -> Eigensystem:
    """Full spectrum sorted ascending by real part, with self-checked residuals.

    The Hermitian fast path is taken only when the Hermiticity of ``h`` is
    verified, regardless of what the caller claims.
    """
    h = np.asarray(h, dtype=complex)
    herm = hermiticity_defect(h) <= 1e-12
    if hermitian and not herm:
        raise ValueError("hermitian path requested for a non-Hermitian matrix")
    try:
        if herm:
            w, v = np.linalg.eigh(h)
        else:
            w, v = np.linalg.eig(h)
            order = np.lexsort((w.imag, w.real))
            w, v = w[order], v[:, order]
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    scale = max(np.linalg.norm(h, 2), 1e-300)
    residuals = np.linalg.norm(h @ v - v * w[None, :], axis=0)
    if np.any(residuals > RESIDUAL_TOL * scale):
        raise ConvergenceFailure(f"eigenpair residual {residuals.max():.2e} exceeds {RESIDUAL_TOL:g}*||H||")
    if herm:
        ortho = np.abs(v.conj().T @ v - np.eye(len(w))).max()
        if ortho > 1e-10:
            raise ConvergenceFailure(f"eigenvectors not orthonormal (defect {ortho:.2e})")
        w = w.real
    return Eigensystem(w, v, residuals)


def expm_series(a: np.ndarray, tol: float = 1e-17) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a Taylor series."""
    a = np.asarray(a, dtype=complex)
    norm = np.abs(a).sum(axis=0).max(initial=0.0)
    squarings = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0.5 else 0
    scaled = a / 2.0**squarings
    result = np.eye(len(a), dtype=complex)
    term = np.eye(len(a), dtype=complex)
    for k in range(1, 60):
        term = term @ scaled / k
        result = result + term
        if np.abs(term).max(initial=0.0) <= tol * np.abs(result).max():
            break
    for _ in range(squarings):
        result = result @ result
    return result


def dense_exp_transform(h: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``exp(-S) H exp(S)`` straight from the definition."""
    return expm_series(-s) @ np.asarray(h, dtype=complex) @ expm_series(s)


def exact_ground_energy(h: np.ndarray) -> float:
    return exact_eigensystem(h).ground_energy


def ground_vector_match(solution, model) -> float:
    """``|| e^S |Phi> - Psi_0 / <Phi|Psi_0> ||`` for a full-truncation solution."""
    eig = exact_eigensystem(model.hamiltonian)
    psi = eig.ground_vector
    overlap = psi[0]
    if abs(overlap) < 1e-10:
        raise OrthogonalReference(f"<Phi|Psi_0> = {abs(overlap):.2e}")
    s = np.zeros((model.dimension, model.dimension), dtype=complex)
    for j, amp in zip(solution.ket.truncation.indices, solution.ket.values):
        s += amp * model.ops.creation(j)
    ket = expm_series(s)[:, 0]
    return float(np.linalg.norm(ket - psi / overlap))
