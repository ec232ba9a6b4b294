"""Finite configuration spaces and commuting multi-configurational ladder families.

Operators are plain dense ``complex128`` numpy arrays; the reference state is
always the first unit vector of the basis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Sequence

import numpy as np

from .errors import InvariantViolation, InvalidSpec

ALGEBRA_TOL = 1e-12


def as_operator(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"operator must be a square matrix, got shape {m.shape}")
    return m


def adjoint(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.conj(np.asarray(a)).T


def hermiticity_defect(a: np.ndarray) -> float:
    """Entrywise ``max|A - A^dagger| / max|A|`` (0 for the zero matrix)."""
    a = np.asarray(a)
    scale = np.abs(a).max(initial=0.0)
    if scale == 0.0:
        return 0.0
    return float(np.abs(a - adjoint(a)).max() / scale)


def is_hermitian(a: np.ndarray, tol: float = ALGEBRA_TOL) -> bool:
    return hermiticity_defect(a) <= tol


@dataclass(frozen=True)
class MultiIndex:
    ordinal: int
    label: Hashable

    def __post_init__(self):
        if self.ordinal < 0:
            raise InvalidSpec(f"negative ordinal {self.ordinal}")


@dataclass(frozen=True)
class ConfigurationBasis:
    """Ordered configurations; ordinal 0 is the reference |Phi>."""

    configs: tuple[MultiIndex, ...]
    levels: tuple[int, ...]
    _lookup: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.configs) == 0:
            raise InvalidSpec("empty configuration basis")
        if len(self.levels) != len(self.configs):
            raise InvalidSpec("levels and configs differ in length")
        for pos, c in enumerate(self.configs):
            if c.ordinal != pos:
                raise InvalidSpec(f"config at position {pos} carries ordinal {c.ordinal}")
        if self.levels[0] != 0:
            raise InvalidSpec("reference configuration must have excitation level 0")
        if any(lv < 1 for lv in self.levels[1:]):
            raise InvalidSpec("every excited configuration needs level >= 1")
        lookup = {c.label: c.ordinal for c in self.configs}
        if len(lookup) != len(self.configs):
            raise InvalidSpec("configuration labels are not unique")
        object.__setattr__(self, "_lookup", lookup)

    @classmethod
    def from_labels(cls, labels: Sequence[Hashable], levels: Sequence[int]) -> "ConfigurationBasis":
        configs = tuple(MultiIndex(i, lab) for i, lab in enumerate(labels))
        return cls(configs, tuple(int(lv) for lv in levels))

    @property
    def dimension(self) -> int:
        return len(self.configs)

    @property
    def max_level(self) -> int:
        return max(self.levels)

    def index_of(self, label: Hashable) -> int:
        return self._lookup[label]

    def label(self, ordinal: int) -> Hashable:
        return self.configs[ordinal].label

    def unit(self, ordinal: int) -> np.ndarray:
        v = np.zeros(self.dimension, dtype=complex)
        v[ordinal] = 1.0
        return v

    @property
    def reference(self) -> np.ndarray:
        return self.unit(0)

    def excitation_operator(self) -> np.ndarray:
        """Diagonal operator counting the excitation level of each configuration."""
        return np.diag(np.asarray(self.levels, dtype=complex))


@dataclass(frozen=True)
class OperatorFamily:
    """Creation operators ``C_j^+`` for every configuration (``C_0^+ = I``)."""

    basis: ConfigurationBasis
    creation_ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        d = self.basis.dimension
        if len(self.creation_ops) != d:
            raise InvalidSpec("one creation operator per configuration is required")
        for c in self.creation_ops:
            if c.shape != (d, d):
                raise InvalidSpec(f"creation operator of shape {c.shape} in a {d}-dim basis")
            c.setflags(write=False)

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def creation(self, j: int) -> np.ndarray:
        return self.creation_ops[j]

    def annihilation(self, j: int) -> np.ndarray:
        return adjoint(self.creation_ops[j])

    def defects(self) -> dict[str, float]:
        return family_defects(self)

    def verify(self, tol: float = ALGEBRA_TOL) -> dict[str, float]:
        """Raise :class:`InvariantViolation` on the first property above ``tol``."""
        found = self.defects()
        for name, value in found.items():
            if value > tol:
                raise InvariantViolation(name, value)
        return found


def _monomial_form(c: np.ndarray):
    """(target rows, values) if every column holds at most one nonzero, else None."""
    nz = c != 0
    if np.any(nz.sum(axis=0) > 1):
        return None
    has = nz.any(axis=0)
    rows = np.where(has, nz.argmax(axis=0), -1)
    vals = np.where(has, c[np.maximum(rows, 0), np.arange(c.shape[1])], 0.0)
    return rows, vals


def _commutator_defect(ops: Sequence[np.ndarray]) -> float:
    """Largest entry of ``[C_a, C_b]`` over all pairs, relative to ``max|C_a C_b|``.

    Bosonic ladder powers have entries growing like sqrt(binomial), so an
    absolute threshold would flag pure roundoff once ``D`` reaches a few dozen.
    """
    n = len(ops)
    forms = [_monomial_form(c) for c in ops]
    worst = 0.0
    if n and all(f is not None for f in forms):
        rows = np.stack([f[0] for f in forms])  # (n_ops, D)
        vals = np.stack([f[1] for f in forms])
        for a in range(n):
            ra, va = rows[a], vals[a]
            rb, vb = rows[a + 1 :], vals[a + 1 :]
            # (C_a C_b) e_k = vb[k] va[rb[k]] e_{ra[rb[k]]}
            ok = rb >= 0
            ab_rows = np.where(ok, ra[np.maximum(rb, 0)], -1)
            ab_vals = np.where(ok & (ab_rows >= 0), va[np.maximum(rb, 0)] * vb, 0.0)
            # (C_b C_a) e_k = va[k] vb[ra[k]] e_{rb[ra[k]]}
            ok = (ra >= 0)[None, :]
            ba_rows = np.where(ok, rb[:, np.maximum(ra, 0)], -1)
            ba_vals = np.where(ok & (ba_rows >= 0), vb[:, np.maximum(ra, 0)] * va[None, :], 0.0)
            diff = np.where(
                ab_rows == ba_rows,
                np.abs(ab_vals - ba_vals),
                np.maximum(np.abs(ab_vals), np.abs(ba_vals)),
            )
            scale = max(float(np.abs(ab_vals).max(initial=0.0)), 1.0)
            worst = max(worst, float(diff.max(initial=0.0)) / scale)
        return worst
    for a in range(n):
        for b in range(a + 1, n):
            ab = ops[a] @ ops[b]
            comm = ab - ops[b] @ ops[a]
            worst = max(worst, float(np.abs(comm).max()) / max(float(np.abs(ab).max()), 1.0))
    return worst


def family_defects(family: OperatorFamily) -> dict[str, float]:
    """Entrywise max-norm defects of the four algebraic properties."""
    basis = family.basis
    d = basis.dimension
    ops = family.creation_ops
    # columns C_j^+ |Phi> stacked as a matrix: must be the identity
    generated = np.stack([c[:, 0] for c in ops], axis=1)
    reference_action = float(np.abs(generated - np.eye(d)).max())
    # C_j^- |Phi> is the conjugated first row of C_j^+, which is also <Phi| C_j^+
    first_rows = np.stack([c[0, :] for c in ops[1:]]) if d > 1 else np.zeros((0, d))
    annihilation = float(np.abs(first_rows).max(initial=0.0))
    # [C^-, C^-] = -([C^+, C^+])^dagger entrywise, so one scan covers both
    commutation = _commutator_defect(ops[1:])
    completeness = float(np.abs(generated @ adjoint(generated) - np.eye(d)).max())
    return {
        "reference_action": reference_action,
        "annihilation": annihilation,
        "commutation": commutation,
        "completeness": completeness,
    }


def build_operator_family(
    basis: ConfigurationBasis,
    model_rule: Callable[[MultiIndex], Any],
    tol: float = ALGEBRA_TOL,
) -> OperatorFamily:
    """Assemble ``C_j^+`` from ``model_rule`` and verify the ladder algebra.

    ``model_rule`` is called for every excited configuration and must return
    its creation matrix; the reference gets the identity.
    """
    d = basis.dimension
    ops = [np.eye(d, dtype=complex)]
    for cfg in basis.configs[1:]:
        ops.append(as_operator(model_rule(cfg)).copy())
    family = OperatorFamily(basis, tuple(ops))
    family.verify(tol)
    return family


# ---------------------------------------------------------------------------
# concrete families
# ---------------------------------------------------------------------------


def raising_matrix(d: int) -> np.ndarray:
    """Truncated bosonic ``a^dagger`` on ``d`` levels."""
    a_dag = np.zeros((d, d), dtype=complex)
    n = np.arange(d - 1)
    a_dag[n + 1, n] = np.sqrt(n + 1.0)
    return a_dag


def bosonic_basis(d: int) -> ConfigurationBasis:
    if d < 2:
        raise InvalidSpec(f"bosonic basis needs at least 2 levels, got {d}")
    return ConfigurationBasis.from_labels(list(range(d)), list(range(d)))


def bosonic_family(d: int) -> OperatorFamily:
    """``C_j^+ = (a^dagger)^j / sqrt(j!)`` truncated to ``d`` levels."""
    basis = bosonic_basis(d)

    def rule(cfg: MultiIndex) -> np.ndarray:
        # <n+j| (a^dagger)^j / sqrt(j!) |n> = sqrt(C(n+j, j)), from exact integers
        j = cfg.ordinal
        m = np.zeros((d, d), dtype=complex)
        for n in range(d - j):
            m[n + j, n] = math.sqrt(math.comb(n + j, j))
        return m

    return build_operator_family(basis, rule)


def spin_basis(n_sites: int) -> ConfigurationBasis:
    """Configurations labelled by the sorted tuple of flipped (up) sites."""
    if n_sites < 1:
        raise InvalidSpec(f"spin basis needs at least one site, got {n_sites}")
    labels, levels = [], []
    for k in range(n_sites + 1):
        for flipped in itertools.combinations(range(n_sites), k):
            labels.append(flipped)
            levels.append(k)
    return ConfigurationBasis.from_labels(labels, levels)


def spin_family(n_sites: int) -> OperatorFamily:
    """Products of single-site raisers over the flipped-site set (all-down reference)."""
    basis = spin_basis(n_sites)
    d = basis.dimension
    sets = [frozenset(c.label) for c in basis.configs]
    index = {s: i for i, s in enumerate(sets)}

    def rule(cfg: MultiIndex) -> np.ndarray:
        flip = sets[cfg.ordinal]
        m = np.zeros((d, d), dtype=complex)
        for col, occupied in enumerate(sets):
            if not occupied & flip:
                m[index[occupied | flip], col] = 1.0
        return m

    return build_operator_family(basis, rule)


def tensor_basis(a: ConfigurationBasis, b: ConfigurationBasis) -> ConfigurationBasis:
    labels, levels = [], []
    for ca, la in zip(a.configs, a.levels):
        for cb, lb in zip(b.configs, b.levels):
            labels.append((ca.label, cb.label))
            levels.append(la + lb)
    return ConfigurationBasis.from_labels(labels, levels)


def tensor_family(a: OperatorFamily, b: OperatorFamily) -> OperatorFamily:
    """``C_(j,k)^+ = C_j^+ (x) C_k^+`` in kron ordering; ``(0, 0)`` stays the reference."""
    basis = tensor_basis(a.basis, b.basis)
    db = b.dimension

    def rule(cfg: MultiIndex) -> np.ndarray:
        ia, ib = divmod(cfg.ordinal, db)
        return np.kron(a.creation(ia), b.creation(ib))

    return build_operator_family(basis, rule)
