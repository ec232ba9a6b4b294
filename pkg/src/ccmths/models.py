"""Small exactly diagonalizable Hamiltonians with their ladder families."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config_space import (
    ConfigurationBasis,
    OperatorFamily,
    bosonic_family,
    hermiticity_defect,
    spin_family,
    tensor_family,
)
from .errors import DimensionOverflow, InvalidSpec

DEFAULT_DIMENSION_CAP = 4096
KINDS = ("oscillator", "spin_chain", "composite")


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of a bundled model.

    Oscillator: ``-d^2/dx^2 + x^2 + coupling * x^4`` on ``levels`` oscillator
    levels. Spin chain: ``-exchange * sum z_i z_{i+1} - field * sum x_i`` on
    ``sites`` spins with open boundaries. Composite: the two ``parts`` side by
    side without interaction.
    """

    kind: str
    coupling: float = 0.0
    levels: int = 20
    sites: int = 2
    field: float = 0.0
    exchange: float = 1.0
    parts: tuple["ModelSpec", ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown model kind {self.kind!r}")
        if self.kind == "oscillator":
            if self.levels < 2:
                raise InvalidSpec(f"oscillator needs at least 2 levels, got {self.levels}")
            if self.coupling < 0:
                raise InvalidSpec(f"quartic coupling must be >= 0, got {self.coupling}")
        elif self.kind == "spin_chain":
            if self.sites < 2:
                raise InvalidSpec(f"spin chain needs at least 2 sites, got {self.sites}")
        elif len(self.parts) != 2:
            raise InvalidSpec("composite model needs exactly two parts")

    @classmethod
    def oscillator(cls, coupling: float = 0.0, levels: int = 20) -> "ModelSpec":
        return cls("oscillator", coupling=float(coupling), levels=int(levels))

    @classmethod
    def spin_chain(cls, sites: int, field: float, exchange: float = 1.0) -> "ModelSpec":
        return cls("spin_chain", sites=int(sites), field=float(field), exchange=float(exchange))

    @classmethod
    def composite(cls, a: "ModelSpec", b: "ModelSpec") -> "ModelSpec":
        return cls("composite", parts=(a, b))

    @property
    def dimension(self) -> int:
        if self.kind == "oscillator":
            return self.levels
        if self.kind == "spin_chain":
            return 2**self.sites
        return self.parts[0].dimension * self.parts[1].dimension

    @property
    def name(self) -> str:
        if self.kind == "oscillator":
            return f"oscillator(lambda={self.coupling:g},D={self.levels})"
        if self.kind == "spin_chain":
            return f"ising(N={self.sites},g={self.field:g},J={self.exchange:g})"
        return f"{self.parts[0].name}+{self.parts[1].name}"

    @property
    def interacting(self) -> bool:
        if self.kind == "oscillator":
            return self.coupling != 0.0
        if self.kind == "spin_chain":
            return self.field != 0.0
        return any(p.interacting for p in self.parts)

    def to_dict(self) -> dict:
        if self.kind == "oscillator":
            return {"kind": "oscillator", "lambda": self.coupling, "D": self.levels}
        if self.kind == "spin_chain":
            return {"kind": "spin_chain", "N": self.sites, "g": self.field, "J": self.exchange}
        return {"kind": "composite", "parts": [p.to_dict() for p in self.parts]}


@dataclass(frozen=True)
class ModelInstance:
    hamiltonian: np.ndarray
    basis: ConfigurationBasis
    ops: OperatorFamily
    name: str
    spec: ModelSpec | None = None

    def __post_init__(self):
        d = self.basis.dimension
        if self.hamiltonian.shape != (d, d):
            raise InvalidSpec(f"Hamiltonian shape {self.hamiltonian.shape} does not match dimension {d}")
        defect = hermiticity_defect(self.hamiltonian)
        if defect > 1e-12:
            raise InvalidSpec(f"Hamiltonian is not Hermitian (defect {defect:.2e})")
        self.hamiltonian.setflags(write=False)

    @property
    def dimension(self) -> int:
        return self.basis.dimension


def position_power(levels: int, power: int) -> np.ndarray:
    """Exact matrix elements of ``x^power`` projected onto the lowest ``levels`` states.

    ``x = (a + a^dagger)/sqrt(2)`` is built on ``levels + power`` states so the
    product never touches the truncation edge before projection.
    """
    big = levels + power
    n = np.arange(big - 1)
    a = np.zeros((big, big))
    a[n, n + 1] = np.sqrt(n + 1.0)
    x = (a + a.T) / np.sqrt(2.0)
    return np.linalg.matrix_power(x, power)[:levels, :levels].astype(complex)


def oscillator_hamiltonian(coupling: float, levels: int) -> np.ndarray:
    h = np.diag(2.0 * np.arange(levels) + 1.0).astype(complex)
    if coupling:
        h = h + coupling * position_power(levels, 4)
    return h


def ising_hamiltonian(basis: ConfigurationBasis, sites: int, field: float, exchange: float) -> np.ndarray:
    d = basis.dimension
    h = np.zeros((d, d), dtype=complex)
    for cfg in basis.configs:
        up = frozenset(cfg.label)
        spin = [1.0 if q in up else -1.0 for q in range(sites)]
        h[cfg.ordinal, cfg.ordinal] = -exchange * sum(spin[q] * spin[q + 1] for q in range(sites - 1))
        for q in range(sites):
            h[basis.index_of(tuple(sorted(up ^ {q}))), cfg.ordinal] += -field
    return h


def tensor_compose(a: ModelInstance, b: ModelInstance, cap: int = DEFAULT_DIMENSION_CAP) -> ModelInstance:
    """Non-interacting union ``H_A (x) I + I (x) H_B`` with the product family."""
    d = a.dimension * b.dimension
    if d > cap:
        raise DimensionOverflow(f"composite dimension {d} exceeds cap {cap}")
    ops = tensor_family(a.ops, b.ops)
    h = np.kron(a.hamiltonian, np.eye(b.dimension)) + np.kron(np.eye(a.dimension), b.hamiltonian)
    spec = ModelSpec.composite(a.spec, b.spec) if a.spec and b.spec else None
    return ModelInstance(h, ops.basis, ops, f"{a.name}+{b.name}", spec)


def build_model(spec: ModelSpec, cap: int = DEFAULT_DIMENSION_CAP) -> ModelInstance:
    if spec.kind == "oscillator":
        ops = bosonic_family(spec.levels)
        h = oscillator_hamiltonian(spec.coupling, spec.levels)
        return ModelInstance(h, ops.basis, ops, spec.name, spec)
    if spec.kind == "spin_chain":
        if spec.dimension > cap:
            raise DimensionOverflow(f"spin chain dimension {spec.dimension} exceeds cap {cap}")
        ops = spin_family(spec.sites)
        h = ising_hamiltonian(ops.basis, spec.sites, spec.field, spec.exchange)
        return ModelInstance(h, ops.basis, ops, spec.name, spec)
    if spec.dimension > cap:
        raise DimensionOverflow(f"composite dimension {spec.dimension} exceeds cap {cap}")
    return tensor_compose(build_model(spec.parts[0], cap), build_model(spec.parts[1], cap), cap)


# Models the test and acceptance suites iterate over.
BUNDLED_MODELS: dict[str, ModelSpec] = {
    "oscillator-free": ModelSpec.oscillator(0.0, 20),
    "oscillator-l0.1-D16": ModelSpec.oscillator(0.1, 16),
    "oscillator-l0.1-D40": ModelSpec.oscillator(0.1, 40),
    "oscillator-l0.3-D16": ModelSpec.oscillator(0.3, 16),
    "oscillator-l0.3-D40": ModelSpec.oscillator(0.3, 40),
    "ising-N3-g0.2": ModelSpec.spin_chain(3, 0.2),
    "ising-N3-g0.5": ModelSpec.spin_chain(3, 0.5),
    "ising-N4-g0.2": ModelSpec.spin_chain(4, 0.2),
    "ising-N4-g0.5": ModelSpec.spin_chain(4, 0.5),
    "composite-oscillator-ising": ModelSpec.composite(
        ModelSpec.oscillator(0.1, 8), ModelSpec.spin_chain(2, 0.5)
    ),
}


def interacting_models() -> dict[str, ModelSpec]:
    return {k: v for k, v in BUNDLED_MODELS.items() if v.interacting}
