"""Run configuration documents: schema, defaults and validation.

A config is a JSON object::

    {
      "model": {"kind": "oscillator", "lambda": 0.1, "D": 16},
      "truncation": "full",
      "solver": {"tolerance": 1e-10, "max_iterations": 200, "damping": 1.0},
      "checks": {"ths_verify": true, "dictionary": true},
      "output": {"directory": "ccm-out", "formats": ["json", "csv"]},
      "seed": 0
    }

Only ``model`` is required. Model kinds: ``oscillator`` (``lambda``, ``D``),
``spin_chain`` (``N``, ``g``, ``J``) and ``composite`` (``parts``: two model
objects). Truncation is ``"full"``, ``{"scheme": "sub_n", "n": 2}`` or
``{"scheme": "explicit", "indices": [1, 2]}``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any

from .ccm_solver import SolverOptions
from .errors import InvalidSpec, SchemaError
from .models import ModelSpec

SCHEMA_VERSION = 1
FORMATS = ("json", "csv")


@dataclass(frozen=True)
class TruncationConfig:
    scheme: str = "full"
    n: int | None = None
    indices: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        if self.scheme == "full":
            return {"scheme": "full"}
        if self.scheme == "sub_n":
            return {"scheme": "sub_n", "n": self.n}
        return {"scheme": "explicit", "indices": list(self.indices)}


@dataclass(frozen=True)
class CheckFlags:
    ths_verify: bool = True
    dictionary: bool = True
    extensivity: bool = False
    oracle: bool = False
    random_draws: int = 0


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "ccm-out"
    formats: tuple[str, ...] = FORMATS


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec
    truncation: TruncationConfig = field(default_factory=TruncationConfig)
    solver: SolverOptions = field(default_factory=SolverOptions)
    checks: CheckFlags = field(default_factory=CheckFlags)
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "truncation": self.truncation.to_dict(),
            "solver": asdict(self.solver),
            "checks": asdict(self.checks),
            "output": {"directory": self.output.directory, "formats": list(self.output.formats)},
            "seed": self.seed,
        }


def _object(node, path: str, allowed: set[str]) -> dict:
    if not isinstance(node, dict):
        raise SchemaError(path or "<root>", "expected an object")
    for key in node:
        if key not in allowed:
            raise SchemaError(f"{path}.{key}" if path else key, "unknown key")
    return node


def _number(node, path: str, *, integer: bool = False, lo=None, hi=None, lo_open=False):
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise SchemaError(path, "expected a number")
    if integer and not (isinstance(node, int) or float(node).is_integer()):
        raise SchemaError(path, "expected an integer")
    value = int(node) if integer else float(node)
    if lo is not None and (value <= lo if lo_open else value < lo):
        raise SchemaError(path, f"must be {'>' if lo_open else '>='} {lo}")
    if hi is not None and value > hi:
        raise SchemaError(path, f"must be <= {hi}")
    return value


def _bool(node, path: str) -> bool:
    if not isinstance(node, bool):
        raise SchemaError(path, "expected a boolean")
    return node


def parse_model(node, path: str = "model") -> ModelSpec:
    node = _object(node, path, {"kind", "lambda", "D", "N", "g", "J", "parts"})
    kind = node.get("kind")
    try:
        if kind == "oscillator":
            _object(node, path, {"kind", "lambda", "D"})
            return ModelSpec.oscillator(
                _number(node.get("lambda", 0.0), f"{path}.lambda", lo=0.0),
                _number(node.get("D", 20), f"{path}.D", integer=True, lo=2),
            )
        if kind == "spin_chain":
            _object(node, path, {"kind", "N", "g", "J"})
            if "N" not in node:
                raise SchemaError(f"{path}.N", "required")
            return ModelSpec.spin_chain(
                _number(node["N"], f"{path}.N", integer=True, lo=2, hi=12),
                _number(node.get("g", 0.0), f"{path}.g"),
                _number(node.get("J", 1.0), f"{path}.J"),
            )
        if kind == "composite":
            _object(node, path, {"kind", "parts"})
            parts = node.get("parts")
            if not isinstance(parts, list) or len(parts) != 2:
                raise SchemaError(f"{path}.parts", "expected a list of two models")
            return ModelSpec.composite(
                parse_model(parts[0], f"{path}.parts[0]"), parse_model(parts[1], f"{path}.parts[1]")
            )
    except InvalidSpec as exc:
        raise SchemaError(path, str(exc)) from exc
    raise SchemaError(f"{path}.kind", "expected one of oscillator, spin_chain, composite")


def _truncation(node, dimension: int) -> TruncationConfig:
    path = "truncation"
    if node == "full":
        return TruncationConfig()
    if isinstance(node, str):
        raise SchemaError(path, "string form must be 'full'")
    node = _object(node, path, {"scheme", "n", "indices"})
    scheme = node.get("scheme")
    if scheme == "full":
        _object(node, path, {"scheme"})
        return TruncationConfig()
    if scheme == "sub_n":
        _object(node, path, {"scheme", "n"})
        if "n" not in node:
            raise SchemaError(f"{path}.n", "required")
        return TruncationConfig("sub_n", n=_number(node["n"], f"{path}.n", integer=True, lo=1))
    if scheme == "explicit":
        _object(node, path, {"scheme", "indices"})
        raw = node.get("indices")
        if not isinstance(raw, list) or not raw:
            raise SchemaError(f"{path}.indices", "expected a non-empty list")
        idx = tuple(_number(i, f"{path}.indices", integer=True) for i in raw)
        if any(i < 1 or i >= dimension for i in idx):
            raise SchemaError(f"{path}.indices", f"indices must lie in 1..{dimension - 1}")
        if len(set(idx)) != len(idx):
            raise SchemaError(f"{path}.indices", "duplicate index")
        return TruncationConfig("explicit", indices=idx)
    raise SchemaError(f"{path}.scheme", "expected full, sub_n or explicit")


def _solver(node) -> SolverOptions:
    path = "solver"
    node = _object(node, path, {"tolerance", "max_iterations", "damping", "continuation", "check_jacobian"})
    d = SolverOptions()
    return SolverOptions(
        tolerance=_number(node.get("tolerance", d.tolerance), f"{path}.tolerance", lo=0.0, lo_open=True, hi=1e-2),
        max_iterations=_number(node.get("max_iterations", d.max_iterations), f"{path}.max_iterations",
                               integer=True, lo=1, hi=10_000),
        damping=_number(node.get("damping", d.damping), f"{path}.damping", lo=0.0, lo_open=True, hi=1.0),
        continuation=_bool(node.get("continuation", d.continuation), f"{path}.continuation"),
        check_jacobian=_bool(node.get("check_jacobian", d.check_jacobian), f"{path}.check_jacobian"),
    )


def _checks(node) -> CheckFlags:
    path = "checks"
    node = _object(node, path, {"ths_verify", "dictionary", "extensivity", "oracle", "random_draws"})
    d = CheckFlags()
    return CheckFlags(
        ths_verify=_bool(node.get("ths_verify", d.ths_verify), f"{path}.ths_verify"),
        dictionary=_bool(node.get("dictionary", d.dictionary), f"{path}.dictionary"),
        extensivity=_bool(node.get("extensivity", d.extensivity), f"{path}.extensivity"),
        oracle=_bool(node.get("oracle", d.oracle), f"{path}.oracle"),
        random_draws=_number(node.get("random_draws", d.random_draws), f"{path}.random_draws",
                             integer=True, lo=0, hi=10_000),
    )


def _output(node) -> OutputConfig:
    path = "output"
    node = _object(node, path, {"directory", "formats"})
    directory = node.get("directory", OutputConfig.directory)
    if not isinstance(directory, str) or not directory:
        raise SchemaError(f"{path}.directory", "expected a non-empty string")
    formats = node.get("formats", list(FORMATS))
    if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
        raise SchemaError(f"{path}.formats", f"expected a list drawn from {list(FORMATS)}")
    return OutputConfig(directory, tuple(formats))


def config_from_tree(tree: Any) -> RunConfig:
    tree = _object(tree, "", {"model", "truncation", "solver", "checks", "output", "seed"})
    if "model" not in tree:
        raise SchemaError("model", "required")
    model = parse_model(tree["model"])
    return RunConfig(
        model=model,
        truncation=_truncation(tree.get("truncation", "full"), model.dimension),
        solver=_solver(tree.get("solver", {})),
        checks=_checks(tree.get("checks", {})),
        output=_output(tree.get("output", {})),
        seed=_number(tree.get("seed", 0), "seed", integer=True, lo=0),
    )


def parse_config(text: str) -> RunConfig:
    """Validate a JSON config document; unknown keys are rejected with their path."""
    try:
        tree = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("<root>", f"invalid JSON: {exc}") from exc
    return config_from_tree(tree)
