"""Batch front end: build a model, solve, verify, and write reports.

Exit codes: 0 when every check passes, 2 when a check fails, 1 when the run
itself errors out (the error is still written into the report).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from . import ccm_solver as ccm
from . import oracle, ths
from .errors import CcmThsError, SchemaError
from .models import ModelInstance, build_model, tensor_compose
from .runconfig import SCHEMA_VERSION, RunConfig, config_from_tree, parse_config

log = logging.getLogger("ccmths")

TOLERANCES = {
    "energy_vs_exact": 1e-8,
    "ground_vector_match": 1e-7,
    "transform_vs_dense_exp": 1e-10,
    "quasi_hermiticity": 1e-10,
    "random_quasi_hermiticity": 1e-12,
    "rehermitized_hermiticity": 1e-8,
    "rehermitized_spectrum": 1e-8,
    "doublet_biorthonormality": 1e-10,
    "doublet_completeness": 1e-8,
    "left_eigenrow": 1e-8,
    "dictionary": 1e-8,
    "extensivity": 1e-8,
    "pi_symmetry": 1e-10,
    "sweep_endpoint": 1e-8,
}
SPECTRUM_ROWS = 10


def _cplx(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _jsonable_label(label):
    if isinstance(label, (tuple, list, frozenset)):
        return [_jsonable_label(x) for x in label]
    return label


def _check(value: float, tolerance: float | None) -> dict:
    value = float(value)
    passed = None if tolerance is None else bool(np.isfinite(value) and value <= tolerance)
    return {"value": value, "tolerance": tolerance, "passed": passed}


@dataclass
class RunReport:
    command: str
    config: dict
    model: dict = field(default_factory=dict)
    energy: float | None = None
    energy_imag: float | None = None
    residuals: dict = field(default_factory=dict)
    amplitudes: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    spectra: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)
    sweep: list = field(default_factory=list)
    error: dict | None = None
    timings: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        if self.error is not None:
            return 1
        if any(c.get("passed") is False for c in self.checks.values()):
            return 2
        return 0

    @property
    def status(self) -> str:
        return {0: "ok", 1: "error", 2: "check_failed"}[self.exit_code]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "status": self.status,
            "exit_code": self.exit_code,
            "config": self.config,
            "model": self.model,
            "energy": self.energy,
            "energy_imag": self.energy_imag,
            "residuals": self.residuals,
            "amplitudes": self.amplitudes,
            "checks": self.checks,
            "spectra": self.spectra,
            "trace": self.trace,
            "sweep": self.sweep,
            "error": self.error,
            "timings": self.timings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


class _Timer:
    def __init__(self, sink: dict, name: str):
        self.sink, self.name = sink, name

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.sink[self.name] = time.perf_counter() - self.t0


def make_truncation(config: RunConfig, model: ModelInstance) -> ccm.TruncationSet:
    t = config.truncation
    if t.scheme == "full":
        return ccm.full_truncation(model.basis)
    if t.scheme == "sub_n":
        return ccm.sub_n_truncation(model.basis, t.n)
    return ccm.explicit_truncation(model.basis, t.indices)


def _truncation_like(truncation: ccm.TruncationSet, model: ModelInstance) -> ccm.TruncationSet:
    """Same scheme on another model (explicit lists do not transfer)."""
    if truncation.scheme == "sub_n":
        return ccm.sub_n_truncation(model.basis, truncation.n)
    return ccm.full_truncation(model.basis)


def _model_summary(model: ModelInstance) -> dict:
    return {"name": model.name, "dimension": model.dimension, "max_level": model.basis.max_level}


def _amplitude_table(model: ModelInstance, solution: ccm.CcmSolution) -> list[dict]:
    rows = []
    for j, s, st in zip(solution.ket.truncation.indices, solution.ket.values, solution.bra.values):
        rows.append({
            "index": int(j),
            "label": _jsonable_label(model.basis.label(j)),
            "level": int(model.basis.levels[j]),
            "ket": _cplx(s),
            "bra": _cplx(st),
        })
    return rows


def ths_checks(model: ModelInstance, solution: ccm.CcmSolution, *, dictionary: bool = True) -> tuple[dict, dict]:
    """Quasi-Hermiticity, re-Hermitization, doublet and dictionary checks for one solve."""
    checks: dict[str, dict] = {}
    full = solution.ket.truncation.scheme == "full"
    triple = ths.triple_from_solution(solution, model)
    h = triple.h_friendly
    checks["quasi_hermiticity"] = _check(ths.quasi_hermiticity_defect(h, triple.theta),
                                         TOLERANCES["quasi_hermiticity"])
    h_s = ths.rehermitize(h, triple.theta)
    checks["rehermitized_hermiticity"] = _check(ths.relative_hermiticity_defect(h_s),
                                                TOLERANCES["rehermitized_hermiticity"])
    exact = np.linalg.eigvalsh(model.hamiltonian)
    reherm = np.sort(np.linalg.eigvals(h_s).real)
    checks["rehermitized_spectrum"] = _check(np.abs(reherm - exact).max(), TOLERANCES["rehermitized_spectrum"])
    doublet = ths.doublet_eigensolve(h)
    checks["doublet_biorthonormality"] = _check(doublet.biorthonormality_defect(),
                                                TOLERANCES["doublet_biorthonormality"])
    checks["doublet_completeness"] = _check(doublet.completeness_defect(), TOLERANCES["doublet_completeness"])
    pi = ths.pi_symmetry_defect(model.hamiltonian, triple.omega)
    herm = ths.transformed_hermiticity_defect(model.hamiltonian, triple.omega)
    checks["pi_symmetry"] = _check(pi, None)
    checks["transformed_hermiticity"] = _check(herm, None)
    consistent = (pi <= TOLERANCES["pi_symmetry"]) == (herm <= 1e-8)
    checks["pi_cooccurrence"] = {"value": float(consistent), "tolerance": None, "passed": bool(consistent)}
    if full:
        row = ccm.assemble_bra(solution.bra, model.ops)[0]
        checks["left_eigenrow"] = _check(np.linalg.norm(row @ h - solution.energy * row),
                                         TOLERANCES["left_eigenrow"])
        if dictionary:
            checks["dictionary"] = _check(ths.ccm_ths_dictionary_check(solution, model), TOLERANCES["dictionary"])
    spectra = {
        "exact": exact[:SPECTRUM_ROWS].tolist(),
        "rehermitized": reherm[:SPECTRUM_ROWS].tolist(),
        "doublet": [_cplx(z) for z in doublet.eigenvalues[:SPECTRUM_ROWS]],
    }
    return checks, spectra


def oracle_checks(model: ModelInstance, solution: ccm.CcmSolution, draws: int, seed: int) -> dict:
    checks: dict[str, dict] = {}
    full = solution.ket.truncation.scheme == "full"
    exact = oracle.exact_ground_energy(model.hamiltonian)
    checks["energy_vs_exact"] = _check(abs(solution.energy - exact), TOLERANCES["energy_vs_exact"] if full else None)
    if full:
        checks["ground_vector_match"] = _check(oracle.ground_vector_match(solution, model),
                                               TOLERANCES["ground_vector_match"])
    s = ccm.assemble_cluster(solution.ket, model.ops)
    dense = oracle.dense_exp_transform(model.hamiltonian, s)
    series = ccm.similarity_transform(model.hamiltonian, s)
    checks["transform_vs_dense_exp"] = _check(np.linalg.norm(series - dense) / np.linalg.norm(dense),
                                              TOLERANCES["transform_vs_dense_exp"])
    if draws:
        rng = np.random.default_rng(seed)
        worst = 0.0
        t = ccm.full_truncation(model.basis)
        for _ in range(draws):
            vals = 0.3 * (rng.standard_normal(len(t)) + 1j * rng.standard_normal(len(t)))
            vals /= np.asarray(model.basis.levels[1:])  # keep exp(S) well conditioned
            sr = ccm.assemble_cluster(ccm.ClusterAmplitudes(vals, t), model.ops)
            hhat = ccm.similarity_transform(model.hamiltonian, sr)
            worst = max(worst, ths.quasi_hermiticity_defect(hhat, ths.metric_from_map(oracle.expm_series(sr))))
        checks["random_quasi_hermiticity"] = _check(worst, TOLERANCES["random_quasi_hermiticity"])
    return checks


def extensivity_check(model: ModelInstance, truncation: ccm.TruncationSet, energy: float,
                      opts: ccm.SolverOptions) -> dict:
    """``E(A+B) - E(A) - E(B)``; a non-composite model is paired with itself."""
    spec = model.spec
    if spec is not None and spec.kind == "composite":
        parts = [build_model(p) for p in spec.parts]
        whole, whole_energy = model, energy
    else:
        parts = [model, model]
        whole = tensor_compose(model, model)
        whole_energy = ccm.solve_ket(whole, _truncation_like(truncation, whole), opts)[1]
    pieces = [ccm.solve_ket(p, _truncation_like(truncation, p), opts)[1] for p in parts]
    return _check(abs(whole_energy - sum(pieces)), TOLERANCES["extensivity"])


def run(config: RunConfig) -> RunReport:
    """build -> ket solve -> bra solve -> requested checks."""
    report = RunReport("solve", config.to_dict())
    t = report.timings
    try:
        with _Timer(t, "build"):
            model = build_model(config.model)
            truncation = make_truncation(config, model)
        report.model = _model_summary(model)
        with _Timer(t, "solve"):
            solution = ccm.solve(model, truncation, config.solver)
        report.energy = solution.energy
        report.energy_imag = solution.energy_imag
        report.residuals = {
            "ket": solution.ket_residual_norm,
            "bra": solution.bra_residual_norm,
            "tolerance": solution.tolerance,
            "max_imag_amplitude": solution.max_imag_amplitude,
        }
        report.amplitudes = _amplitude_table(model, solution)
        report.trace = [
            {"step": r.step, "residual": r.residual, "damping": r.damping, "tau": r.tau}
            for r in solution.iterations
        ]
        report.checks["ket_residual"] = _check(solution.ket_residual_norm, config.solver.tolerance)
        if config.checks.ths_verify:
            with _Timer(t, "ths"):
                found, spectra = ths_checks(model, solution, dictionary=config.checks.dictionary)
            report.checks.update(found)
            report.spectra = spectra
        elif config.checks.dictionary and truncation.scheme == "full":
            report.checks["dictionary"] = _check(ths.ccm_ths_dictionary_check(solution, model),
                                                 TOLERANCES["dictionary"])
        if config.checks.oracle:
            with _Timer(t, "oracle"):
                report.checks.update(oracle_checks(model, solution, config.checks.random_draws, config.seed))
        if config.checks.extensivity:
            with _Timer(t, "extensivity"):
                report.checks["extensivity"] = extensivity_check(model, truncation, solution.energy, config.solver)
    except (CcmThsError, np.linalg.LinAlgError, ValueError) as exc:
        report.error = {"type": type(exc).__name__, "message": str(exc)}
    return report


def sweep_sub_n(config: RunConfig) -> list[dict]:
    """One solve per SUB-n level up to the maximum excitation level."""
    model = build_model(config.model)
    exact = oracle.exact_ground_energy(model.hamiltonian)
    rows = []
    for n in range(1, model.basis.max_level + 1):
        truncation = ccm.sub_n_truncation(model.basis, n)
        row: dict[str, Any] = {"n": n, "size": len(truncation), "scheme": truncation.scheme}
        try:
            amps, energy, trace = ccm.solve_ket(model, truncation, config.solver)
            row.update(energy=energy, error=abs(energy - exact), iterations=len(trace), failure=None)
        except CcmThsError as exc:
            row.update(energy=None, error=None, iterations=None, failure=f"{type(exc).__name__}: {exc}")
        rows.append(row)
    return rows


def run_sweep(config: RunConfig) -> RunReport:
    report = RunReport("sweep-subn", config.to_dict())
    try:
        with _Timer(report.timings, "sweep"):
            model = build_model(config.model)
            report.model = _model_summary(model)
            report.sweep = sweep_sub_n(config)
        last = report.sweep[-1]
        report.energy = last["energy"]
        endpoint = last["error"] if last["error"] is not None else float("inf")
        report.checks["sweep_endpoint"] = _check(endpoint, TOLERANCES["sweep_endpoint"])
    except (CcmThsError, np.linalg.LinAlgError, ValueError) as exc:
        report.error = {"type": type(exc).__name__, "message": str(exc)}
    return report


def solution_from_report(doc: dict) -> tuple[RunConfig, ModelInstance, ccm.CcmSolution]:
    """Rebuild the model and the amplitudes stored in a ``solve`` report."""
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError("schema_version", f"expected {SCHEMA_VERSION}")
    if doc.get("error") is not None:
        raise SchemaError("error", "report records a failed run")
    config = config_from_tree(doc["config"])
    model = build_model(config.model)
    rows = doc.get("amplitudes")
    if not isinstance(rows, list) or not rows:
        raise SchemaError("amplitudes", "expected a non-empty list")
    indices = [int(r["index"]) for r in rows]
    truncation = make_truncation(config, model)
    if list(truncation.indices) != indices:
        raise SchemaError("amplitudes", "indices do not match the configured truncation")
    ket = ccm.ClusterAmplitudes([complex(*r["ket"]) for r in rows], truncation)
    bra = ccm.BraAmplitudes([complex(*r["bra"]) for r in rows], truncation)
    s = ccm.assemble_cluster(ket, model.ops)
    hhat = ccm.similarity_transform(model.hamiltonian, s)
    energy = ccm.energy_functional(hhat)
    ket_res = float(np.abs(ccm.ket_residuals(hhat, truncation, model.ops)).max())
    bra_res = float(np.abs(ccm.bra_residuals(hhat, energy, bra, model.ops)).max())
    sol = ccm.CcmSolution(energy, ket, bra, ket_res, bra_res, config.solver.tolerance,
                          energy_imag=float(hhat[0, 0].imag), transformed=hhat)
    return config, model, sol


def ths_verify(doc: dict) -> RunReport:
    """Defect and dictionary report for a previously solved run."""
    report = RunReport("ths-verify", doc.get("config", {}))
    try:
        with _Timer(report.timings, "ths"):
            config, model, sol = solution_from_report(doc)
            report.model = _model_summary(model)
            report.energy = sol.energy
            report.residuals = {"ket": sol.ket_residual_norm, "bra": sol.bra_residual_norm}
            report.checks["ket_residual"] = _check(sol.ket_residual_norm, config.solver.tolerance)
            found, spectra = ths_checks(model, sol, dictionary=True)
            report.checks.update(found)
            report.spectra = spectra
    except (CcmThsError, np.linalg.LinAlgError, ValueError, KeyError, TypeError) as exc:
        report.error = {"type": type(exc).__name__, "message": str(exc)}
    return report


def run_spectrum(config: RunConfig) -> RunReport:
    report = RunReport("spectrum", config.to_dict())
    try:
        model = build_model(config.model)
        report.model = _model_summary(model)
        eig = oracle.exact_eigensystem(model.hamiltonian)
        report.energy = eig.ground_energy
        report.spectra = {"exact": eig.eigenvalues.real.tolist()}
    except (CcmThsError, np.linalg.LinAlgError, ValueError) as exc:
        report.error = {"type": type(exc).__name__, "message": str(exc)}
    return report


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_report(report: RunReport, directory: str | Path, formats=("json", "csv")) -> list[Path]:
    out = Path(directory)
    written = []
    stem = report.command.replace("-", "_")
    if "json" in formats:
        p = out / f"{stem}.json"
        _atomic_write(p, report.to_json())
        written.append(p)
    if "csv" in formats:
        if report.sweep:
            p = out / "sweep.csv"
            _atomic_write(p, _csv(report.sweep, ["n", "size", "scheme", "energy", "error", "iterations", "failure"]))
            written.append(p)
        if report.amplitudes:
            rows = [
                {"index": r["index"], "label": json.dumps(r["label"]), "level": r["level"],
                 "ket_re": r["ket"][0], "ket_im": r["ket"][1], "bra_re": r["bra"][0], "bra_im": r["bra"][1]}
                for r in report.amplitudes
            ]
            p = out / "amplitudes.csv"
            _atomic_write(p, _csv(rows, list(rows[0])))
            written.append(p)
        if report.energy is not None:
            p = out / "energies.csv"
            _atomic_write(p, _csv([{"model": report.model.get("name"), "energy": report.energy,
                                    "status": report.status}], ["model", "energy", "status"]))
            written.append(p)
    return written


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


def _load_config(args) -> RunConfig:
    config = parse_config(Path(args.config).read_text())
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.verify:
        config = replace(config, checks=replace(config.checks, oracle=True))
    if args.out is not None:
        config = replace(config, output=replace(config.output, directory=args.out))
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccm-ths", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("solve", "solve the ket and bra equations and run the configured checks"),
        ("sweep-subn", "SUB-n sweep from n=1 to the full excitation level"),
        ("spectrum", "exact spectrum of the configured model"),
        ("ths-verify", "defect and dictionary report for a solved run"),
    ]:
        p = sub.add_parser(name, help=help_)
        if name == "ths-verify":
            src = p.add_mutually_exclusive_group(required=True)
            src.add_argument("--report", help="JSON report written by 'solve'")
            src.add_argument("--config")
        else:
            p.add_argument("--config", required=True)
        p.add_argument("--out", help="output directory (overrides output.directory)")
        p.add_argument("--verify", action="store_true", help="enable oracle cross-checks")
        p.add_argument("--seed", type=int, help="seed for randomized check draws")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "ths-verify" and args.report:
            doc = json.loads(Path(args.report).read_text())
            report = ths_verify(doc)
            directory, formats = args.out or str(Path(args.report).parent), ("json",)
        else:
            config = _load_config(args)
            directory, formats = config.output.directory, config.output.formats
            if args.command == "solve":
                report = run(config)
            elif args.command == "sweep-subn":
                report = run_sweep(config)
            elif args.command == "spectrum":
                report = run_spectrum(config)
            else:
                solved = run(config)
                report = ths_verify(json.loads(solved.to_json()))
    except (SchemaError, OSError, json.JSONDecodeError) as exc:
        err = {"status": "error", "exit_code": 1, "error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return 1
    paths = write_report(report, directory, formats)
    summary = {"status": report.status, "energy": report.energy, "written": [str(p) for p in paths]}
    failed = sorted(k for k, c in report.checks.items() if c.get("passed") is False)
    if failed:
        summary["failed_checks"] = failed
    if report.error:
        summary["error"] = report.error
    print(json.dumps(summary, sort_keys=True))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
