import json

import pytest

from ccmths.ccm_solver import SolverOptions
from ccmths.errors import SchemaError
from ccmths.runconfig import CheckFlags, OutputConfig, TruncationConfig, parse_config


def _doc(**extra):
    base = {"model": {"kind": "oscillator", "lambda": 0.0, "D": 20}, "truncation": "full"}
    base.update(extra)
    return json.dumps(base)


def _path_of(text):
    with pytest.raises(SchemaError) as info:
        parse_config(text)
    return info.value.path


def test_minimal_config_defaults():
    config = parse_config(_doc())
    assert config.model.coupling == 0.0 and config.model.levels == 20
    assert config.truncation == TruncationConfig()
    assert config.solver == SolverOptions()
    assert config.checks == CheckFlags()
    assert config.output == OutputConfig()
    assert config.seed == 0


def test_round_trip_through_dict():
    config = parse_config(_doc(truncation={"scheme": "sub_n", "n": 2}, seed=7))
    assert parse_config(json.dumps(config.to_dict())) == config


def test_negative_tolerance():
    assert _path_of(_doc(solver={"tolerance": -1})) == "solver.tolerance"


def test_tolerance_upper_bound():
    assert _path_of(_doc(solver={"tolerance": 0.1})) == "solver.tolerance"


def test_iteration_bounds():
    assert _path_of(_doc(solver={"max_iterations": 0})) == "solver.max_iterations"
    assert _path_of(_doc(solver={"max_iterations": 10_001})) == "solver.max_iterations"


def test_explicit_index_out_of_range():
    assert _path_of(_doc(truncation={"scheme": "explicit", "indices": [1, 20]})) == "truncation.indices"


def test_unknown_keys_reported_by_path():
    assert _path_of(_doc(solver={"tol": 1e-8})) == "solver.tol"
    assert _path_of(_doc(extra=1)) == "extra"
    assert _path_of(json.dumps({"model": {"kind": "oscillator", "D": 5, "N": 3}})) == "model.N"


def test_model_validation():
    assert _path_of(json.dumps({})) == "model"
    assert _path_of(json.dumps({"model": {"kind": "quantum"}})) == "model.kind"
    assert _path_of(json.dumps({"model": {"kind": "spin_chain", "N": 20}})) == "model.N"
    assert _path_of(json.dumps({"model": {"kind": "oscillator", "lambda": -0.1}})) == "model.lambda"


def test_composite_model():
    doc = {"model": {"kind": "composite", "parts": [
        {"kind": "oscillator", "lambda": 0.1, "D": 4},
        {"kind": "spin_chain", "N": 2, "g": 0.5},
    ]}}
    config = parse_config(json.dumps(doc))
    assert config.model.dimension == 16


def test_invalid_json():
    assert _path_of("{not json") == "<root>"


def test_bad_output_format():
    assert _path_of(_doc(output={"formats": ["xml"]})) == "output.formats"
