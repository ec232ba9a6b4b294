import functools

import numpy as np
import pytest

from ccmths import ccm_solver as ccm
from ccmths.models import BUNDLED_MODELS, ModelSpec, build_model


@functools.lru_cache(maxsize=None)
def cached_model(spec: ModelSpec):
    return build_model(spec)


@functools.lru_cache(maxsize=None)
def cached_solution(spec: ModelSpec):
    model = cached_model(spec)
    return ccm.solve(model, ccm.full_truncation(model.basis))


# small models for randomized draws: exp(S) stays well conditioned
DRAW_POOL = (
    ModelSpec.oscillator(0.1, 4),
    ModelSpec.oscillator(0.3, 6),
    ModelSpec.oscillator(0.0, 8),
    ModelSpec.oscillator(0.2, 10),
    ModelSpec.spin_chain(2, 0.5),
    ModelSpec.spin_chain(3, 0.3),
    ModelSpec.spin_chain(4, 0.7, exchange=0.5),
    ModelSpec.composite(ModelSpec.oscillator(0.1, 3), ModelSpec.spin_chain(2, 0.4)),
)


def random_draw(rng, scale=0.3):
    """A pool model and a random full-truncation nilpotent cluster operator on it."""
    spec = DRAW_POOL[rng.integers(len(DRAW_POOL))]
    model = cached_model(spec)
    t = ccm.full_truncation(model.basis)
    levels = np.asarray(model.basis.levels[1:], dtype=float)
    vals = scale * (rng.standard_normal(len(t)) + 1j * rng.standard_normal(len(t))) / levels
    return model, ccm.assemble_cluster(ccm.ClusterAmplitudes(vals, t), model.ops)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture(params=sorted(BUNDLED_MODELS), ids=str)
def bundled_spec(request):
    return BUNDLED_MODELS[request.param]
