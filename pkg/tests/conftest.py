"""Shared fixtures and helpers: one moderately sized end-to-end run reused
by every test that needs trained models, finite-difference gradient
utilities, and a hypothesis profile without deadlines (numpy-heavy bodies
have noisy timings)."""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from granucast.pipeline import PipelineConfig, default_learner_configs, run_cv, run_forecast
from granucast.sunflower import OptimizerConfig
from granucast.synth import SynthConfig, write_csv
from granucast.timeseries import interpolate_gaps, load_series

settings.register_profile(
    "granucast",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("granucast")


SYNTH_SEED = 5


def small_pipeline_config(seed: int = SYNTH_SEED) -> PipelineConfig:
    """Desk-scale settings sized so the whole pipeline runs in seconds.

    The learning rate and batch size are raised from the production
    defaults because the desk networks see only ~150 training samples;
    the defaults are tuned for far longer series.
    """
    learners = {
        kind: dataclasses.replace(
            cfg,
            epochs=150,
            learning_rate=0.05,
            batch_size=16,
            boosting_rounds=50,
            tree_count=50,
        )
        for kind, cfg in default_learner_configs(seed, scale="desk").items()
    }
    return PipelineConfig(
        learners=learners,
        optimizer=OptimizerConfig(population=60, iterations=60, rng_seed=seed + 10),
    )


def cheap_pipeline_config(seed: int = SYNTH_SEED) -> PipelineConfig:
    """Settings for structure checks where accuracy is irrelevant."""
    learners = {
        kind: dataclasses.replace(
            cfg, epochs=3, batch_size=32, boosting_rounds=10, tree_count=10
        )
        for kind, cfg in default_learner_configs(seed, scale="desk").items()
    }
    return PipelineConfig(
        learners=learners,
        optimizer=OptimizerConfig(population=16, iterations=10, rng_seed=seed + 10),
    )


def sequence_batch_loss(model, x_seq, y) -> float:
    preds, _ = model.forward_sequences(x_seq)
    return float(((preds - y) ** 2).mean())


def numeric_gradient(model, x_seq, y, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of the batch loss over all parameters."""
    theta = model.parameter_vector()
    grad = np.empty_like(theta)
    probe = theta.copy()
    for i in range(theta.size):
        probe[i] = theta[i] + step
        model.set_parameter_vector(probe)
        upper = sequence_batch_loss(model, x_seq, y)
        probe[i] = theta[i] - step
        model.set_parameter_vector(probe)
        lower = sequence_batch_loss(model, x_seq, y)
        probe[i] = theta[i]
        grad[i] = (upper - lower) / (2.0 * step)
    model.set_parameter_vector(theta)
    return grad


def gradient_rel_err(model_cls, config, rng, record_width: int = 2, lag: int = 4, batch: int = 3) -> float:
    """Relative L2 gap between analytic and numeric gradients on one instance."""
    model = model_cls(config, record_width, lag)
    model.set_parameter_vector(rng.normal(scale=0.4, size=model.parameter_vector().size))
    x_seq = rng.normal(size=(batch, lag, record_width))
    y = rng.normal(size=batch)
    model.loss_and_grads(x_seq, y)
    analytic = model.gradient_vector()
    numeric = numeric_gradient(model, x_seq, y)
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)), 1e-12)
    return float(np.linalg.norm(analytic - numeric)) / scale


@pytest.fixture(scope="session")
def synth_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "synthetic.csv"
    write_csv(path, SynthConfig(samples=7200, seed=SYNTH_SEED))
    return path


@pytest.fixture(scope="session")
def synth_series(synth_csv):
    return interpolate_gaps(load_series(synth_csv))


@pytest.fixture(scope="session")
def pipeline_config():
    return small_pipeline_config()


@pytest.fixture(scope="session")
def forecast_run(synth_series, pipeline_config):
    return run_forecast(synth_series, pipeline_config)


@pytest.fixture(scope="session")
def cv_report(synth_series):
    return run_cv(synth_series, cheap_pipeline_config(), k=5)
