import numpy as np
import pytest

from winenose.dataset import (
    SensorArchetype,
    GeneratorConfig,
    default_generator_config,
    generate_synthetic,
)


def exact_config(seed=7, counts=None, bottles=None, tau_a=3.0, tau_d=20.0,
                 amplitudes=None):
    """Config with zero-width ranges, no noise and no jitter: every trace is
    the closed-form archetype curve."""
    counts = counts or {"HQ": 1, "AQ": 1, "LQ": 1}
    bottles = bottles or {k: 1 for k in counts}
    amplitudes = amplitudes or {"HQ": 0.8, "AQ": 1.5, "LQ": 2.5, "Ea": 1.0}
    archetypes = {}
    for label in counts:
        a = amplitudes[label]
        archetypes[label] = tuple(
            SensorArchetype(
                amplitude=(a * (1 + 0.1 * s), a * (1 + 0.1 * s)),
                tau_absorb_s=(tau_a, tau_a),
                tau_desorb_s=(tau_d, tau_d),
            )
            for s in range(6)
        )
    return GeneratorConfig(
        seed=seed,
        archetypes=archetypes,
        counts=counts,
        bottles_per_class=bottles,
        noise_std=0.0,
        bottle_jitter=0.0,
    )


@pytest.fixture(scope="session")
def noiseless_dataset():
    return generate_synthetic(exact_config())


@pytest.fixture(scope="session")
def desk_dataset():
    """Small separable 3-class dataset with bottle structure."""
    cfg = default_generator_config(
        seed=7,
        counts={"HQ": 16, "AQ": 16, "LQ": 16},
        bottles_per_class={"HQ": 4, "AQ": 4, "LQ": 4},
    )
    return generate_synthetic(cfg)


@pytest.fixture(scope="session")
def desk_dataset_4class():
    cfg = default_generator_config(
        seed=11,
        counts={"HQ": 6, "AQ": 6, "LQ": 6, "Ea": 6},
        bottles_per_class={"HQ": 2, "AQ": 2, "LQ": 2, "Ea": 2},
    )
    return generate_synthetic(cfg)


def archetype_curve(t, baseline, drift, amplitude, tau_a, tau_d, t_inject, t_desorb):
    """Independent closed-form copy of the generator response model."""
    t = np.asarray(t, dtype=float)
    g = baseline * (1.0 + drift * t)
    rising = (t >= t_inject) & (t < t_desorb)
    g = g + np.where(rising, amplitude * (1 - np.exp(-(t - t_inject) / tau_a)), 0.0)
    reached = amplitude * (1 - np.exp(-(t_desorb - t_inject) / tau_a))
    g = g + np.where(t >= t_desorb, reached * np.exp(-(t - t_desorb) / tau_d), 0.0)
    return g
