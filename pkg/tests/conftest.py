import numpy as np
import pytest

from periodic_secretary import GPHyperparams, Observation


@pytest.fixture
def unit_hyper():
    """1-d hyperparameters with prior variance 1.01."""
    return GPHyperparams(lengthscales=np.array([1.0]), signal_variance=1.0, noise_variance=0.01)


def make_observations(features) -> list[Observation]:
    """Wrap an (n, d) array (or list of scalars) as a list of observations."""
    feats = np.atleast_1d(np.asarray(features, dtype=float))
    if feats.ndim == 1:
        feats = feats[:, None]
    return [Observation(i, feats[i]) for i in range(feats.shape[0])]


def random_hyper(rng, d=1) -> GPHyperparams:
    return GPHyperparams(
        lengthscales=rng.uniform(0.3, 2.0, size=d),
        signal_variance=rng.uniform(0.5, 2.0),
        noise_variance=rng.uniform(0.01, 0.3),
    )
