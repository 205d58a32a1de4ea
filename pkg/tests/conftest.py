import pytest

from impsim import models as M

# High-quality models are session fixtures so the acceptance suite and the
# Monte Carlo stability checks share one generation pass.

HQ_SAMPLES = 1_000_000
FAST_SAMPLES = 100_000


@pytest.fixture(scope="session")
def struct_models():
    return M.generate_family("struct", HQ_SAMPLES, seed=20240811)


@pytest.fixture(scope="session")
def owf_models():
    return M.generate_family("owf", HQ_SAMPLES, seed=20240812)


@pytest.fixture(scope="session")
def struct_models_fast():
    return M.generate_family("struct", FAST_SAMPLES, seed=31)


@pytest.fixture(scope="session")
def owf_models_fast():
    return M.generate_family("owf", FAST_SAMPLES, seed=32)


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory, struct_models_fast, owf_models_fast):
    """Directory with every family's model files, for CLI runs."""
    d = tmp_path_factory.mktemp("models")
    for name, model in {**struct_models_fast, **owf_models_fast}.items():
        M.save_model(model, d / f"{name}.impm")
    return d
