import pytest

from impsim.models import generate_family, save_model


@pytest.fixture(scope="session")
def struct_models():
    return generate_family("struct", 100_000, seed=41)


@pytest.fixture(scope="session")
def owf_models():
    return generate_family("owf", 100_000, seed=42)


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory, struct_models, owf_models):
    d = tmp_path_factory.mktemp("models")
    for name, model in {**struct_models, **owf_models}.items():
        save_model(model, d / f"{name}.impm")
    return d
