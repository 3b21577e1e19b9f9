import numpy as np
import pytest

from randcorr_hub.infra.storage import storage


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def clean_storage_cache():
    storage.clear_cache()
    yield
    storage.clear_cache()
