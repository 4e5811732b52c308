import os
import warnings

import pytest

from lpwus.config import LpWusConfig, LpSsConfig, load_config

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
REFERENCE_CONFIG = os.path.join(REPO_ROOT, "configs", "reference.json")


@pytest.fixture
def reference_path():
    return REFERENCE_CONFIG


@pytest.fixture
def reference_configs():
    return load_config(REFERENCE_CONFIG)


@pytest.fixture
def basic_cfg():
    """One-slot deployment used by most receiver tests."""
    return LpWusConfig(M=2, L=14, L_MO=14, N_seq=4, N_SG_PO=7, N_PO_LO=1)


@pytest.fixture
def basic_lpss():
    return LpSsConfig(M_lpss=2, L_lpss=6, root=5, period_ms=160, offset_ms=40)


@pytest.fixture
def client():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient
    from lpwus.service.app import app
    return TestClient(app)
