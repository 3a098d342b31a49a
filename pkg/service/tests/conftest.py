from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from qgqa_scorer.app import ServiceConfig, create_app


@pytest.fixture
def client() -> TestClient:
    return TestClient(create_app(ServiceConfig()))
