"""
Shared pytest fixtures.
"""

import os

import numpy as np
import pytest
import torch

from src.config import GripperSpec
from tests.helpers import small_network


@pytest.fixture
def gripper():
    return GripperSpec()


@pytest.fixture
def network():
    return small_network()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def generator():
    g = torch.Generator()
    g.manual_seed(7)
    return g


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch, tmp_path):
    """Keep EDGEGRASP_* variables and a stray .env file out of every test."""
    for name in list(os.environ):
        if name.startswith("EDGEGRASP_"):
            monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)
