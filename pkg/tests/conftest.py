from __future__ import annotations

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from kinhom.potential import cos_well, harmonic_well, separable  # noqa: E402


@pytest.fixture(scope="session")
def cw():
    return cos_well()


@pytest.fixture(scope="session")
def hw():
    return harmonic_well()


@pytest.fixture(scope="session")
def cw2(cw):
    return separable([cw, cw])
