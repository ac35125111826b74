"""
Shared fixtures: geometries, blocks and verification grids
"""

import math

import pytest

from cone_rigidity.models import ConeGeometry, Coupled2Block, Coupled3Block, ScalarBlock
from cone_rigidity.services.verify import ChartGrid


@pytest.fixture
def torus_geometry():
    """n = 3, beta = 2 (cone angle pi), circle of length 2pi"""
    return ConeGeometry.from_angle(3, alpha=math.pi)


@pytest.fixture
def witness_geometry():
    """n = 3, beta = 0.8 (cone angle above 2pi)"""
    return ConeGeometry(n=3, beta=0.8)


@pytest.fixture
def half_plane_geometry():
    return ConeGeometry(n=4, beta=2.0)


@pytest.fixture
def coupled3():
    return Coupled3Block(lambda_prime=1.0, p=1)


@pytest.fixture
def coupled2():
    return Coupled2Block(p=3)


@pytest.fixture
def scalar():
    return ScalarBlock(mu_prime=0.0, p_prime=1)


@pytest.fixture
def sample_blocks():
    return [
        Coupled3Block(lambda_prime=1.0, p=1),
        Coupled3Block(lambda_prime=4.0, p=-2),
        Coupled2Block(p=1),
        Coupled2Block(p=0),
        ScalarBlock(mu_prime=0.0, p_prime=1),
        ScalarBlock(mu_prime=2.5, p_prime=0),
    ]


@pytest.fixture
def torus_grid(torus_geometry):
    return ChartGrid.default(torus_geometry)


@pytest.fixture
def half_plane_grid(half_plane_geometry):
    return ChartGrid.default(half_plane_geometry)
