"""Shared fixtures: boxes and session-cached Monte Carlo batches."""

import numpy as np
import pytest

from boxpath import BoxDims, montecarlo


@pytest.fixture(scope="session")
def cube() -> BoxDims:
    return BoxDims(1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def slab() -> BoxDims:
    return BoxDims(1.0, 0.1, 1.0)


@pytest.fixture(scope="session")
def rod() -> BoxDims:
    return BoxDims(0.2, 1.0, 0.2)


@pytest.fixture(scope="session")
def skew_box() -> BoxDims:
    return BoxDims(1.3, 0.8, 1.1)


@pytest.fixture(scope="session")
def rays_batch_cube(cube) -> montecarlo.TrajectoryBatch:
    """2M ray trajectories on the unit cube, shared across tests."""
    return montecarlo.sample_rays(cube, 2_000_000, 424242, "cube-components", 1)


@pytest.fixture(scope="session")
def chords_batch_cube(cube) -> montecarlo.TrajectoryBatch:
    """2M surface chords on the unit cube, shared across tests."""
    return montecarlo.sample_chords(cube, 2_000_000, 424243, 1)


def binned_l1(density, edges: np.ndarray, counts: np.ndarray) -> float:
    """L1 distance between a unit density and a histogram, over the bins."""
    centers = 0.5 * (edges[:-1] + edges[1:])
    widths = np.diff(edges)
    emp = counts / max(1, counts.sum()) / widths
    return float(0.5 * np.sum(np.abs(emp - density.interp(centers)) * widths))
