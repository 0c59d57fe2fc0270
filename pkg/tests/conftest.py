"""Shared fixtures: the expensive artifacts (kernel profiles, empirical
constants) are built once per session and reused across test modules."""

import numpy as np
import pytest

from fracheat.kernels import FracParams, FreeKernelProfile, verify_I_bound


@pytest.fixture(scope="session")
def cauchy_params():
    # alpha = 1/2, n = 1: the case with a closed-form kernel to test against
    return FracParams(alpha=0.5, n=1)


@pytest.fixture(scope="session")
def cauchy_profile(cauchy_params):
    return FreeKernelProfile(cauchy_params)


@pytest.fixture(scope="session")
def cauchy_c1_report(cauchy_params):
    return verify_I_bound(cauchy_params)


def poisson_1d(t, r):
    """Closed form of the alpha = 1/2, n = 1 kernel."""
    return (1.0 / np.pi) * t / (t * t + np.asarray(r, dtype=float) ** 2)
