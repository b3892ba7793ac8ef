import numpy as np
import pytest

from ktorus import ConformalFactor, Lattice


def random_cf(rng, degree=3, amp=0.08, lattice=None):
    """Band-limited random real mu with geometrically damped modes."""
    coeffs = {}
    for k1 in range(-degree, degree + 1):
        for k2 in range(-degree, degree + 1):
            if (k1, k2) <= (0, 0):
                continue
            scale = amp * 0.5 ** (abs(k1) + abs(k2) - 1)
            coeffs[(k1, k2)] = scale * complex(rng.standard_normal(),
                                               rng.standard_normal())
    return ConformalFactor(lattice, coeffs)


def liouville_fit(degree=16, n=64):
    """mu = 0.5 log(1.2 + 0.2 cos(2 pi x) + 0.3 cos(2 pi y)), truncated.

    The log has geometrically decaying modes, so the truncation error is
    far below the tolerances used anywhere in the suite.
    """
    x = np.arange(n) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    lam = 1.2 + 0.2 * np.cos(2 * np.pi * X) + 0.3 * np.cos(2 * np.pi * Y)
    C = np.fft.fft2(0.5 * np.log(lam)) / n ** 2
    k = (np.fft.fftfreq(n) * n).astype(int)
    coeffs = {}
    for i in range(n):
        for j in range(n):
            if max(abs(k[i]), abs(k[j])) <= degree and abs(C[i, j]) > 1e-17:
                coeffs[(k[i], k[j])] = complex(C[i, j])
    return ConformalFactor(coeffs=coeffs)


@pytest.fixture(scope="session")
def cf_flat():
    return ConformalFactor(coeffs={})


@pytest.fixture(scope="session")
def cf_rotation():
    # mu = 0.1 cos(2 pi y)
    return ConformalFactor(coeffs={(0, 1): 0.05})


@pytest.fixture(scope="session")
def cf_generic():
    return ConformalFactor(coeffs={(1, 0): 0.1, (1, 2): 0.075})


@pytest.fixture(scope="session")
def cf_asym():
    # three modes with generic phases: no central symmetry, so the disk
    # obstruction integrals are not forced to vanish
    return ConformalFactor(coeffs={
        (1, 0): 0.1 * np.exp(0.3j),
        (1, 2): 0.075j,
        (0, 1): 0.05 * np.exp(0.9j),
    })


@pytest.fixture(scope="session")
def cf_liouville():
    return liouville_fit()
