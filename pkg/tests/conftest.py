import numpy as np
import pytest

from sdriesz.spectral import RieszSystem, SpectrumSpec


def random_system(rng, N=32, n_head=4, support=None, tail=True, unstable=1, f_scale=0.3):
    """Random diagonal-plus-rank-one system with a reciprocal tail.

    The head mixes ``unstable`` right-half-plane eigenvalues with stable ones
    that sit well left of the imaginary axis.
    """
    if support is None:
        support = N // 2
    head = []
    for k in range(n_head):
        re = rng.uniform(0.2, 1.5) if k < unstable else -rng.uniform(0.6, 3.0)
        head.append(complex(re, rng.uniform(-3, 3)))
    spec = SpectrumSpec(head, N if tail else n_head, 1.0 if tail else None)
    n = spec.truncation
    b = np.zeros(n, complex)
    m = min(support, n)
    b[:m] = (rng.normal(size=m) + 1j * rng.normal(size=m)) / np.arange(1, m + 1) ** 2
    f = f_scale * (rng.normal(size=n) + 1j * rng.normal(size=n)) / np.sqrt(n)
    return RieszSystem(spec, b, f)


def sector_system(rng, alpha=0.5, delta=np.pi / 4, N=60):
    """Random system whose spectrum covers every region the tail bounds split on.

    In-sector unstable modes come first, then modes with ``Re <= -alpha`` and
    modes inside the left cone, then a reciprocal tail.
    """
    head = [complex(rng.uniform(0.1, 2), rng.uniform(-2, 2)) for _ in range(2)]
    for _ in range(4):
        head.append(complex(-alpha - rng.uniform(0, 3), rng.uniform(-20, 20)))
    for _ in range(4):
        r = rng.uniform(0.6, 30)
        phi = np.pi - rng.uniform(0, np.pi / 2 - delta) * rng.choice([-1, 1])
        head.append(r * np.exp(1j * phi))
    spec = SpectrumSpec(head, N, 1.0)
    b = (rng.normal(size=N) + 1j * rng.normal(size=N)) / np.arange(1, N + 1)
    f = 0.1 * rng.normal(size=N)
    return RieszSystem(spec, b, f, alpha=alpha, delta=delta)


def scalar_system(lam=-1.0, b=1.0, f=-1.0):
    return RieszSystem(SpectrumSpec([lam], 1), [b], [f])


def dense_A(sys):
    return np.diag(sys.lam) + np.outer(sys.b, sys.f)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
