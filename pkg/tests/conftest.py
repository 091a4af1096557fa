import numpy as np
import pytest


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None, support: int | None = None) -> np.ndarray:
    """Random mixed state, optionally confined to the lowest ``support`` levels."""
    k = support or dim
    r = rank or k
    g = rng.normal(size=(k, r)) + 1j * rng.normal(size=(k, r))
    small = g @ g.conj().T
    small /= np.trace(small).real
    rho = np.zeros((dim, dim), dtype=complex)
    rho[:k, :k] = small
    return rho


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + g.conj().T)


def ket(dim: int, n: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def proj(dim: int, i: int, j: int | None = None) -> np.ndarray:
    j = i if j is None else j
    return np.outer(ket(dim, i), ket(dim, j).conj())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1][1:])):
            terminalreporter.write_line(line)
