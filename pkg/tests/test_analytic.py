import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from aqec.analytic import (
    AnalyticSolver,
    LossChannelSet,
    build_diagonal_generator,
    evolve,
    evolve_series,
    solve_diagonal,
)
from aqec.codes import named_code
from aqec.core import (
    ConfigurationError,
    DiagonalVector,
    FockDensityMatrix,
    ProjectorLadder,
    StructuralError,
    annihilation,
    dissipator,
)
from aqec.fidelity import cardinal_states

from conftest import proj, random_density

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def liouvillian(dim, channels, ladder, lam):
    """Column-stacked superoperator of the reduced equation built from matrix products."""
    basis = []
    for k in range(dim * dim):
        e = np.zeros(dim * dim, dtype=complex)
        e[k] = 1.0
        rho = e.reshape(dim, dim, order="F")
        out = np.zeros((dim, dim), dtype=complex)
        for n, eta in channels.orders.items():
            out += 0.5 * eta * dissipator(rho, np.linalg.matrix_power(annihilation(dim), n))
        if lam:
            out += 0.5 * lam * dissipator(rho, ladder.operator())
        basis.append(out.reshape(-1, order="F"))
    return np.array(basis).T


def test_two_level_generators():
    single = LossChannelSet()
    g0 = build_diagonal_generator(0, single, None, 0.0, dim=2)
    assert np.allclose(g0.matrix, [[0, 1], [0, -1]])
    g1 = build_diagonal_generator(1, single, None, 0.0, dim=2)
    assert np.allclose(g1.matrix, [[-0.5]])
    lad = ProjectorLadder.from_terms(2, {1: 1.0})
    g = build_diagonal_generator(0, single, lad, 100.0)
    assert np.allclose(g.matrix, [[-100, 1], [100, -1]])


def test_generator_errors():
    with pytest.raises(ConfigurationError):
        build_diagonal_generator(0, LossChannelSet(), None, 5.0, dim=3)
    with pytest.raises(ConfigurationError):
        AnalyticSolver(3, LossChannelSet(), None, 1.0)
    gen = build_diagonal_generator(1, LossChannelSet(), None, 0.0, dim=3)
    with pytest.raises(StructuralError):
        solve_diagonal(gen, DiagonalVector(0, np.ones(3)), 0.1)


def test_solve_diagonal_free_decay():
    gen = build_diagonal_generator(0, LossChannelSet(), None, 0.0, dim=2)
    init = DiagonalVector(0, np.array([0.0, 1.0]))
    assert np.allclose(solve_diagonal(gen, init, 0.0).values, init.values)
    out = solve_diagonal(gen, init, 0.6).values
    assert np.allclose(out, [1 - math.exp(-0.6), math.exp(-0.6)], atol=1e-12)
    assert out.real.round(4).tolist() == [0.4512, 0.5488]


def test_generator_sparsity():
    _, lad = named_code("grl")
    ch = LossChannelSet.single_double(0.05)
    for m in range(8):
        M = build_diagonal_generator(m, ch, lad, 10.0).matrix
        r, c = np.nonzero(M)
        assert set((c - r).tolist()) <= {0, 1, 2, -1}


def test_vacuum_fixed_point_and_fock_decay():
    ch = LossChannelSet.single_double(0.3)
    vac = FockDensityMatrix.fock(8, 0)
    assert np.allclose(evolve(vac, ch, None, 0.0, 2.0).entries, vac.entries)
    out = evolve(FockDensityMatrix.fock(8, 1), LossChannelSet(), None, 0.0, 1.0).entries
    assert np.allclose(np.diag(out).real, [1 - math.exp(-1), math.exp(-1), 0, 0, 0, 0, 0, 0], atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=seeds, lam=st.sampled_from([0.0, 1e2, 1e4]), eta=st.sampled_from([0.0, 0.04, 0.08]), tau=st.sampled_from([0.06, 0.6]))
def test_matches_superoperator_exponential(seed, lam, eta, tau):
    rng = np.random.default_rng(seed)
    dim = 6
    lad = ProjectorLadder(rng.uniform(0, 1, dim - 1))
    ch = LossChannelSet.single_double(eta)
    rho = random_density(dim, rng)
    L = liouvillian(dim, ch, lad, lam)
    ref = (expm(L * tau) @ rho.reshape(-1, order="F")).reshape(dim, dim, order="F")
    out = AnalyticSolver(dim, ch, lad, lam).evolve_many(rho, [tau])[0]
    assert np.max(np.abs(out - ref)) < 1e-8


@settings(max_examples=40, deadline=None)
@given(seed=seeds, lam=st.floats(0, 1e4), eta=st.floats(0, 0.5))
def test_dissipative_spectrum(seed, lam, eta):
    rng = np.random.default_rng(seed)
    lad = ProjectorLadder(rng.uniform(0, 1, 7) + 1e-3)
    solver = AnalyticSolver(8, LossChannelSet.single_double(eta), lad, lam)
    assert solver.max_real_eigenvalue() <= 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=seeds, lam=st.floats(0, 1e4), eta=st.floats(0, 0.1), tau=st.floats(0, 5))
def test_trace_conserved(seed, lam, eta, tau):
    rng = np.random.default_rng(seed)
    lad = ProjectorLadder(rng.uniform(0.01, 1, 7))
    rho = random_density(8, rng, support=6)
    out = AnalyticSolver(8, LossChannelSet.single_double(eta), lad, lam).evolve_many(rho, [tau])[0]
    assert abs(np.trace(out) - 1.0) <= 1e-6
    assert np.max(np.abs(out - out.conj().T)) <= 1e-10


def test_evolve_series_consistency():
    code, lad = named_code("grl")
    ch = LossChannelSet.single_double(0.012)
    rho = cardinal_states(code).states["+x"]
    assert np.allclose(evolve_series(rho, ch, lad, 1e4, [0.0])[0].entries, rho.entries)
    a, b = evolve_series(rho, ch, lad, 1e4, [0.3, 0.3])
    assert np.array_equal(a.entries, b.entries)
    taus = 0.06 * np.arange(1, 71)
    series = evolve_series(rho, ch, lad, 1e4, taus)
    worst = max(np.max(np.abs(s.entries - evolve(rho, ch, lad, 1e4, t).entries)) for s, t in zip(series, taus))
    assert worst <= 1e-12
    with pytest.raises(ValueError):
        evolve_series(rho, ch, lad, 1e4, [0.5, 0.1])


def test_conjugate_diagonals():
    rng = np.random.default_rng(7)
    _, lad = named_code("t4c")
    rho = random_density(8, rng)
    out = AnalyticSolver(8, LossChannelSet.single_double(0.02), lad, 300.0).evolve_many(rho, [0.4])[0]
    assert np.allclose(out, out.conj().T, atol=1e-13)


def test_near_defective_fallback_agrees():
    code, lad = named_code("grl")
    code, lad = code.padded(32), lad.padded(32)
    ch = LossChannelSet.single_double(0.012)
    solver = AnalyticSolver(32, ch, lad, 800.0)
    rho = proj(32, 4)
    out = solver.evolve_many(rho, [0.6])[0]
    # reference by direct superoperator exponential on a smaller truncation
    small_lad = ProjectorLadder(lad.coeffs[:11])
    Ls = liouvillian(12, ch, small_lad, 800.0)
    ref = (expm(Ls * 0.6) @ proj(12, 4).reshape(-1, order="F")).reshape(12, 12, order="F")
    # support never climbs above |7>, so the 12-level truncation is exact here
    assert np.max(np.abs(out[:12, :12] - ref)) < 1e-8
