"""Reference Lindblad integrator on the full cavity x ancilla (x readout) space.

Everything here is brute force on purpose: it is the oracle the analytic
solver and the reduced models are checked against. Time is the
dimensionless ``tau = gamma_a t`` and every rate is relative to ``gamma_a``.

Tensor order is cavity, ancilla, readout. Two-level modes use ``|g> = 0`` and
``|e> = 1`` so ``sigma_minus = |g><e|``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import gamma as gamma_fn

from .core import (
    AQECError,
    Codeword,
    ConfigurationError,
    InvalidStateError,
    OutOfRangeError,
    ProjectorLadder,
    StructuralError,
    SystemParams,
    annihilation,
    check_density_matrix,
)

SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]])
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]])

RTOL = 1e-9
ATOL = 1e-11


class StiffnessError(AQECError, ArithmeticError):
    """Step size underflow in the adaptive integrator."""

    def __init__(self, time: float, message: str = ""):
        self.time = time
        super().__init__(f"integrator step size underflow at t={time:.6g}" + (f": {message}" if message else ""))


class SingularityError(AQECError, ArithmeticError):
    """The amplitude-damping function R(t) vanished."""

    def __init__(self, time: float):
        self.time = time
        super().__init__(f"R(t) vanishes at t={time:.6g}; h(t) and gamma(t) are undefined")


@dataclass(frozen=True, eq=False)
class HybridState:
    """Density matrix on cavity x ancilla (x readout)."""

    entries: np.ndarray
    cavity_dim: int
    ancilla_dim: int = 2
    readout_dim: int | None = None

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=complex)
        if arr.shape != (self.total_dim, self.total_dim):
            raise StructuralError(f"hybrid state shape {arr.shape} does not match dims {self.dims}")
        check_density_matrix(arr)
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dims(self) -> tuple[int, ...]:
        d = (self.cavity_dim, self.ancilla_dim)
        return d + ((self.readout_dim,) if self.readout_dim else ())

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @classmethod
    def product(cls, cavity_rho, ancilla_dim: int = 2, readout_dim: int | None = None) -> "HybridState":
        """``rho_a`` with every auxiliary mode in its ground state."""
        rho = np.asarray(cavity_rho, dtype=complex)
        return cls(embed_ground(rho, ancilla_dim * (readout_dim or 1)), rho.shape[0], ancilla_dim, readout_dim)

    def cavity(self) -> np.ndarray:
        return partial_trace_cavity(self.entries, self.cavity_dim)


def embed_ground(rho: np.ndarray, aux_dim: int) -> np.ndarray:
    """``rho (x) |0><0|`` for a stack ``(..., N, N)``."""
    g = np.zeros((aux_dim, aux_dim))
    g[0, 0] = 1.0
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[-1]
    out = np.einsum("...ij,ab->...iajb", rho, g)
    return out.reshape(rho.shape[:-2] + (n * aux_dim, n * aux_dim))


def partial_trace_cavity(rho: np.ndarray, cavity_dim: int) -> np.ndarray:
    """Trace out everything after the cavity; accepts a stack ``(..., D, D)``."""
    rho = np.asarray(rho)
    aux = rho.shape[-1] // cavity_dim
    r = rho.reshape(rho.shape[:-2] + (cavity_dim, aux, cavity_dim, aux))
    return np.einsum("...iaja->...ij", r)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = np.asarray(a) - np.asarray(b)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


Rate = Union[float, Callable[[float], float]]
Hamiltonian = Union[np.ndarray, Callable[[float], np.ndarray], None]


def _at(value, t: float):
    return value(t) if callable(value) else value


def lindblad_rhs(rho: np.ndarray, hamiltonian: np.ndarray | None, collapse_ops: Sequence[tuple[np.ndarray, float]]) -> np.ndarray:
    """``-i[H, rho] + sum_k (g_k/2)(2 X rho X+ - X+X rho - rho X+X)``.

    ``rho`` may be a single matrix or a stack ``(B, D, D)``.
    """
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[-1]
    h_nh = np.zeros((d, d), dtype=complex)
    if hamiltonian is not None:
        h = np.asarray(hamiltonian)
        if h.shape != (d, d):
            raise StructuralError(f"Hamiltonian shape {h.shape} does not match state dimension {d}")
        h_nh += h
    jumps = []
    for op, rate in collapse_ops:
        op = np.asarray(op)
        if op.shape != (d, d):
            raise StructuralError(f"collapse operator shape {op.shape} does not match state dimension {d}")
        if rate == 0:
            continue
        h_nh -= 0.5j * rate * (op.conj().T @ op)
        jumps.append((op, rate))
    out = -1j * (h_nh @ rho - rho @ h_nh.conj().T)
    for op, rate in jumps:
        out += rate * (op @ rho @ op.conj().T)
    return out


def integrate(
    rho0: np.ndarray,
    hamiltonian: Hamiltonian,
    collapse_ops: Sequence[tuple[np.ndarray, Rate]],
    t_eval: Sequence[float],
    *,
    rtol: float = RTOL,
    atol: float = ATOL,
    fixed_step: float | None = None,
    max_step: float = np.inf,
) -> np.ndarray:
    """Integrate the master equation with adaptive Dormand-Prince RK45.

    ``rho0`` is ``(D, D)`` or a stack ``(B, D, D)`` evolved together. Returns
    the states at ``t_eval`` with shape ``(T,) + rho0.shape``. ``fixed_step``
    disables error control and takes steps of exactly that size (used to
    measure the convergence order).
    """
    rho0 = np.asarray(rho0, dtype=complex)
    shape = rho0.shape
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.size == 0:
        return np.zeros((0,) + shape, dtype=complex)
    if np.any(t_eval < 0) or np.any(np.diff(t_eval) < 0):
        raise OutOfRangeError("evaluation times must be >= 0 and nondecreasing")
    t_final = float(t_eval[-1])
    if t_final == 0.0:
        return np.broadcast_to(rho0, (len(t_eval),) + shape).copy()

    static = not callable(hamiltonian) and not any(callable(r) for _, r in collapse_ops)
    if static:
        cached = list(collapse_ops)

        def fun(t, y):
            return lindblad_rhs(y.reshape(shape), hamiltonian, cached).ravel()
    else:

        def fun(t, y):
            ops = [(op, _at(r, t)) for op, r in collapse_ops]
            return lindblad_rhs(y.reshape(shape), _at(hamiltonian, t), ops).ravel()

    kwargs = dict(rtol=rtol, atol=atol, max_step=max_step)
    if fixed_step is not None:
        kwargs = dict(rtol=1e10, atol=1e10, first_step=fixed_step, max_step=fixed_step)
    sol = solve_ivp(fun, (0.0, t_final), rho0.ravel(), method="RK45", t_eval=t_eval, **kwargs)
    if sol.status != 0:
        t_fail = float(sol.t[-1]) if sol.t.size else 0.0
        raise StiffnessError(t_fail, sol.message)
    return sol.y.T.reshape((len(t_eval),) + shape)


# --------------------------------------------------------------------------
# hybrid AQEC model


def _cardinal_vectors(code: Codeword) -> list[np.ndarray]:
    z, o = code.zero_logical, code.one_logical
    s = 1.0 / math.sqrt(2.0)
    return [z, o, s * (z + o), s * (z - o), s * (z + 1j * o), s * (z - 1j * o)]


def cardinal_matrices(code: Codeword) -> np.ndarray:
    """The six cardinal states as a stack ``(6, N, N)`` (+z, -z, +x, -x, +y, -y)."""
    return np.array([np.outer(v, v.conj()) for v in _cardinal_vectors(code)])


def _six_state_mean(initial: np.ndarray, evolved: np.ndarray) -> np.ndarray:
    # initial (6, N, N), evolved (T, 6, N, N)
    return np.real(np.einsum("bij,tbji->t", initial, evolved)) / 6.0


@dataclass(frozen=True)
class HybridOperators:
    """Operators of the cavity x ancilla model in ``gamma_a = 1`` units."""

    hamiltonian: np.ndarray
    collapse: tuple
    sigma_minus: np.ndarray
    dim: int


def hybrid_operators(ladder: ProjectorLadder, params: SystemParams, dim: int | None = None) -> HybridOperators:
    dim = dim or ladder.dim
    if ladder.dim != dim:
        ladder = ladder.padded(dim)
    a = annihilation(dim)
    i2 = np.eye(2)
    iN = np.eye(dim)
    A = np.kron(a, i2)
    S = np.kron(iN, SIGMA_MINUS)
    L = np.kron(ladder.operator(normalized=True), i2)
    H = params.g_ratio * (L @ S.conj().T + L.conj().T @ S)
    collapse = [(A, 1.0), (S, params.gamma_b_ratio)]
    if params.eta2 > 0:
        collapse.append((A @ A, params.eta2))
    return HybridOperators(H, tuple(collapse), S, dim)


def _check_tau_grid(tau_grid) -> np.ndarray:
    taus = np.asarray(tau_grid, dtype=float)
    if taus.ndim != 1:
        raise StructuralError("tau grid must be one-dimensional")
    return taus


def evolve_hybrid(rhos: np.ndarray, ladder: ProjectorLadder, params: SystemParams, tau_grid, **kw) -> np.ndarray:
    """Reduced cavity states ``(T, B, N, N)`` of the hybrid model."""
    rhos = np.asarray(rhos, dtype=complex)
    dim = rhos.shape[-1]
    ops = hybrid_operators(ladder, params, dim)
    full = integrate(embed_ground(rhos, 2), ops.hamiltonian, ops.collapse, _check_tau_grid(tau_grid), **kw)
    return partial_trace_cavity(full, dim)


def simulate_aqec_hybrid(code: Codeword, ladder: ProjectorLadder, params: SystemParams, tau_grid, **kw) -> np.ndarray:
    """Six-state mean fidelity of the full hybrid model on ``tau_grid``."""
    init = cardinal_matrices(code)
    return _six_state_mean(init, evolve_hybrid(init, ladder, params, tau_grid, **kw))


def evolve_reduced_dense(rhos: np.ndarray, channels, ladder: ProjectorLadder | None, lambda_coop: float, tau_grid, **kw) -> np.ndarray:
    """The reduced cavity master equation integrated by RK45 (no structure used).

    This is the like-for-like baseline for benchmarking the analytic solver.
    """
    rhos = np.asarray(rhos, dtype=complex)
    dim = rhos.shape[-1]
    a = annihilation(dim)
    collapse = []
    for n, eta in channels.orders.items():
        collapse.append((np.linalg.matrix_power(a, n), eta))
    if lambda_coop > 0:
        collapse.append((ladder.operator(normalized=True), lambda_coop))
    return integrate(rhos, None, collapse, _check_tau_grid(tau_grid), **kw)


# --------------------------------------------------------------------------
# non-Markovian noise models


@dataclass(frozen=True)
class PhaseDampingParams:
    """Ohmic-family dephasing bath; ``omega_c`` in units of ``gamma_a``."""

    omega_c: float
    s: float
    scale: float = 1.0
    s_in_phase: bool = False

    def __post_init__(self):
        if self.omega_c <= 0 or self.s <= 0:
            raise ConfigurationError("phase damping needs omega_c > 0 and s > 0")
        if self.scale < 0:
            raise ConfigurationError("scale must be >= 0")


def phase_damping_rate(t: float, p: PhaseDampingParams) -> float:
    """Dephasing rate of the ohmic-family bath.

    ``omega_c Gamma(s) sin(arctan(omega_c t)) / (1 + (omega_c t)^2)^(s/2)``.
    With ``p.s_in_phase`` the sine argument is ``s arctan(omega_c t)``, the
    textbook form for this spectral density.
    """
    if t < 0:
        raise OutOfRangeError("t must be >= 0")
    x = p.omega_c * t
    phase = math.atan(x) * (p.s if p.s_in_phase else 1.0)
    return p.scale * p.omega_c * gamma_fn(p.s) * math.sin(phase) / (1.0 + x * x) ** (p.s / 2.0)


def simulate_phase_damping(code: Codeword, ladder: ProjectorLadder, params: SystemParams, p: PhaseDampingParams, tau_grid, **kw) -> np.ndarray:
    """Hybrid AQEC dynamics plus ``(gamma(t)/2) D[sigma_z]`` on the ancilla."""
    ops = hybrid_operators(ladder, params, code.dim)
    sz = np.kron(np.eye(code.dim), SIGMA_Z)
    collapse = list(ops.collapse) + [(sz, lambda t: phase_damping_rate(t, p))]
    init = cardinal_matrices(code)
    full = integrate(embed_ground(init, 2), ops.hamiltonian, collapse, _check_tau_grid(tau_grid), **kw)
    return _six_state_mean(init, partial_trace_cavity(full, code.dim))


@dataclass(frozen=True)
class AmplitudeDampingParams:
    """Lorentzian reservoir coupled to the ancilla, rates in units of ``gamma_a``."""

    gamma0: float
    width: float
    detuning: float

    def __post_init__(self):
        if self.gamma0 < 0:
            raise ConfigurationError("gamma0 must be >= 0")
        if self.width <= 0:
            raise ConfigurationError("width must be > 0")


SINGULARITY_TOL = 1e-12


def amplitude_damping_functions(t: float, p: AmplitudeDampingParams) -> tuple[float, float]:
    """Return ``(h(t), gamma(t))`` from the closed-form ``R(t)``.

    With ``k = width - i detuning``, ``Omega = sqrt(k^2 - 2 gamma0 width)`` and
    ``x = Omega t / 2``,

        R'/R = -gamma0 width sinh(x) / (Omega cosh(x) + k sinh(x)),

    and ``h = -2 Im(R'/R)``, ``gamma = -2 Re(R'/R)``. The ratio is evaluated in
    its tanh form so large ``t`` does not overflow.
    """
    if t < 0:
        raise OutOfRangeError("t must be >= 0")
    if p.gamma0 == 0.0 or t == 0.0:
        return 0.0, 0.0
    k = complex(p.width, -p.detuning)
    omega = np.sqrt(k * k - 2.0 * p.gamma0 * p.width + 0j)
    x = omega * t / 2.0
    if abs(omega) < 1e-12 * max(1.0, abs(k)):
        # Omega -> 0: sinh(x)/Omega -> t/2, cosh(x) -> 1
        num = p.gamma0 * p.width * t / 2.0
        bracket = 1.0 + k * t / 2.0
        scale = 1.0 + abs(k) * t / 2.0
    elif x.real > 20.0:
        th = np.tanh(x)
        num = p.gamma0 * p.width * th
        bracket = omega + k * th
        scale = abs(omega) + abs(k * th)
    else:
        num = p.gamma0 * p.width * np.sinh(x)
        bracket = omega * np.cosh(x) + k * np.sinh(x)
        scale = abs(omega * np.cosh(x)) + abs(k * np.sinh(x))
    if abs(bracket) <= SINGULARITY_TOL * scale:
        raise SingularityError(t)
    ratio = -num / bracket
    return float(-2.0 * ratio.imag), float(-2.0 * ratio.real)


def amplitude_damping_r(t: float, p: AmplitudeDampingParams) -> complex:
    """``R(t)`` itself; only safe for moderate ``t``."""
    k = complex(p.width, -p.detuning)
    omega = np.sqrt(k * k - 2.0 * p.gamma0 * p.width + 0j)
    x = omega * t / 2.0
    sinh_over = np.sinh(x) / omega if abs(omega) > 1e-14 else t / 2.0
    return complex(np.exp(-k * t / 2.0) * (np.cosh(x) + k * sinh_over))


def simulate_amplitude_damping(code: Codeword, ladder: ProjectorLadder, params: SystemParams, p: AmplitudeDampingParams, tau_grid, **kw) -> np.ndarray:
    """Hybrid AQEC dynamics with a Lorentzian ancilla reservoir.

    Adds ``(h(t)/2) sigma+ sigma-`` to the Hamiltonian and raises the
    ancilla decay rate to ``gamma_b + gamma(t)``.
    """
    ops = hybrid_operators(ladder, params, code.dim)
    S = ops.sigma_minus
    n_e = S.conj().T @ S
    H0 = ops.hamiltonian
    gb = params.gamma_b_ratio
    others = [c for c in ops.collapse if c[0] is not S]

    def hamiltonian(t):
        h, _ = amplitude_damping_functions(t, p)
        return H0 + 0.5 * h * n_e

    def ancilla_rate(t):
        return gb + amplitude_damping_functions(t, p)[1]

    init = cardinal_matrices(code)
    collapse = others + [(S, ancilla_rate)]
    full = integrate(embed_ground(init, 2), hamiltonian, collapse, _check_tau_grid(tau_grid), **kw)
    return _six_state_mean(init, partial_trace_cavity(full, code.dim))


# --------------------------------------------------------------------------
# three-mode RWA model


@dataclass(frozen=True)
class RWAParams:
    """Rates and couplings of the cavity-transmon-readout model, ``gamma_a = 1``."""

    gamma_a2: float
    gamma_b: float
    gamma_c: float
    g0: float
    g1: float

    @classmethod
    def from_hz(cls, gamma_a, gamma_a2, gamma_b, gamma_c, g0, g1) -> "RWAParams":
        """Build from ordinary frequencies (all multiplied by 2 pi the same way)."""
        return cls(gamma_a2 / gamma_a, gamma_b / gamma_a, gamma_c / gamma_a, g0 / gamma_a, g1 / gamma_a)

    def regime_violations(self) -> list[str]:
        issues = []
        if not self.gamma_c > 3 * self.g1:
            issues.append("gamma_c is not much larger than g1")
        if not self.g1 >= abs(self.g0):
            issues.append("g1 < |g0|")
        if not abs(self.g0) > 10 * max(1.0, self.gamma_b):
            issues.append("|g0| is not much larger than gamma_a, gamma_b")
        return issues


RWA_REFERENCE_HZ = dict(gamma_a=0.2e3, gamma_a2=2.0, gamma_b=2e3, gamma_c=0.24e6, g0=0.12e6, g1=0.16e6)


def rwa_default_params() -> RWAParams:
    return RWAParams.from_hz(**RWA_REFERENCE_HZ)


def simulate_rwa_three_mode(code: Codeword, ladder: ProjectorLadder, rp: RWAParams, tau_grid, **kw) -> tuple[np.ndarray, np.ndarray]:
    """Mean fidelity and gain over the breakeven code on ``tau_grid``.

    ``L_o`` enters with the ladder coefficients as given (not normalized),
    so pass unit drive amplitudes for the standard setup. The readout couples only on the Fock levels
    that carry a ladder term. Gain is NaN where it is undefined (``F = 1``).
    """
    for issue in rp.regime_violations():
        warnings.warn(f"RWA regime not satisfied: {issue}", RuntimeWarning, stacklevel=2)
    dim = code.dim
    if ladder.dim != dim:
        ladder = ladder.padded(dim)
    a = annihilation(dim)
    i2 = np.eye(2)
    iN = np.eye(dim)
    A = np.kron(np.kron(a, i2), i2)
    S = np.kron(np.kron(iN, SIGMA_MINUS), i2)
    C = np.kron(np.kron(iN, i2), SIGMA_MINUS)
    Lo = np.kron(np.kron(ladder.operator(normalized=False), i2), i2)
    levels = np.zeros(dim)
    levels[1:] = np.abs(ladder.coeffs) > 0
    P = np.kron(np.kron(np.diag(levels), i2), i2)
    H = rp.g0 * (Lo @ S.conj().T + Lo.conj().T @ S) + rp.g1 * P @ (C.conj().T @ S + C @ S.conj().T)
    collapse = [(A, 1.0), (S, rp.gamma_b), (C, rp.gamma_c)]
    if rp.gamma_a2 > 0:
        collapse.append((A @ A, rp.gamma_a2))
    init = cardinal_matrices(code)
    taus = _check_tau_grid(tau_grid)
    full = integrate(embed_ground(init, 4), H, collapse, taus, **kw)
    f = _six_state_mean(init, partial_trace_cavity(full, dim))
    f_be = 0.5 + np.exp(-taus) / 6.0 + np.exp(-taus / 2.0) / 3.0
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(f < 1.0 - 1e-12, (1.0 - f_be) / (1.0 - f), np.nan)
    return f, g
