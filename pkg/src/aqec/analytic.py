"""Per-diagonal spectral solver for the adiabatically reduced cavity dynamics.

The reduced master equation, in units of the single-photon loss rate,

    d rho / d tau = sum_n (eta_n / 2) D[a^n] rho + (lambda / 2) D[L_eng] rho,

only couples ``rho[i, j]`` to ``rho[i+n, j+n]`` and ``rho[i-1, j-1]``, so every
diagonal of ``rho`` evolves independently under a small real generator. Each
generator is diagonalized once and the solution is ``V exp(w tau) V^-1 v0``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .core import (
    ConfigurationError,
    DiagonalVector,
    FockDensityMatrix,
    OutOfRangeError,
    ProjectorLadder,
    StructuralError,
    falling_factorial,
)

CONDITION_LIMIT = 1e8

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LossChannelSet:
    """Photon-loss orders and their rates relative to single-photon loss."""

    orders: Mapping[int, float] = field(default_factory=lambda: {1: 1.0})

    def __post_init__(self):
        orders = {int(n): float(r) for n, r in dict(self.orders).items() if r != 0.0}
        for n, r in orders.items():
            if n < 1:
                raise ConfigurationError(f"loss order must be >= 1, got {n}")
            if r < 0:
                raise ConfigurationError(f"loss rate for order {n} must be >= 0")
        object.__setattr__(self, "orders", dict(sorted(orders.items())))

    @classmethod
    def single_double(cls, eta: float = 0.0) -> "LossChannelSet":
        return cls({1: 1.0, 2: eta})

    @property
    def max_order(self) -> int:
        return max(self.orders, default=0)


@dataclass(frozen=True, eq=False)
class DiagonalGenerator:
    offset: int
    matrix: np.ndarray

    @cached_property
    def spectrum(self):
        """(w, V, V^-1, condition number) of the generator."""
        w, V = np.linalg.eig(self.matrix)
        cond = np.linalg.cond(V) if V.size else 1.0
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            return w, None, None, cond
        return w, V, np.linalg.inv(V), cond

    @property
    def defective(self) -> bool:
        return self.spectrum[1] is None

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def build_diagonal_generator(
    m: int,
    channels: LossChannelSet,
    ladder: ProjectorLadder | None,
    lambda_coop: float,
    dim: int | None = None,
) -> DiagonalGenerator:
    if dim is None:
        if ladder is None:
            raise ConfigurationError("dim is required when no ladder is given")
        dim = ladder.dim
    if abs(m) >= dim:
        raise OutOfRangeError(f"diagonal offset {m} outside +/-{dim - 1}")
    if lambda_coop < 0:
        raise ConfigurationError("lambda_coop must be >= 0")
    if lambda_coop > 0 and ladder is None:
        raise ConfigurationError("lambda_coop > 0 requires an engineered ladder")
    if ladder is not None and ladder.dim != dim:
        raise StructuralError(f"ladder built for N={ladder.dim}, solver uses N={dim}")

    mm = abs(m)
    size = dim - mm
    M = np.zeros((size, size))
    alpha = np.arange(size)
    for n, eta in channels.orders.items():
        A = np.array([falling_factorial(k, n) for k in range(dim + n)])
        M[alpha, alpha] += -0.5 * eta * (A[alpha] + A[alpha + mm])
        if n < size:
            src = alpha[: size - n]
            M[src, src + n] += eta * np.sqrt(A[src + n] * A[src + mm + n])
    if lambda_coop > 0:
        if ladder.big_lambda <= 0:
            from .core import DegenerateLadderError

            raise DegenerateLadderError("engineered dissipator needs big_lambda > 0")
        lam = ladder.lowered()
        big = ladder.big_lambda
        M[alpha, alpha] += -lambda_coop * (lam[alpha] ** 2 + lam[alpha + mm] ** 2) / (2.0 * big)
        dst = alpha[1:]
        # gain: population flows up the ladder, row alpha fed by alpha-1
        M[dst, dst - 1] += lambda_coop * lam[dst - 1] * lam[dst + mm - 1] / big
    M.setflags(write=False)
    return DiagonalGenerator(m, M)


def _propagate(gen: DiagonalGenerator, v0: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """``exp(M tau) v0`` for each tau; ``v0`` is ``(size,)`` or ``(size, B)``.

    The time axis is last.
    """
    w, V, Vinv, cond = gen.spectrum
    if V is None:
        return np.stack([expm(gen.matrix * t) @ v0 for t in taus], axis=-1)
    c = Vinv @ v0
    phases = np.exp(np.outer(w, taus))
    if v0.ndim == 1:
        return V @ (c[:, None] * phases)
    return np.einsum("sl,lb,lt->sbt", V, c, phases)


def solve_diagonal(gen: DiagonalGenerator, initial: DiagonalVector, tau: float) -> DiagonalVector:
    if initial.offset != gen.offset:
        raise StructuralError(f"generator offset {gen.offset} != state offset {initial.offset}")
    if tau < 0:
        raise OutOfRangeError("tau must be >= 0")
    out = _propagate(gen, np.asarray(initial.values, dtype=complex), np.array([float(tau)]))[:, 0]
    return DiagonalVector(gen.offset, out)


class AnalyticSolver:
    """Caches the per-diagonal generators for one (channels, ladder, lambda) setting."""

    def __init__(self, dim: int, channels: LossChannelSet, ladder: ProjectorLadder | None, lambda_coop: float):
        if ladder is None and lambda_coop > 0:
            raise ConfigurationError("lambda_coop > 0 requires an engineered ladder")
        self.dim = dim
        self.channels = channels
        self.ladder = ladder
        self.lambda_coop = float(lambda_coop)
        self.fallback_offsets: set[int] = set()
        self.generators = [
            build_diagonal_generator(m, channels, ladder, self.lambda_coop, dim) for m in range(dim)
        ]

    def max_real_eigenvalue(self) -> float:
        return max(float(np.max(g.spectrum[0].real)) for g in self.generators)

    def evolve_many(self, rhos: np.ndarray, taus: Sequence[float]) -> np.ndarray:
        """Evolve a stack of density matrices ``(B, N, N)``; returns ``(T, B, N, N)``."""
        taus = np.asarray(taus, dtype=float)
        if np.any(taus < 0):
            raise OutOfRangeError("tau must be >= 0")
        if np.any(np.diff(taus) < 0):
            raise ValueError("taus must be nondecreasing")
        rhos = np.asarray(rhos, dtype=complex)
        single = rhos.ndim == 2
        if single:
            rhos = rhos[None]
        B, N, _ = rhos.shape
        if N != self.dim:
            raise StructuralError(f"state has N={N}, solver built for N={self.dim}")
        out = np.zeros((len(taus), B, N, N), dtype=complex)
        idx = np.arange(N)
        for gen in self.generators:
            m = gen.offset
            rows = idx[: N - m]
            v0 = rhos[:, rows, rows + m].T  # (size, B)
            if gen.defective and m not in self.fallback_offsets:
                self.fallback_offsets.add(m)
                log.debug("offset %d generator near-defective (cond %.2e); using expm", m, gen.spectrum[3])
            block = _propagate(gen, v0, taus)
            # block: (size, B, T)
            vals = np.transpose(block, (2, 1, 0))  # (T, B, size)
            out[:, :, rows, rows + m] = vals
            if m:
                out[:, :, rows + m, rows] = vals.conj()
        return out[:, 0] if single else out


def _state_array(rho) -> np.ndarray:
    return np.asarray(rho.entries if isinstance(rho, FockDensityMatrix) else rho, dtype=complex)


def evolve(rho0, channels: LossChannelSet, ladder: ProjectorLadder | None, lambda_coop: float, tau: float) -> FockDensityMatrix:
    arr = _state_array(rho0)
    solver = AnalyticSolver(arr.shape[0], channels, ladder, lambda_coop)
    return FockDensityMatrix.evolved(solver.evolve_many(arr, [tau])[0])


def evolve_series(rho0, channels: LossChannelSet, ladder: ProjectorLadder | None, lambda_coop: float, taus: Sequence[float]) -> list[FockDensityMatrix]:
    taus = list(taus)
    if any(b < a for a, b in zip(taus, taus[1:])):
        raise ValueError("taus must be nondecreasing")
    arr = _state_array(rho0)
    solver = AnalyticSolver(arr.shape[0], channels, ladder, lambda_coop)
    return [FockDensityMatrix.evolved(r) for r in solver.evolve_many(arr, taus)]
