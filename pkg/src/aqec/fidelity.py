"""Six-state fidelity, Bloch scans, breakeven reference, gain and Wigner grids.

Fidelity here is always the overlap ``Tr(rho_0 rho_t)``, not the Uhlmann
fidelity.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .analytic import AnalyticSolver, LossChannelSet
from .core import (
    AQECError,
    Codeword,
    ConfigurationError,
    FockDensityMatrix,
    OutOfRangeError,
    ProjectorLadder,
    SystemParams,
)

CARDINAL_LABELS = ("+z", "-z", "+x", "-x", "+y", "-y")
SOLVERS = ("analytic", "dense")


class UndefinedGainError(AQECError, ZeroDivisionError):
    pass


@dataclass(frozen=True)
class CardinalSet:
    states: Mapping[str, FockDensityMatrix]

    @classmethod
    def from_code(cls, code: Codeword) -> "CardinalSet":
        z, o = code.zero_logical, code.one_logical
        s = 1.0 / math.sqrt(2.0)
        vecs = [z, o, s * (z + o), s * (z - o), s * (z + 1j * o), s * (z - 1j * o)]
        return cls({lab: FockDensityMatrix.from_vector(v) for lab, v in zip(CARDINAL_LABELS, vecs)})

    def stack(self) -> np.ndarray:
        return np.array([self.states[l].entries for l in CARDINAL_LABELS])

    def average(self) -> np.ndarray:
        return self.stack().mean(axis=0)


def cardinal_states(code: Codeword) -> CardinalSet:
    return CardinalSet.from_code(code)


def breakeven_reference(tau):
    """Six-state fidelity of the ``|0>, |1>`` code under pure single-photon loss."""
    t = np.asarray(tau, dtype=float)
    if np.any(t < 0):
        raise OutOfRangeError("tau must be >= 0")
    out = 0.5 + np.exp(-t) / 6.0 + np.exp(-t / 2.0) / 3.0
    return float(out) if out.ndim == 0 else out


def gain(f_code: float, f_be: float) -> float:
    if f_code >= 1.0:
        raise UndefinedGainError("gain is undefined when the code fidelity is 1")
    return (1.0 - f_be) / (1.0 - f_code)


def params_for_lambda(lambda_coop: float, eta: float = 0.0, gamma_b_ratio: float = 1800.0) -> SystemParams:
    """Hybrid parameters whose adiabatic limit reproduces ``lambda_coop``."""
    g = math.sqrt(lambda_coop * gamma_b_ratio / 4.0)
    return SystemParams(gamma_b_ratio=gamma_b_ratio, eta2=eta, g_ratio=g)


def evolve_states(
    rhos: np.ndarray,
    channels: LossChannelSet,
    ladder: ProjectorLadder | None,
    lambda_coop: float,
    taus,
    solver: str = "analytic",
    params: SystemParams | None = None,
) -> np.ndarray:
    """Evolve a stack ``(B, N, N)``; returns ``(T, B, N, N)``."""
    if solver == "analytic":
        return AnalyticSolver(rhos.shape[-1], channels, ladder, lambda_coop).evolve_many(rhos, taus)
    if solver == "dense":
        from .dense import evolve_hybrid, evolve_reduced_dense

        if ladder is None or lambda_coop == 0:
            return evolve_reduced_dense(rhos, channels, ladder, 0.0, taus)
        if set(channels.orders) - {1, 2} or channels.orders.get(1, 0.0) != 1.0:
            raise ConfigurationError("the hybrid model supports single (rate 1) and double photon loss only")
        eta = channels.orders.get(2, 0.0)
        if params is None:
            params = params_for_lambda(lambda_coop, eta)
        elif params.eta2 != eta:
            params = SystemParams(params.gamma_b_ratio, eta, params.g_ratio, params.lambda_coop)
        return evolve_hybrid(rhos, ladder, params, taus)
    raise ConfigurationError(f"unknown solver {solver!r}; choose analytic or dense")


def mean_fidelity(
    code: Codeword,
    channels: LossChannelSet,
    ladder: ProjectorLadder | None,
    lambda_coop: float,
    tau,
    solver: str = "analytic",
    params: SystemParams | None = None,
):
    """Six-state mean fidelity at ``tau`` (scalar or 1-D grid).

    The dense solver runs the full hybrid model; ``params`` fixes its ``g``
    and ``gamma_b`` (otherwise chosen so that the adiabatic limit gives
    ``lambda_coop`` at ``gamma_b = 1800``).
    """
    scalar = np.ndim(tau) == 0
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    order = np.argsort(taus, kind="stable")
    init = cardinal_states(code).stack()
    evolved = evolve_states(init, channels, ladder, lambda_coop, taus[order], solver, params)
    f = np.empty(len(taus))
    f[order] = np.real(np.einsum("bij,tbji->t", init, evolved)) / 6.0
    return float(f[0]) if scalar else f


@dataclass(frozen=True)
class BlochScan:
    theta: np.ndarray
    phi: np.ndarray
    values: np.ndarray  # (len(theta), len(phi))
    tau: float

    @property
    def theta_step(self) -> float:
        return float(self.theta[1] - self.theta[0])

    @property
    def phi_step(self) -> float:
        return float(self.phi[1] - self.phi[0])

    def sphere_average(self) -> float:
        """Area-weighted average, trapezoid in theta and rectangle in phi."""
        w = np.sin(self.theta)
        ring = self.values.mean(axis=1)
        return float(np.trapezoid(w * ring, self.theta) / np.trapezoid(w, self.theta))

    def rows(self):
        for i, th in enumerate(self.theta):
            for j, ph in enumerate(self.phi):
                yield th, ph, self.values[i, j]


def bloch_scan(
    code: Codeword,
    channels: LossChannelSet,
    ladder: ProjectorLadder | None,
    lambda_coop: float,
    tau: float,
    theta_points: int = 11,
    phi_points: int = 40,
    solver: str = "analytic",
    params: SystemParams | None = None,
) -> BlochScan:
    """Overlap fidelity of ``cos(t/2)|0_L> + e^{ip} sin(t/2)|1_L>`` on a grid.

    ``theta`` runs over ``[0, pi]`` inclusive and ``phi`` over ``[0, 2 pi)``.
    """
    theta = np.linspace(0.0, math.pi, theta_points)
    phi = np.arange(phi_points) * (2.0 * math.pi / phi_points)
    z, o = code.zero_logical, code.one_logical
    c = np.cos(theta / 2.0)[:, None, None] * z
    s = (np.sin(theta / 2.0)[:, None] * np.exp(1j * phi)[None, :])[:, :, None] * o
    psi = (c + s).reshape(-1, code.dim)
    rhos = np.einsum("bi,bj->bij", psi, psi.conj())
    evolved = evolve_states(rhos, channels, ladder, lambda_coop, [tau], solver, params)[0]
    vals = np.real(np.einsum("bij,bji->b", rhos, evolved)).reshape(theta_points, phi_points)
    return BlochScan(theta, phi, np.clip(vals, 0.0, 1.0), float(tau))


# --------------------------------------------------------------------------
# Wigner function


def wigner(rho, xvec: Sequence[float], pvec: Sequence[float]) -> np.ndarray:
    """Wigner function on an ``(len(pvec), len(xvec))`` grid.

    Uses ``alpha = (x + i p)/sqrt(2)`` and the displaced-parity normalization
    ``W = Tr[rho D(alpha) P D(alpha)^+] / pi``, so ``W(0, 0)`` is the photon
    parity over pi and the integral over ``dx dp`` is ``Tr rho``.
    """
    r = np.asarray(rho.entries if isinstance(rho, FockDensityMatrix) else rho, dtype=complex)
    n = r.shape[0]
    x, p = np.meshgrid(np.asarray(xvec, float), np.asarray(pvec, float))
    alpha = (x + 1j * p) / math.sqrt(2.0)
    r2 = 4.0 * np.abs(alpha) ** 2
    acc = np.zeros(alpha.shape, dtype=complex)
    for m in range(n):
        for k in range(m, n):
            c = r[m, k]
            if c == 0:
                continue
            d = k - m
            # rho[m, k] pairs with <k| D P D^+ |m>, k >= m
            coef = (-1) ** m * math.exp(0.5 * (gammaln(m + 1) - gammaln(k + 1)))
            term = coef * (2.0 * alpha) ** d * eval_genlaguerre(m, d, r2)
            if d == 0:
                acc += c * term
            else:
                acc += 2.0 * c * term
    w = np.real(acc) * np.exp(-0.5 * r2) / math.pi
    return w


def wigner_overlap(w1: np.ndarray, w2: np.ndarray, xvec, pvec) -> float:
    """``Tr(rho sigma) = 2 pi * integral W_rho W_sigma dx dp`` by the trapezoid rule."""
    inner = np.trapezoid(np.trapezoid(w1 * w2, np.asarray(xvec, float), axis=1), np.asarray(pvec, float))
    return float(2.0 * math.pi * inner)


def wigner_integral(w: np.ndarray, xvec, pvec) -> float:
    return float(np.trapezoid(np.trapezoid(w, np.asarray(xvec, float), axis=1), np.asarray(pvec, float)))


# --------------------------------------------------------------------------
# CSV output


def csv_header_comment(config_hash: str) -> str:
    from . import __version__

    return f"# aqec {__version__} config={config_hash}"


def write_csv(path, columns: Sequence[str], rows, config_hash: str = "none") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(csv_header_comment(config_hash) + "\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open() as fh:
        lines = [l for l in fh if not l.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    return header, list(reader)
