"""Benchmark codes, action decoding and static code analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .core import (
    DEFAULT_DIM,
    Codeword,
    ConfigurationError,
    DegenerateCodeError,
    DegenerateLadderError,
    OutOfRangeError,
    ProjectorLadder,
    annihilation,
)

KL_TOL = 1e-10
CODE_NAMES = ("grl", "rl", "binomial", "t4c", "breakeven")


def _normalized_ladder(dim: int, terms: dict) -> ProjectorLadder:
    norm = math.sqrt(sum(v * v for v in terms.values()))
    return ProjectorLadder.from_terms(dim, {n: v / norm for n, v in terms.items()})


def named_code(name: str, dim: int = DEFAULT_DIM) -> tuple[Codeword, ProjectorLadder | None]:
    """One of the benchmark codes with its default recovery ladder.

    Each ladder lifts the single-loss error words back to the codewords, with
    equal weights except T4C, whose weights ``1/sqrt(n)`` compensate the
    ``sqrt(n)`` loss amplitudes. Ladders are normalized (``big_lambda = 1``).
    """
    key = name.lower()
    if key == "grl":
        code = Codeword.from_amplitudes(dim, {4: 1.0}, {7: 1.0})
        ladder = _normalized_ladder(dim, {3: 1.0, 4: 1.0, 6: 1.0, 7: 1.0})
    elif key == "rl":
        code = Codeword.from_amplitudes(dim, {2: 1.0}, {4: 1.0})
        ladder = _normalized_ladder(dim, {2: 1.0, 4: 1.0})
    elif key == "binomial":
        code = Codeword.from_amplitudes(dim, {0: math.sqrt(0.5), 4: math.sqrt(0.5)}, {2: 1.0})
        ladder = _normalized_ladder(dim, {2: 1.0, 4: 1.0})
    elif key == "t4c":
        code = Codeword.from_amplitudes(
            dim, {1: math.sqrt(0.35), 5: math.sqrt(0.65)}, {3: math.sqrt(0.9), 7: math.sqrt(0.1)}
        )
        ladder = _normalized_ladder(dim, {n: 1.0 / math.sqrt(n) for n in (1, 3, 5, 7)})
    elif key == "breakeven":
        return Codeword.from_amplitudes(dim, {0: 1.0}, {1: 1.0}), None
    else:
        raise ConfigurationError(f"unknown code {name!r}; choose from {', '.join(CODE_NAMES)}")
    return code, ladder


def grl_drive_ladder(dim: int = DEFAULT_DIM) -> ProjectorLadder:
    """GRL ladder with unit amplitudes, as driven in the three-mode model."""
    return ProjectorLadder.from_terms(dim, {3: 1.0, 4: 1.0, 6: 1.0, 7: 1.0})


def codeword_from_action(c: Sequence[float]) -> Codeword:
    """Split a signed coefficient vector into ``|0_L>`` (positive) and ``|1_L>`` (negative)."""
    c = np.asarray(c, dtype=float)
    zero = np.maximum(c, 0.0)
    one = -np.minimum(c, 0.0)
    nz, no = np.linalg.norm(zero), np.linalg.norm(one)
    if nz == 0.0 or no == 0.0:
        raise DegenerateCodeError("codeword action needs at least one positive and one negative entry")
    return Codeword(zero / nz, one / no)


def ladder_from_action(d: Sequence[float]) -> ProjectorLadder:
    d = np.asarray(d, dtype=float)
    if np.linalg.norm(d) <= 1e-9:
        raise DegenerateLadderError("ladder action is (numerically) zero")
    return ProjectorLadder(d)


def xi_family(xi: float, dim: int = DEFAULT_DIM) -> ProjectorLadder:
    """``|4><3| + |7><6| + xi (|3><2| + |6><5|)``, normalized."""
    if xi <= 0:
        raise OutOfRangeError("xi must be > 0")
    return _normalized_ladder(dim, {4: 1.0, 7: 1.0, 3: xi, 6: xi})


# --------------------------------------------------------------------------
# Knill-Laflamme


ERROR_LABELS = ("I", "a", "a2")


def error_operator(label: str, dim: int) -> np.ndarray:
    a = annihilation(dim)
    table = {"I": np.eye(dim), "a": a, "a2": a @ a, "a²": a @ a}
    if label not in table:
        raise ConfigurationError(f"unknown error operator {label!r}; use I, a or a2")
    return table[label]


@dataclass(frozen=True)
class KLReport:
    error_set: tuple[str, ...]
    flip_violations: list = field(default_factory=list)
    dephasing_violations: list = field(default_factory=list)

    @property
    def satisfied(self) -> bool:
        return not self.flip_violations and not self.dephasing_violations

    def to_dict(self) -> dict:
        def enc(v):
            v = complex(v)
            return v.real if abs(v.imag) < 1e-12 else [v.real, v.imag]

        return {
            "error_set": list(self.error_set),
            "satisfied": self.satisfied,
            "flip_violations": [{"pair": list(p), "magnitude": float(abs(v))} for p, v in self.flip_violations],
            "dephasing_violations": [{"pair": list(p), "difference": enc(v)} for p, v in self.dephasing_violations],
        }


def kl_check(code: Codeword, error_set: Iterable[str] = ERROR_LABELS, tol: float = KL_TOL) -> KLReport:
    """Check the logical-flip and dephasing conditions for every ordered pair.

    A flip violation is a nonzero ``<0_L|E_i+ E_j|1_L>``; a dephasing violation
    is a nonzero ``<1_L|E_i+ E_j|1_L> - <0_L|E_i+ E_j|0_L>``.
    """
    labels = tuple("a2" if l == "a²" else l for l in error_set)
    ops = {l: error_operator(l, code.dim) for l in labels}
    z, o = code.zero_logical, code.one_logical
    flips, deph = [], []
    for li, lj in product(labels, repeat=2):
        m = ops[li].conj().T @ ops[lj]
        flip = np.vdot(z, m @ o)
        if abs(flip) > tol:
            flips.append(((li, lj), complex(flip)))
        diff = np.vdot(o, m @ o) - np.vdot(z, m @ z)
        if abs(diff) > tol:
            deph.append(((li, lj), diff.real if abs(diff.imag) < 1e-12 else complex(diff)))
    return KLReport(labels, flips, deph)


# --------------------------------------------------------------------------
# distances and photon statistics


@dataclass(frozen=True)
class CodeAnalysis:
    mean_photon: float
    jump_distance: int
    gate_distance: int
    mod3_syndrome_spaces: list

    def to_dict(self) -> dict:
        return {
            "mean_photon": self.mean_photon,
            "jump_distance": self.jump_distance,
            "gate_distance": self.gate_distance,
            "mod3_syndrome_spaces": list(self.mod3_syndrome_spaces),
        }


def _support(v: np.ndarray, tol: float = 1e-12) -> list[int]:
    return [int(i) for i in np.nonzero(np.abs(v) > tol)[0]]


def _ket_label(v: np.ndarray) -> str:
    return " + ".join(f"|{n}>" for n in _support(v)) or "0"


def logical_paulis(code: Codeword) -> dict[str, np.ndarray]:
    z, o = code.zero_logical, code.one_logical
    p0, p1 = np.outer(z, z.conj()), np.outer(o, o.conj())
    x = np.outer(z, o.conj()) + np.outer(o, z.conj())
    y = -1j * np.outer(z, o.conj()) + 1j * np.outer(o, z.conj())
    return {"x": x, "y": y, "z": p0 - p1}


def gate_distance(code: Codeword, tol: float = 1e-12) -> int:
    """Largest Fock-index gap coupled by any logical Pauli operator."""
    best = 0
    for op in logical_paulis(code).values():
        rows, cols = np.nonzero(np.abs(op) > tol)
        if rows.size:
            best = max(best, int(np.max(np.abs(rows - cols))))
    return best


def hamiltonian_distances(code: Codeword, ladder: ProjectorLadder | None) -> CodeAnalysis:
    n_op = np.diag(np.arange(code.dim, dtype=float))
    nbar = 0.5 * float(np.real(np.vdot(code.zero_logical, n_op @ code.zero_logical) + np.vdot(code.one_logical, n_op @ code.one_logical)))
    # a linear ladder only ever shifts by one level
    d = 1 if ladder is not None and np.any(np.abs(ladder.coeffs) > 0) else 0
    a = annihilation(code.dim)
    spaces = []
    for name, v in (("0", code.zero_logical), ("1", code.one_logical)):
        w = v
        for k in (1, 2):
            w = a @ w
            if np.linalg.norm(w) > 1e-12:
                spaces.append(f"|{name}_e{k}> ~ {_ket_label(w)}")
    return CodeAnalysis(nbar, d, gate_distance(code), spaces)


# --------------------------------------------------------------------------
# GRL protecting factor and closed form


def grl_protecting_factor_limit(eta: float) -> float:
    """Coherence decay rate of ``rho_47`` when every loss is instantly undone.

    Loss of one photon maps ``|4>, |7>`` to ``|3>, |6>`` with amplitudes 2 and
    sqrt(7); the recovery restores the coherence weighted by their product, so
    the net dephasing rate per channel is ``(sqrt(k0) - sqrt(k1))^2 / 2``.
    """
    single = (math.sqrt(7.0) - 2.0) ** 2 / 2.0
    double = (math.sqrt(42.0) - math.sqrt(12.0)) ** 2 / 2.0
    return single + eta * double


@dataclass(frozen=True)
class ProtectingFactorFit:
    u: float
    intercept: float
    residual: float
    eta: float
    lambda_coop: float


@lru_cache(maxsize=64)
def calibrate_protecting_factor(eta: float, lambda_coop: float = 1e4, tau_min: float = 0.5, tau_max: float = 4.2, points: int = 40) -> ProtectingFactorFit:
    """Fit ``|rho_47(tau)| ~ exp(-u tau)`` from the analytic solver for the GRL code.

    The fit window starts after the fast recovery transient. ``residual`` is
    the RMS deviation of the log-linear fit.
    """
    from .analytic import AnalyticSolver, LossChannelSet

    code, ladder = named_code("grl")
    psi = (code.zero_logical + code.one_logical) / math.sqrt(2.0)
    rho0 = np.outer(psi, psi.conj())
    taus = np.linspace(tau_min, tau_max, points)
    solver = AnalyticSolver(code.dim, LossChannelSet.single_double(eta), ladder, lambda_coop)
    series = solver.evolve_many(rho0, taus)
    y = np.log(np.abs(series[:, 4, 7]) / abs(rho0[4, 7]))
    slope, intercept = np.polyfit(taus, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * taus + intercept)) ** 2)))
    return ProtectingFactorFit(float(-slope), float(intercept), resid, float(eta), float(lambda_coop))


def grl_closed_form(tau, eta: float = 0.0, u_override: float | None = None):
    """``2/3 + exp(-u tau)/3``, the six-state fidelity of a purely dephasing logical qubit."""
    if not 0.0 <= eta <= 0.08:
        raise OutOfRangeError("eta must lie in [0, 0.08]")
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise OutOfRangeError("tau must be >= 0")
    u = u_override if u_override is not None else calibrate_protecting_factor(float(eta)).u
    out = 2.0 / 3.0 + np.exp(-u * tau) / 3.0
    return float(out) if out.ndim == 0 else out
