"""Fock-space value types and the element-wise Lindblad generators.

Fock indices are zero-based everywhere: level ``k`` is the state with ``k``
photons and a truncation ``N`` keeps levels ``0 .. N-1``. Amplitudes above
``N-1`` are treated as exactly zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Iterable, Sequence

import numpy as np

DEFAULT_DIM = 8

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
PSD_TOL = 1e-8
SOLVER_TRACE_TOL = 1e-6


class AQECError(Exception):
    """Base class for toolkit errors."""


class OutOfRangeError(AQECError, ValueError):
    pass


class StructuralError(AQECError, ValueError):
    pass


class InvalidStateError(AQECError, ValueError):
    pass


class DegenerateLadderError(AQECError, ValueError):
    pass


class DegenerateCodeError(AQECError, ValueError):
    pass


class ConfigurationError(AQECError, ValueError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def falling_factorial(k: int, n: int) -> float:
    """k!/(k-n)!, zero when k < n."""
    if k < n or k < 0:
        return 0.0
    return float(factorial(k) // factorial(k - n))


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)


def fock_vector(dim: int, n: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def check_density_matrix(entries: np.ndarray, trace_tol: float = TRACE_TOL) -> None:
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise StructuralError(f"density matrix must be square, got shape {entries.shape}")
    herm = np.max(np.abs(entries - entries.conj().T)) if entries.size else 0.0
    if herm > HERMITIAN_TOL:
        raise InvalidStateError(f"matrix not Hermitian (max deviation {herm:.3e})")
    tr = np.trace(entries).real
    if abs(tr - 1.0) > trace_tol:
        raise InvalidStateError(f"trace {tr:.12f} outside 1 +/- {trace_tol:g}")
    w_min = np.linalg.eigvalsh(0.5 * (entries + entries.conj().T)).min()
    if w_min < -PSD_TOL:
        raise InvalidStateError(f"matrix not positive semidefinite (min eigenvalue {w_min:.3e})")


@dataclass(frozen=True, eq=False)
class FockDensityMatrix:
    """Density matrix over the truncated Fock basis."""

    entries: np.ndarray
    trace_tol: float = TRACE_TOL

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=complex)
        check_density_matrix(arr, self.trace_tol)
        object.__setattr__(self, "entries", _frozen(arr))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_vector(cls, psi: Sequence[complex]) -> "FockDensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def fock(cls, dim: int, n: int) -> "FockDensityMatrix":
        return cls.from_vector(fock_vector(dim, n))

    @classmethod
    def evolved(cls, entries: np.ndarray, trace_tol: float = SOLVER_TRACE_TOL) -> "FockDensityMatrix":
        """Wrap a solver output, allowing trace drift up to ``trace_tol``."""
        arr = np.asarray(entries, dtype=complex)
        return cls(0.5 * (arr + arr.conj().T), trace_tol=trace_tol)

    def overlap(self, other: "FockDensityMatrix | np.ndarray") -> float:
        """Tr(rho sigma), the fidelity measure used throughout."""
        o = other.entries if isinstance(other, FockDensityMatrix) else np.asarray(other)
        return float(np.real(np.sum(self.entries * o.T)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class DiagonalVector:
    """The m-th diagonal ``values[k] = rho[k, k+m]`` (``rho[k+|m|, k]`` for m < 0)."""

    offset: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(np.asarray(self.values, dtype=complex)))

    @property
    def dim(self) -> int:
        return len(self.values) + abs(self.offset)


@dataclass(frozen=True, eq=False)
class Codeword:
    """Logical basis pair ``|0_L>``, ``|1_L>`` over Fock states."""

    zero_logical: np.ndarray
    one_logical: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.zero_logical, dtype=complex)
        o = np.asarray(self.one_logical, dtype=complex)
        if z.shape != o.shape or z.ndim != 1:
            raise StructuralError("logical vectors must be 1-D with equal length")
        for name, v in (("|0_L>", z), ("|1_L>", o)):
            if abs(np.linalg.norm(v) - 1.0) > 1e-10:
                raise DegenerateCodeError(f"{name} not normalized (norm {np.linalg.norm(v):.12f})")
        if abs(np.vdot(z, o)) > 1e-10:
            raise DegenerateCodeError("logical states are not orthogonal")
        object.__setattr__(self, "zero_logical", _frozen(z))
        object.__setattr__(self, "one_logical", _frozen(o))

    @property
    def dim(self) -> int:
        return len(self.zero_logical)

    @classmethod
    def from_amplitudes(cls, dim: int, zero: dict, one: dict) -> "Codeword":
        z = np.zeros(dim, dtype=complex)
        o = np.zeros(dim, dtype=complex)
        for n, c in zero.items():
            z[n] = c
        for n, c in one.items():
            o[n] = c
        return cls(z / np.linalg.norm(z), o / np.linalg.norm(o))

    def padded(self, dim: int) -> "Codeword":
        """Same code embedded in a larger truncation."""
        if dim < self.dim:
            raise OutOfRangeError(f"cannot shrink code from N={self.dim} to N={dim}")
        z = np.zeros(dim, dtype=complex)
        o = np.zeros(dim, dtype=complex)
        z[: self.dim] = self.zero_logical
        o[: self.dim] = self.one_logical
        return Codeword(z, o)


@dataclass(frozen=True, eq=False)
class ProjectorLadder:
    """Linear jump operator ``L_o = sum_n d_n |n><n-1|`` for n = 1 .. N-1.

    ``coeffs[n-1]`` holds ``d_n``. ``big_lambda`` is ``sum d_n**2``; the
    dissipator always uses the normalized form ``L_o / sqrt(big_lambda)``.
    """

    coeffs: np.ndarray
    big_lambda: float = field(init=False)

    def __post_init__(self):
        d = np.asarray(self.coeffs, dtype=float)
        if d.ndim != 1:
            raise StructuralError("ladder coefficients must be 1-D")
        object.__setattr__(self, "coeffs", _frozen(d))
        object.__setattr__(self, "big_lambda", float(np.sum(d * d)))

    @property
    def dim(self) -> int:
        return len(self.coeffs) + 1

    @classmethod
    def from_terms(cls, dim: int, terms: dict) -> "ProjectorLadder":
        """Build from ``{n: d_n}`` where ``d_n`` multiplies ``|n><n-1|``."""
        d = np.zeros(dim - 1)
        for n, c in terms.items():
            if not 1 <= n < dim:
                raise OutOfRangeError(f"ladder term |{n}><{n - 1}| outside N={dim}")
            d[n - 1] = c
        return cls(d)

    def lowered(self) -> np.ndarray:
        """``lam[k]`` = amplitude of ``|k+1><k|``, with ``lam[N-1] = 0``."""
        return np.append(self.coeffs, 0.0)

    def operator(self, normalized: bool = True) -> np.ndarray:
        op = np.diag(self.coeffs.astype(complex), -1)
        if normalized:
            if self.big_lambda <= 0:
                raise DegenerateLadderError("ladder has zero norm")
            op = op / np.sqrt(self.big_lambda)
        return op

    def padded(self, dim: int) -> "ProjectorLadder":
        d = np.zeros(dim - 1)
        d[: len(self.coeffs)] = self.coeffs
        return ProjectorLadder(d)


@dataclass(frozen=True)
class SystemParams:
    """Dimensionless rates, all relative to the single-photon loss rate.

    ``lambda_coop`` defaults to the adiabatic-elimination value
    ``4 g^2 / (gamma_a gamma_b)`` of the hybrid model ``H = g(L s+ + L^dag s-)``
    with ancilla dissipator ``(gamma_b/2) D[s-]``.
    """

    gamma_b_ratio: float = 1800.0
    eta2: float = 0.0
    g_ratio: float = 600.0
    lambda_coop: float | None = None

    def __post_init__(self):
        for name in ("gamma_b_ratio", "eta2", "g_ratio"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")
        if self.lambda_coop is None:
            lam = 4.0 * self.g_ratio**2 / self.gamma_b_ratio if self.gamma_b_ratio > 0 else 0.0
            object.__setattr__(self, "lambda_coop", lam)
        elif self.lambda_coop < 0:
            raise ConfigurationError("lambda_coop must be >= 0")

    @property
    def derived_lambda(self) -> bool:
        return abs(self.lambda_coop - 4.0 * self.g_ratio**2 / self.gamma_b_ratio) <= 1e-9 * max(1.0, self.lambda_coop)


def extract_diagonal(rho, m: int) -> DiagonalVector:
    arr = np.asarray(rho)
    n = arr.shape[0]
    if abs(m) >= n:
        raise OutOfRangeError(f"diagonal offset {m} outside +/-{n - 1}")
    return DiagonalVector(m, np.diagonal(arr, offset=m).copy())


def extract_all(rho) -> list[DiagonalVector]:
    n = np.asarray(rho).shape[0]
    return [extract_diagonal(rho, m) for m in range(-(n - 1), n)]


def assemble_from_diagonals(diags: Iterable[DiagonalVector], dim: int, *, validate_state: bool = False) -> np.ndarray:
    """Inverse of :func:`extract_all`.

    Conjugate diagonals are averaged so the result is exactly Hermitian; a
    mismatch above 1e-8 between ``rho^(m)`` and ``conj(rho^(-m))`` is an error.
    Returns the raw matrix; wrap in :class:`FockDensityMatrix` when a state is
    expected (``validate_state=True`` does that check without wrapping).
    """
    by_offset: dict[int, DiagonalVector] = {}
    for d in diags:
        if d.offset in by_offset:
            raise StructuralError(f"duplicate diagonal offset {d.offset}")
        if abs(d.offset) >= dim or len(d.values) != dim - abs(d.offset):
            raise StructuralError(f"diagonal {d.offset} has wrong length {len(d.values)} for N={dim}")
        by_offset[d.offset] = d
    missing = sorted(set(range(-(dim - 1), dim)) - set(by_offset))
    if missing:
        raise StructuralError(f"missing diagonal offsets {missing}")

    out = np.zeros((dim, dim), dtype=complex)
    idx = np.arange(dim)
    for m in range(0, dim):
        upper = by_offset[m].values
        lower = by_offset[-m].values
        mismatch = np.max(np.abs(upper - lower.conj())) if len(upper) else 0.0
        if mismatch > 1e-8:
            raise InvalidStateError(f"diagonals +/-{m} are not conjugate (mismatch {mismatch:.3e})")
        sym = 0.5 * (upper + lower.conj())
        rows = idx[: dim - m]
        out[rows, rows + m] = sym
        out[rows + m, rows] = sym.conj()
    if validate_state:
        check_density_matrix(out, SOLVER_TRACE_TOL)
    return out


def apply_lindblad_an(rho, n: int) -> np.ndarray:
    """Element-wise ``D[a^n] rho = 2 a^n rho a^n+ - a^n+ a^n rho - rho a^n+ a^n``.

    Returns the (traceless, Hermitian) generator output as an array.
    """
    r = np.asarray(rho, dtype=complex)
    dim = r.shape[0]
    if not 1 <= n < dim:
        raise OutOfRangeError(f"loss order {n} outside [1, {dim - 1}]")
    A = np.array([falling_factorial(k, n) for k in range(dim)])
    out = -(A[:, None] + A[None, :]) * r
    s = np.sqrt(A[n:])
    out[: dim - n, : dim - n] += 2.0 * np.outer(s, s) * r[n:, n:]
    return out


def apply_lindblad_eng(rho, ladder: ProjectorLadder) -> np.ndarray:
    """Element-wise ``D[L_o / sqrt(Lambda)] rho``."""
    r = np.asarray(rho, dtype=complex)
    dim = r.shape[0]
    if ladder.dim != dim:
        raise StructuralError(f"ladder built for N={ladder.dim}, state has N={dim}")
    if ladder.big_lambda <= 0:
        raise DegenerateLadderError("engineered dissipator needs a ladder with big_lambda > 0")
    lam = ladder.lowered()
    sq = lam * lam
    out = -(sq[:, None] + sq[None, :]) * r
    out[1:, 1:] += 2.0 * np.outer(lam[:-1], lam[:-1]) * r[:-1, :-1]
    return out / ladder.big_lambda


def dissipator(rho: np.ndarray, op: np.ndarray) -> np.ndarray:
    """Explicit ``2 X rho X+ - X+X rho - rho X+X`` by matrix products."""
    xd = op.conj().T
    xdx = xd @ op
    return 2.0 * op @ rho @ xd - xdx @ rho - rho @ xdx
