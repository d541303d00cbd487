"""Exact branch representation of n qubits coupled to one coherent bus mode.

A state is a finite superposition ``sum_i c_i |label_i>|alpha_i>`` where each
``|alpha_i>`` is a coherent state of the bus.  Conditional displacements,
conditional rotations, unconditional displacements and single-qubit unitaries
all map this form to itself, so every gate is exact; no Fock truncation is
involved.  Displacement phases are kept in the branch coefficients.
"""

from __future__ import annotations

import cmath
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

ComplexAmplitude = complex

DEFAULT_MERGE_TOL = 1e-9
PRUNE_TOL = 1e-14
DEFAULT_BRANCH_CAP = 4096
UNITARY_TOL = 1e-12

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class QubusError(Exception):
    """Base class for simulation errors."""


class BranchCapExceeded(QubusError):
    pass


class BusConsumedError(QubusError):
    pass


def branch_cap() -> int:
    value = os.environ.get("QUBUS_BRANCH_CAP")
    return int(value) if value else DEFAULT_BRANCH_CAP


def sigma(bit: str) -> int:
    """sigma_z eigenvalue of a computational basis bit: |0> -> +1, |1> -> -1."""
    return 1 if bit == "0" else -1


def label_index(label: str) -> int:
    """Row index of ``label`` in a 2^n qubit vector; qubit 0 is the most significant bit."""
    return int(label, 2)


def index_label(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b")


def coherent_overlap(a: complex, b: complex) -> complex:
    """Return <b|a> for coherent states |a>, |b>."""
    return cmath.exp(-0.5 * abs(a) ** 2 - 0.5 * abs(b) ** 2 + b.conjugate() * a)


@dataclass(frozen=True, slots=True)
class Branch:
    label: str
    coeff: complex
    bus: complex


@dataclass(frozen=True)
class HybridState:
    """Immutable superposition of (qubit label, coherent bus amplitude) branches.

    Branches sharing a label and a bus amplitude (within ``merge_tol``) are merged
    on construction and coefficients below 1e-14 are dropped.  ``bus_consumed``
    marks a state whose bus was projected by a measurement; every branch then
    carries the placeholder amplitude 0 and bus operations are refused.
    """

    n_qubits: int
    branches: tuple[Branch, ...]
    merge_tol: float = DEFAULT_MERGE_TOL
    bus_consumed: bool = False
    cap: int = field(default_factory=branch_cap, compare=False, repr=False)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        for b in self.branches:
            if len(b.label) != self.n_qubits or set(b.label) - {"0", "1"}:
                raise ValueError(f"bad branch label {b.label!r} for {self.n_qubits} qubits")
        merged = _merge(self.branches, self.merge_tol)
        if len(merged) > self.cap:
            raise BranchCapExceeded(
                f"{len(merged)} branches exceeds cap {self.cap}; circuit left the coherent-branch gate set"
            )
        object.__setattr__(self, "branches", merged)

    # -- constructors -------------------------------------------------------

    @classmethod
    def product(cls, qubit_amps: Sequence[complex], bus: complex = 0j, **kw) -> HybridState:
        """Product of a 2^n qubit vector (qubit 0 most significant) and coherent bus |bus>."""
        amps = np.asarray(qubit_amps, dtype=complex).ravel()
        n = int(round(math.log2(len(amps))))
        if 2**n != len(amps):
            raise ValueError("qubit vector length must be a power of two")
        branches = [
            Branch(index_label(i, n), complex(c), complex(bus)) for i, c in enumerate(amps) if c != 0
        ]
        return cls(n, tuple(branches), **kw)

    @classmethod
    def basis(cls, label: str, bus: complex = 0j, **kw) -> HybridState:
        return cls(len(label), (Branch(label, 1 + 0j, complex(bus)),), **kw)

    @classmethod
    def plus_all(cls, n_qubits: int, bus: complex = 0j, **kw) -> HybridState:
        """The uniform superposition 2^{-n/2} sum_x |x>|bus>."""
        return cls.product(np.full(2**n_qubits, 2 ** (-n_qubits / 2)), bus, **kw)

    def replace(self, branches: Iterable[Branch], *, bus_consumed: bool | None = None) -> HybridState:
        return HybridState(
            self.n_qubits,
            tuple(branches),
            self.merge_tol,
            self.bus_consumed if bus_consumed is None else bus_consumed,
            self.cap,
        )

    # -- queries --------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.branches)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(label indices, coefficients, bus amplitudes) as numpy arrays."""
        idx = np.array([label_index(b.label) for b in self.branches], dtype=int)
        c = np.array([b.coeff for b in self.branches], dtype=complex)
        z = np.array([b.bus for b in self.branches], dtype=complex)
        return idx, c, z

    def norm_squared(self) -> float:
        return float(np.trace(_gram_density(self)).real)

    def normalized(self) -> HybridState:
        nrm = math.sqrt(self.norm_squared())
        if nrm == 0:
            raise QubusError("cannot normalize a zero state")
        return self.replace(Branch(b.label, b.coeff / nrm, b.bus) for b in self.branches)

    def bus_amplitudes(self) -> dict[str, list[complex]]:
        out: dict[str, list[complex]] = {}
        for b in self.branches:
            out.setdefault(b.label, []).append(b.bus)
        return out

    def bus_spread(self) -> float:
        """Largest pairwise distance between bus amplitudes; 0 means the bus is disentangled."""
        z = np.array([b.bus for b in self.branches])
        if len(z) < 2:
            return 0.0
        return float(np.max(np.abs(z[:, None] - z[None, :])))

    def qubit_vector(self) -> np.ndarray:
        """Qubit amplitudes when all branches share one bus amplitude."""
        if self.bus_spread() > self.merge_tol:
            raise QubusError("bus is entangled with the qubits; use reduced_qubit_density")
        v = np.zeros(2**self.n_qubits, dtype=complex)
        for b in self.branches:
            v[label_index(b.label)] += b.coeff
        return v

    def global_phase(self) -> float:
        """Phase of the largest branch coefficient (unobservable, reported for bookkeeping)."""
        if not self.branches:
            return 0.0
        return cmath.phase(max(self.branches, key=lambda b: abs(b.coeff)).coeff)


def _merge(branches: Sequence[Branch], tol: float) -> tuple[Branch, ...]:
    # grid hashing with a 3x3 neighbourhood probe keeps merging O(B)
    buckets: dict[tuple, list[int]] = {}
    out: list[list] = []
    for b in branches:
        if tol > 0:
            key_re = math.floor(b.bus.real / tol)
            key_im = math.floor(b.bus.imag / tol)
        else:
            key_re, key_im = b.bus.real, b.bus.imag
        hit = None
        probes = (-1, 0, 1) if tol > 0 else (0,)
        for dr in probes:
            for di in probes:
                for k in buckets.get((b.label, key_re + dr, key_im + di), ()):
                    if abs(out[k][2] - b.bus) <= tol:
                        hit = k
                        break
                if hit is not None:
                    break
            if hit is not None:
                break
        if hit is None:
            buckets.setdefault((b.label, key_re, key_im), []).append(len(out))
            out.append([b.label, b.coeff, b.bus])
        else:
            out[hit][1] += b.coeff
    return tuple(Branch(lab, c, z) for lab, c, z in out if abs(c) >= PRUNE_TOL)


# -- circuit elements ---------------------------------------------------------


@dataclass(frozen=True)
class CondDisp:
    """D(sigma_z beta) on the bus, conditioned on ``qubit``."""

    qubit: int
    beta: complex


@dataclass(frozen=True)
class CondRot:
    """exp(i theta sigma_z a^dag a): bus rotated by +theta for |0>, -theta for |1>."""

    qubit: int
    theta: float


@dataclass(frozen=True)
class UncondDisp:
    beta: complex


@dataclass(frozen=True, eq=False)
class SingleQubit:
    qubit: int
    u: np.ndarray
    name: str = ""

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        if u.shape != (2, 2):
            raise ValueError("single-qubit unitary must be 2x2")
        if np.max(np.abs(u.conj().T @ u - np.eye(2))) > UNITARY_TOL:
            raise ValueError("single-qubit operator is not unitary within 1e-12")
        object.__setattr__(self, "u", u)

    def __eq__(self, other):
        return (
            isinstance(other, SingleQubit)
            and self.qubit == other.qubit
            and np.array_equal(self.u, other.u)
        )

    def __hash__(self):
        return hash((self.qubit, self.u.tobytes()))


BusOp = Union[CondDisp, CondRot, UncondDisp, SingleQubit]


def hadamard(qubit: int) -> SingleQubit:
    return SingleQubit(qubit, HADAMARD, "H")


def _check_qubit(s: HybridState, qubit: int):
    if not 0 <= qubit < s.n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {s.n_qubits} qubits")


def _check_bus(s: HybridState):
    if s.bus_consumed:
        raise BusConsumedError("bus was consumed by a measurement; prepare a fresh bus first")


def _displaced(b: Branch, d: complex) -> Branch:
    # D(d)|z> = exp(i Im(d conj z)) |z + d>
    phase = (d * b.bus.conjugate()).imag
    return Branch(b.label, b.coeff * cmath.exp(1j * phase), b.bus + d)


def apply_cond_disp(s: HybridState, qubit: int, beta: complex) -> HybridState:
    _check_qubit(s, qubit)
    _check_bus(s)
    beta = complex(beta)
    return s.replace(_displaced(b, sigma(b.label[qubit]) * beta) for b in s.branches)


def apply_cond_rot(s: HybridState, qubit: int, theta: float) -> HybridState:
    _check_qubit(s, qubit)
    _check_bus(s)
    return s.replace(
        Branch(b.label, b.coeff, b.bus * cmath.exp(1j * sigma(b.label[qubit]) * theta))
        for b in s.branches
    )


def apply_uncond_disp(s: HybridState, beta: complex) -> HybridState:
    _check_bus(s)
    beta = complex(beta)
    return s.replace(_displaced(b, beta) for b in s.branches)


def apply_single_qubit(s: HybridState, qubit: int, u: np.ndarray) -> HybridState:
    _check_qubit(s, qubit)
    u = SingleQubit(qubit, u).u
    out = []
    for b in s.branches:
        bit = int(b.label[qubit])
        for new_bit in (0, 1):
            amp = u[new_bit, bit]
            if amp != 0:
                lab = b.label[:qubit] + str(new_bit) + b.label[qubit + 1 :]
                out.append(Branch(lab, b.coeff * amp, b.bus))
    return s.replace(out)


def apply(s: HybridState, op: BusOp) -> HybridState:
    match op:
        case CondDisp(qubit=q, beta=beta):
            return apply_cond_disp(s, q, beta)
        case CondRot(qubit=q, theta=theta):
            return apply_cond_rot(s, q, theta)
        case UncondDisp(beta=beta):
            return apply_uncond_disp(s, beta)
        case SingleQubit():
            return apply_single_qubit(s, op.qubit, op.u)
    raise TypeError(f"not a bus operation: {op!r}")


Trajectory = list[dict[str, list[complex]]]


def run_circuit(s: HybridState, ops: Iterable[BusOp]) -> tuple[HybridState, Trajectory]:
    """Apply ``ops`` in order.

    The trajectory holds the per-label bus amplitudes of the initial state followed
    by one entry after every op, i.e. ``len(ops) + 1`` stages.
    """
    trajectory = [s.bus_amplitudes()]
    for op in ops:
        s = apply(s, op)
        trajectory.append(s.bus_amplitudes())
    return s, trajectory


# -- reduced states and figures of merit ----------------------------------------


def _gram_density(s: HybridState) -> np.ndarray:
    dim = 2**s.n_qubits
    if not s.branches:
        return np.zeros((dim, dim), dtype=complex)
    idx, c, z = s.arrays()
    # overlap[i, j] = <z_j|z_i>
    overlap = np.exp(
        -0.5 * np.abs(z)[:, None] ** 2 - 0.5 * np.abs(z)[None, :] ** 2 + z[:, None] * z.conj()[None, :]
    )
    m = c[:, None] * c.conj()[None, :] * overlap
    onehot = np.zeros((len(idx), dim))
    onehot[np.arange(len(idx)), idx] = 1.0
    return onehot.T @ m @ onehot


def reduced_qubit_density(s: HybridState) -> np.ndarray:
    """Qubit density matrix after tracing out the bus (rows indexed by label, qubit 0 MSB)."""
    rho = _gram_density(s)
    return 0.5 * (rho + rho.conj().T)


def _check_density(rho: np.ndarray, tol: float = 1e-8):
    if rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1) > tol:
        raise ValueError("density matrix trace differs from 1")
    if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -tol:
        raise ValueError("density matrix is not positive semidefinite")


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("concurrence needs a 4x4 density matrix")
    _check_density(rho)
    yy = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])
    # lambda_i are the singular values of tau = A^T (Y x Y) A with rho = A A^dag; taking
    # square roots of eigenvalues of rho rho~ instead loses half the digits near pure states
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    keep = w > 1e-14 * max(w.max(), 1e-300)
    a = v[:, keep] * np.sqrt(w[keep])
    lam = np.zeros(4)
    sv = np.linalg.svd(a.T @ yy @ a, compute_uv=False)
    lam[: len(sv)] = sv
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def fidelity_to(state: HybridState | np.ndarray, target: Sequence[complex]) -> float:
    """<target| rho |target> for a HybridState (bus traced out) or a density matrix."""
    rho = reduced_qubit_density(state) if isinstance(state, HybridState) else np.asarray(state)
    t = np.asarray(target, dtype=complex).ravel()
    if rho.shape != (len(t), len(t)):
        raise ValueError(f"target of length {len(t)} does not match density of shape {rho.shape}")
    t = t / np.linalg.norm(t)
    return float(np.clip(np.vdot(t, rho @ t).real, 0.0, 1.0))
