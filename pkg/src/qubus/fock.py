"""Truncated number-basis simulator, kept independent of the branch engine.

Used as a brute-force cross-check of :mod:`qubus.core`, for the controlled
rotation to controlled displacement sandwich, and for fitting the dispersive
limit of the Jaynes-Cummings coupling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .core import (
    BusOp,
    CondDisp,
    CondRot,
    HybridState,
    QubusError,
    SingleQubit,
    UncondDisp,
    label_index,
    run_circuit,
    sigma,
)

PAD = 16
TAIL_TOL = 1e-8


class TruncationError(QubusError):
    pass


def truncation_dim(amplitude: float) -> int:
    """Fock dimension adequate for coherent amplitudes up to ``amplitude``."""
    m = float(amplitude) ** 2
    return math.ceil(m + 8 * math.sqrt(m + 1) + 10)


def tail_mass(vec: np.ndarray) -> float:
    """Probability in the top 10% of levels (last axis is the Fock index)."""
    vec = np.asarray(vec)
    dim = vec.shape[-1]
    top = int(math.floor(0.9 * dim))
    return float(np.sum(np.abs(vec[..., top:]) ** 2))


@dataclass(frozen=True, eq=False)
class FockVector:
    dim: int
    amps: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def tail_mass(self) -> float:
        return tail_mass(self.amps)


@dataclass(frozen=True, eq=False)
class FockOperator:
    dim: int
    matrix: np.ndarray

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            return FockOperator(self.dim, self.matrix @ other.matrix)
        if isinstance(other, FockVector):
            return FockVector(self.dim, self.matrix @ other.amps)
        return self.matrix @ other

    def unitarity_error(self, levels: int | None = None) -> float:
        """max |U^dag U - I| on the first ``levels`` columns (default: lower 90%).

        Cropped displacements leak out of the top columns, so only levels with
        truncation headroom are exactly unitary.
        """
        k = int(math.floor(0.9 * self.dim)) if levels is None else levels
        u = self.matrix[:, :k]
        return float(np.max(np.abs(u.conj().T @ u - np.eye(k))))


def _ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """<n|alpha> for n < dim, evaluated in log space."""
    n = np.arange(dim)
    alpha = complex(alpha)
    if alpha == 0:
        return (n == 0).astype(complex)
    log_amp = -0.5 * abs(alpha) ** 2 + n * np.log(alpha) - 0.5 * gammaln(n + 1)
    return np.exp(log_amp)


def coherent_fock(alpha: complex, dim: int) -> FockVector:
    if dim < truncation_dim(abs(alpha)):
        raise TruncationError(f"dim {dim} too small for |alpha|={abs(alpha):.3g}")
    return FockVector(dim, coherent_amplitudes(alpha, dim))


@lru_cache(maxsize=512)
def _displacement(beta: complex, dim: int) -> np.ndarray:
    big = dim + PAD
    a = _ladder(big)
    gen = beta * a.conj().T - beta.conjugate() * a
    return expm(gen)[:dim, :dim]


def displacement_matrix(beta: complex, dim: int) -> FockOperator:
    """D(beta) = exp(beta a^dag - conj(beta) a), built in dim+16 levels then cropped."""
    beta = complex(beta)
    if dim < truncation_dim(abs(beta)):
        raise TruncationError(f"dim {dim} too small for |beta|={abs(beta):.3g}")
    return FockOperator(dim, _displacement(beta, dim).copy())


def number_phase_matrix(theta: float, dim: int) -> FockOperator:
    """exp(i theta a^dag a)."""
    return FockOperator(dim, np.diag(np.exp(1j * theta * np.arange(dim))))


def quadrature_wavefunctions(x: np.ndarray, n_max: int, angle: float = 0.0) -> np.ndarray:
    """<x_angle|n> for n < n_max, with X = a^dag e^{i angle} + a e^{-i angle}.

    Hermite-function recurrence ``x psi_n = sqrt(n+1) psi_{n+1} + sqrt(n) psi_{n-1}``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    psi = np.zeros((n_max, len(x)))
    psi[0] = (2 * np.pi) ** -0.25 * np.exp(-(x**2) / 4)
    if n_max > 1:
        psi[1] = x * psi[0]
    for n in range(1, n_max - 1):
        psi[n + 1] = (x * psi[n] - math.sqrt(n) * psi[n - 1]) / math.sqrt(n + 1)
    return psi * np.exp(-1j * angle * np.arange(n_max))[:, None]


# -- joint qubit x bus evolution ---------------------------------------------------


def embed(s: HybridState, dim: int) -> np.ndarray:
    """Joint vector (2^n * dim, qubit-major) of a branch state."""
    out = np.zeros((2**s.n_qubits, dim), dtype=complex)
    for b in s.branches:
        out[label_index(b.label)] += b.coeff * coherent_amplitudes(b.bus, dim)
    return out.ravel()


def _label_sigmas(n_qubits: int, qubit: int) -> list[int]:
    return [sigma(format(i, f"0{n_qubits}b")[qubit]) for i in range(2**n_qubits)]


def required_dim(s: HybridState, ops: Sequence[BusOp]) -> int:
    """Truncation from a dry branch-engine run: max excursion plus largest step."""
    _, traj = run_circuit(s, ops)
    reach = max(abs(z) for stage in traj for zs in stage.values() for z in zs)
    step = max((abs(op.beta) for op in ops if isinstance(op, (CondDisp, UncondDisp))), default=0.0)
    return truncation_dim(reach + step)


def run_circuit_fock(
    n_qubits: int,
    qubit_amps: Sequence[complex],
    alpha: complex,
    ops: Sequence[BusOp],
    dim: int | None = None,
) -> np.ndarray:
    """Dense evolution of (qubits) x (truncated bus); returns the joint vector."""
    amps = np.asarray(qubit_amps, dtype=complex).ravel()
    if len(amps) != 2**n_qubits:
        raise ValueError("qubit amplitude vector has wrong length")
    if dim is None:
        dim = required_dim(HybridState.product(amps, alpha), ops)
    psi = np.outer(amps, coherent_amplitudes(alpha, dim))
    for op in ops:
        if isinstance(op, CondDisp):
            sig = _label_sigmas(n_qubits, op.qubit)
            plus = displacement_matrix(op.beta, dim).matrix
            minus = displacement_matrix(-op.beta, dim).matrix
            psi = np.stack([(plus if s > 0 else minus) @ row for s, row in zip(sig, psi)])
        elif isinstance(op, CondRot):
            sig = np.array(_label_sigmas(n_qubits, op.qubit))
            psi = psi * np.exp(1j * op.theta * sig[:, None] * np.arange(dim)[None, :])
        elif isinstance(op, UncondDisp):
            psi = psi @ displacement_matrix(op.beta, dim).matrix.T
        elif isinstance(op, SingleQubit):
            t = psi.reshape((2,) * n_qubits + (dim,))
            t = np.moveaxis(np.tensordot(op.u, t, axes=([1], [op.qubit])), 0, op.qubit)
            psi = t.reshape(2**n_qubits, dim)
        else:
            raise TypeError(f"not a bus operation: {op!r}")
    if tail_mass(psi) > TAIL_TOL:
        raise TruncationError(f"tail mass {tail_mass(psi):.2e} exceeds {TAIL_TOL} at dim {dim}")
    return psi.ravel()


def joint_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    return float(abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real))


# -- controlled displacement from controlled rotation ------------------------------


@dataclass(frozen=True, eq=False)
class SandwichReport:
    plus: FockOperator
    minus: FockOperator
    target_plus: FockOperator
    target_minus: FockOperator
    error: float
    displacement: complex


def sandwich_displacement(
    alpha: complex, chi_t: float, dim: int = 40, low: int = 8
) -> SandwichReport:
    """Compose U(a, s, t/4) U(-a, -s, t/2) U(a, s, t/4) for the displaced cross-Kerr generator.

    Each segment is exp(i s t [|a|^2 + conj(a) a^dag + a a + a^dag a]).  The
    target is exp(i |a| chi_t s X(theta)) with a = |a| e^{-i theta}.  ``error`` is
    the operator-norm distance restricted to the lowest ``low`` levels, maximised
    over both qubit signs; ``displacement`` is <a> after acting on vacuum for s=+1.
    """
    if chi_t < 0 or chi_t > 0.2:
        raise ValueError("sandwich construction needs 0 <= chi_t <= 0.2")
    alpha = complex(alpha)
    big = dim + PAD
    a = _ladder(big)
    ad = a.conj().T
    num = np.diag(np.arange(big, dtype=complex))
    eye = np.eye(big)
    theta = -np.angle(alpha) if alpha != 0 else 0.0
    quad = ad * np.exp(1j * theta) + a * np.exp(-1j * theta)

    def segment(al: complex, s: int, t: float) -> np.ndarray:
        return expm(1j * s * t * (abs(al) ** 2 * eye + al.conjugate() * ad + al * a + num))

    mats, targets, errs = {}, {}, []
    for s in (1, -1):
        u = segment(alpha, s, chi_t / 4) @ segment(-alpha, -s, chi_t / 2) @ segment(alpha, s, chi_t / 4)
        target = expm(1j * abs(alpha) * chi_t * s * quad)
        leak = np.linalg.norm(u[int(0.9 * dim) :, :low])
        if leak > 1e-8:
            raise TruncationError(f"low-level leakage {leak:.2e} at dim {dim}")
        errs.append(np.linalg.norm((u - target)[:dim, :low], 2))
        mats[s] = u[:dim, :dim]
        targets[s] = target[:dim, :dim]
    psi = mats[1][:, 0]
    disp = complex(np.vdot(psi, _ladder(dim) @ psi))
    return SandwichReport(
        FockOperator(dim, mats[1]),
        FockOperator(dim, mats[-1]),
        FockOperator(dim, targets[1]),
        FockOperator(dim, targets[-1]),
        float(max(errs)),
        disp,
    )


# -- dispersive limit of the Jaynes-Cummings coupling --------------------------------


@dataclass(frozen=True)
class JCParams:
    """Qubit splitting ``omega0``, bus frequency ``omega_c``, vacuum Rabi coupling ``Omega``."""

    omega0: float
    omega_c: float
    Omega: float
    t_final: float | None = None
    dt: float | None = None

    def __post_init__(self):
        if self.delta_d == 0:
            raise ValueError("detuning omega_c - omega0 must be nonzero")
        if abs(self.Omega / self.delta_d) >= 0.2:
            raise ValueError("|Omega/delta| must be below 0.2 for the dispersive limit")

    @property
    def delta_d(self) -> float:
        return self.omega_c - self.omega0

    @property
    def chi_predicted(self) -> float:
        return self.Omega**2 / (4 * self.delta_d)


@dataclass(frozen=True)
class JCFit:
    chi_eff: float
    chi_predicted: float
    relative_error: float
    dt: float
    t_final: float


def _rk4_propagator(h: np.ndarray, dt: float) -> np.ndarray:
    # one classical RK4 step of d psi/dt = -i H psi, as a matrix
    m = -1j * h * dt
    eye = np.eye(len(h))
    m2 = m @ m
    return eye + m + m2 / 2 + m2 @ m / 6 + m2 @ m2 / 24


def _jc_conditional_rate(p: JCParams, alpha: complex, dim: int, dt: float, t_final: float) -> float:
    a = _ladder(dim)
    # qubit basis (|0>, |1>); sigma_plus = |1><0| raises |0> to the excited |1>
    z_exc = np.diag([-1.0, 1.0])
    s_plus = np.array([[0, 0], [1, 0]], dtype=complex)
    # frame rotating at omega_c for both the bus and the qubit (excitation number is conserved)
    h = np.kron(-p.delta_d / 2 * z_exc, np.eye(dim)) + p.Omega / 2 * (
        np.kron(s_plus, a) + np.kron(s_plus.conj().T, a.conj().T)
    )
    n_steps = max(int(round(t_final / dt)), 1)
    n_samples = min(200, n_steps)
    stride = n_steps // n_samples
    step = np.linalg.matrix_power(_rk4_propagator(h, dt), stride)
    a_full = np.kron(np.eye(2), a)
    rates = []
    for q in (0, 1):
        psi = np.kron(np.eye(2)[q], coherent_amplitudes(alpha, dim)).astype(complex)
        times, phases = [], []
        for k in range(n_samples + 1):
            times.append(k * stride * dt)
            phases.append(np.angle(np.vdot(psi, a_full @ psi)))
            psi = step @ psi
        rates.append(np.polyfit(times, np.unwrap(phases), 1)[0])
    # H_eff = chi a^dag a sigma_z rotates the bus by -chi for |0>, +chi for |1>
    return (rates[1] - rates[0]) / 2


def dispersive_jc_validate(p: JCParams, alpha: complex = 1.0, dim: int | None = None) -> JCFit:
    """Integrate the full JC Hamiltonian and fit the qubit-conditional bus rotation rate."""
    if dim is None:
        dim = truncation_dim(abs(alpha)) + 4
    chi_pred = p.chi_predicted
    t_final = p.t_final if p.t_final is not None else (1 / abs(chi_pred) if chi_pred else 100.0)
    dt = p.dt if p.dt is not None else 1 / (40 * max(abs(p.delta_d), abs(p.Omega)))
    chi = _jc_conditional_rate(p, alpha, dim, dt, t_final)
    for _ in range(8):
        finer = _jc_conditional_rate(p, alpha, dim, dt / 2, t_final)
        scale = max(abs(finer), abs(chi_pred), 1e-300)
        if abs(finer - chi) <= 1e-3 * scale or finer == chi:
            break
        chi, dt = finer, dt / 2
    else:
        raise QubusError("JC integration did not converge under step halving")
    if chi_pred == 0:
        rel = 0.0 if chi == 0 else math.inf
    else:
        rel = abs(chi - chi_pred) / abs(chi_pred)
    return JCFit(float(chi), chi_pred, rel, dt, t_final)
