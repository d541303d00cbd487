"""Named gate and measurement protocols built from bus operations and detector models."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import erfc

from .core import (
    HADAMARD,
    BusOp,
    CondDisp,
    CondRot,
    HybridState,
    QubusError,
    Trajectory,
    UncondDisp,
    concurrence,
    hadamard,
    reduced_qubit_density,
    run_circuit,
)
from .measurement import (
    Bucket,
    Homodyne,
    HomodyneSampler,
    MeasurementModel,
    MeasurementRecord,
    MixedOutcome,
    PhotonNumber,
    bucket_measure,
    bucket_statistics,
    discrimination_error,
    exact_qnd_error,
    homodyne_measure,
    homodyne_pdf,
    quoted_qnd_error,
    photon_number_measure,
    photon_number_pmf,
)
from .sequences import instantiate, load_frozen

RNG_NAME = "numpy.Philox"
RNG_VERSION = np.__version__

PLUS2 = (0.5, 0.5, 0.5, 0.5)
S2 = 1 / math.sqrt(2)
PSI_PLUS = np.array([0, S2, S2, 0], dtype=complex)
PHI_PLUS = np.array([S2, 0, 0, S2], dtype=complex)
PHI_MINUS = np.array([S2, 0, 0, -S2], dtype=complex)
LOCAL_U = (np.eye(2) - 1j * np.diag([1, -1])) / math.sqrt(2)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
CNOT_10 = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)


def shot_rng(seed: int, shot: int) -> np.random.Generator:
    """Independent stream for one shot: Philox keyed by the seed, counter offset by the shot index."""
    return np.random.Generator(np.random.Philox(key=[seed % 2**64, 0], counter=[0, shot, 0, 0]))


@dataclass(frozen=True)
class ProtocolResult:
    outcome: MeasurementRecord | None
    final: HybridState | MixedOutcome
    metrics: dict[str, float]
    trajectory: Trajectory | None = None
    ledger: tuple[dict, ...] = ()


def _input_state(qubits, bus: complex) -> HybridState:
    if isinstance(qubits, str):
        if qubits != "plus_all":
            raise ValueError(f"unknown qubit preset {qubits!r}")
        return HybridState.plus_all(2, bus)
    v = np.asarray(qubits, dtype=complex).ravel()
    nrm = np.linalg.norm(v)
    if abs(nrm - 1) > 1e-10:
        raise ValueError(f"qubit amplitudes have norm {nrm!r}, expected 1")
    return HybridState.product(v, bus)


def _density(final: HybridState | MixedOutcome) -> np.ndarray:
    return final.density() if isinstance(final, MixedOutcome) else reduced_qubit_density(final)


def _fid(rho: np.ndarray, target: np.ndarray) -> float:
    t = target / np.linalg.norm(target)
    return float(np.clip(np.vdot(t, rho @ t).real, 0.0, 1.0))


def _state_metrics(final, target: np.ndarray | None = None) -> dict[str, float]:
    rho = _density(final)
    out = {}
    if rho.shape == (4, 4):
        out["concurrence"] = concurrence(rho)
    if target is not None:
        out["fidelity"] = _fid(rho, target)
    return out


def _mixture(rho: np.ndarray, n_qubits: int) -> MixedOutcome:
    vals, vecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    comps = [
        (float(lam), HybridState.product(v, 0j, bus_consumed=True))
        for lam, v in zip(vals, vecs.T)
        if lam > 1e-15
    ]
    total = sum(w for w, _ in comps)
    return MixedOutcome(tuple((w / total, s) for w, s in comps))


# -- QND readout --------------------------------------------------------------------------


def qnd_qubit_measurement(
    c0: complex,
    c1: complex,
    beta: float,
    excess_noise: float = 0.0,
    alpha: complex = 0j,
    rng: np.random.Generator | None = None,
    x: float | None = None,
) -> ProtocolResult:
    """Conditional displacement then X(0) homodyne; a positive reading reports bit 0."""
    if abs(abs(c0) ** 2 + abs(c1) ** 2 - 1) > 1e-10:
        raise ValueError("qubit amplitudes must be normalized")
    ops = [CondDisp(0, beta), UncondDisp(-alpha)]
    s, traj = run_circuit(HybridState.product([c0, c1], alpha), ops)
    metrics = {
        "p0": abs(c0) ** 2,
        "error_quoted": quoted_qnd_error(beta, excess_noise),
        "error_exact": exact_qnd_error(beta, excess_noise),
    }
    if rng is None and x is None:
        return ProtocolResult(None, s, metrics, traj)
    rec = homodyne_measure(s, Homodyne(0.0, excess_noise), rng, x)
    metrics["bit"] = 0 if rec.outcome > 0 else 1
    return ProtocolResult(rec, rec.posterior, metrics, traj)


def qnd_error_rate(beta: float, excess_noise: float, shots: int, seed: int, bit: int = 0) -> float:
    """Fraction of shots on a basis state whose reported bit is wrong (one Philox stream per shot)."""
    c = (1.0, 0.0) if bit == 0 else (0.0, 1.0)
    pre = qnd_qubit_measurement(*c, beta, excess_noise).final
    sampler = HomodyneSampler(pre, Homodyne(0.0, excess_noise))
    wrong = 0
    for k in range(shots):
        _, reported = sampler(shot_rng(seed, k))
        wrong += (0 if reported > 0 else 1) != bit
    return wrong / shots


# -- displacement parity gate -------------------------------------------------------------


def parity_ops(beta: float, alpha: complex = 0j) -> list[BusOp]:
    return [CondDisp(0, beta), CondDisp(1, beta), UncondDisp(-alpha)]


def _herald_probability(s: HybridState, model: Homodyne, lo: float, hi: float) -> float:
    pdf = homodyne_pdf(s, model)
    return float(integrate.quad(pdf, lo, hi, limit=200)[0])


def parity_gate_displacement(
    qubits=PLUS2,
    beta: float = 3.0,
    detector: MeasurementModel = PhotonNumber(),
    rng: np.random.Generator | None = None,
    outcome=None,
    alpha: complex = 0j,
) -> ProtocolResult:
    """Two conditional displacements, return the bus to vacuum, then detect.

    With a homodyne detector the odd-parity result is heralded by a reading within
    2|beta| of zero.
    """
    s, traj = run_circuit(_input_state(qubits, alpha), parity_ops(beta, alpha))
    metrics: dict[str, float] = {}
    analytic = rng is None and outcome is None
    match detector:
        case PhotonNumber():
            metrics["p_n0"] = float(photon_number_pmf(s)[0])
            if analytic:
                return ProtocolResult(None, s, metrics, traj)
            rec = photon_number_measure(s, rng, outcome)
            target = PSI_PLUS if rec.outcome == 0 else np.array([S2, 0, 0, S2 * (-1) ** rec.outcome])
            metrics["odd_parity"] = float(rec.outcome == 0)
        case Bucket(worst_case=wc):
            st = bucket_statistics(s)
            metrics.update(p_click=st.p_click, A=st.even_weight)
            if analytic:
                return ProtocolResult(None, s, metrics, traj)
            rec = bucket_measure(s, rng, outcome, worst_case=wc)
            target = PHI_PLUS if rec.outcome else PSI_PLUS
            metrics["odd_parity"] = float(not rec.outcome)
        case Homodyne():
            band = 2 * abs(beta)
            metrics["herald_probability"] = _herald_probability(s, detector, -band, band)
            if analytic:
                return ProtocolResult(None, s, metrics, traj)
            rec = homodyne_measure(s, detector, rng, outcome)
            metrics["heralded"] = float(abs(rec.outcome) < band)
            target = PSI_PLUS
        case _:
            raise TypeError(f"unsupported detector {detector!r}")
    metrics["probability"] = rec.probability
    metrics.update(_state_metrics(rec.posterior, target))
    return ProtocolResult(rec, rec.posterior, metrics, traj)


# -- bucket purification ------------------------------------------------------------------


def purification_recursion(m: int, a: float = 0.5, first_click: float = 0.5) -> list[float]:
    """Probability of still being mixed after k = 1..m rounds: first_click * a^(k-1)."""
    return [first_click * a ** (k - 1) for k in range(1, m + 1)]


def bucket_purification(
    qubits=PLUS2,
    beta: float = 3.0,
    m: int = 1,
    rng: np.random.Generator | None = None,
    worst_case: bool = False,
) -> ProtocolResult:
    """Repeat the bucket-detected parity gate until a no-click heralds the odd Bell state.

    Round 1 acts on the input directly; later rounds rotate the leftover even-parity
    mixture with H on both qubits first.  Without an rng every round is forced to click,
    which traces the all-failure branch used by the residual recursion.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    rho = reduced_qubit_density(_input_state(qubits, 0j))
    hh = np.kron(HADAMARD, HADAMARD)
    residual = 1.0
    ledger = []
    success = False
    for k in range(1, m + 1):
        if k > 1:
            rho = hh @ rho @ hh.conj().T
        even = np.zeros((4, 4), dtype=complex)
        odd = np.zeros((4, 4), dtype=complex)
        vac = np.zeros((4, 4), dtype=complex)
        p_click = 0.0
        for w, comp in _mixture(rho, 2).components:
            s, _ = run_circuit(HybridState.product(comp.qubit_vector(), 0j), parity_ops(beta))
            st = bucket_statistics(s)
            p_click += w * st.p_click
            even += w * st.rho_even_click
            odd += w * st.rho_odd
            vac += w * np.outer(st.vacuum_amps, st.vacuum_amps.conj())
        a = float(np.trace(even).real / p_click) if p_click > 0 else float("nan")
        click = True if rng is None else bool(rng.random() < p_click)
        if not click:
            rho = vac / np.trace(vac).real
            residual *= 1 - p_click
            success = True
        else:
            residual *= p_click
            if worst_case:
                te, to = np.trace(even).real, np.trace(odd).real
                parts = [r / t for r, t in ((even, te), (odd, to)) if t > 1e-300]
                rho = sum(parts) / len(parts) if len(parts) == 2 else parts[0]
                a = 0.5
            else:
                rho = (even + odd) / p_click
        ledger.append({"iteration": k, "p_click": p_click, "A": a, "click": click, "path_probability": residual})
        if success:
            break
    final = _mixture(rho, 2)
    metrics = {
        "success": float(success),
        "iterations": float(len(ledger)),
        "path_probability": residual,
        "fidelity": _fid(rho, PSI_PLUS),
        "concurrence": concurrence(0.5 * (rho + rho.conj().T)),
    }
    return ProtocolResult(None, final, metrics, None, tuple(ledger))


# -- measurement-free displacement gate ---------------------------------------------------


def cphase_ops(beta1: float, beta2: float) -> list[BusOp]:
    return [CondDisp(0, -beta1), CondDisp(1, -1j * beta2), CondDisp(0, beta1), CondDisp(1, 1j * beta2)]


def cnot_ops(beta1: float, beta2: float) -> list[BusOp]:
    return [hadamard(0), *cphase_ops(beta1, beta2), hadamard(0)]


def process_matrix(ops: Sequence[BusOp], n_qubits: int = 2, bus: complex = 0j) -> np.ndarray:
    """Columns are the qubit vectors reached from each basis label; requires a disentangled bus."""
    cols = []
    for i in range(2**n_qubits):
        final, _ = run_circuit(HybridState.basis(format(i, f"0{n_qubits}b"), bus), ops)
        (z,) = set(b.bus for b in final.branches) or {bus}
        if abs(z - bus) > 1e-9:
            raise QubusError("bus did not return to its start; the circuit is not bus-closed")
        cols.append(final.qubit_vector())
    return np.array(cols).T


def cphase_equivalence_error(beta1: float, beta2: float, bus: complex = 0j) -> float:
    g = process_matrix(cphase_ops(beta1, beta2), bus=bus)
    return float(np.max(np.abs(np.exp(1j * math.pi / 4) * np.kron(LOCAL_U, LOCAL_U) @ g - CZ)))


def cnot_equivalence_error(beta1: float, beta2: float, bus: complex = 0j) -> float:
    g = process_matrix(cnot_ops(beta1, beta2), bus=bus)
    corr = np.kron(HADAMARD @ LOCAL_U @ HADAMARD, LOCAL_U)
    return float(np.max(np.abs(np.exp(1j * math.pi / 4) * corr @ g - CNOT_10)))


def _closed_gate(ops, qubits, alpha, equivalence) -> ProtocolResult:
    s, traj = run_circuit(_input_state(qubits, alpha), ops)
    metrics = {"bus_spread": s.bus_spread(), "process_error": equivalence()}
    metrics.update(_state_metrics(s))
    return ProtocolResult(None, s, metrics, traj)


def cphase_displacement_gate(qubits=PLUS2, beta1: float = 0.5 * math.sqrt(math.pi / 2), beta2: float | None = None, alpha: complex = 0j) -> ProtocolResult:
    """Closed square (or rectangle) of conditional displacements; 2 beta1 beta2 = pi/4 is maximally entangling."""
    beta2 = beta1 if beta2 is None else beta2
    return _closed_gate(cphase_ops(beta1, beta2), qubits, alpha, lambda: cphase_equivalence_error(beta1, beta2, alpha))


def cnot_displacement_variant(qubits=PLUS2, beta1: float = 0.5 * math.sqrt(math.pi / 2), beta2: float | None = None, alpha: complex = 0j) -> ProtocolResult:
    """The same loop with qubit 0's coupling conjugated by Hadamards; control is qubit 1."""
    beta2 = beta1 if beta2 is None else beta2
    return _closed_gate(cnot_ops(beta1, beta2), qubits, alpha, lambda: cnot_equivalence_error(beta1, beta2, alpha))


# -- rotation parity gates -------------------------------------------------------------------


def _label_phase(s: HybridState, label: str) -> float:
    (b,) = [b for b in s.branches if b.label == label]
    return float(np.angle(b.coeff))


def rotation_parity_ops(theta: float, alpha: complex) -> list[BusOp]:
    return [CondRot(0, theta), CondRot(1, theta), UncondDisp(-alpha)]


def rotation_parity_amplitudes(alpha: complex, theta: float) -> dict[str, complex]:
    return {
        "00": alpha * (np.exp(2j * theta) - 1),
        "01": 0j,
        "10": 0j,
        "11": alpha * (np.exp(-2j * theta) - 1),
    }


def _bus_residual(s: HybridState, want: dict[str, complex]) -> float:
    return max(abs(z - want[lab]) for lab, zs in s.bus_amplitudes().items() for z in zs)


def rotation_parity_number(
    qubits=PLUS2,
    alpha: complex = 3.0,
    theta: float = 0.5,
    detector: MeasurementModel = PhotonNumber(),
    rng: np.random.Generator | None = None,
    outcome=None,
) -> ProtocolResult:
    """Conditional rotations, displace back by alpha, count photons (or bucket / X(pi/2) homodyne)."""
    s, traj = run_circuit(_input_state(qubits, alpha), rotation_parity_ops(theta, alpha))
    shift = abs(alpha * (np.exp(2j * theta) - 1))
    metrics = {
        "rotation_residual": _bus_residual(s, rotation_parity_amplitudes(alpha, theta)),
        "overlap_error_quoted": math.exp(-4 * abs(alpha * theta) ** 2),
        "overlap_error_exact": math.exp(-(shift**2)),
    }
    analytic = rng is None and outcome is None
    match detector:
        case PhotonNumber():
            metrics["p_n0"] = float(photon_number_pmf(s)[0])
            if analytic:
                return ProtocolResult(None, s, metrics, traj)
            rec = photon_number_measure(s, rng, outcome)
            n = rec.outcome
            target = PSI_PLUS if n == 0 else np.array([S2 * 1j**n, 0, 0, S2 * (-1j) ** n])
            if n > 0 and {"00", "11"} <= {b.label for b in rec.posterior.branches}:
                rel = _label_phase(rec.posterior, "00") - _label_phase(rec.posterior, "11")
                metrics["kappa"] = math.remainder((rel - math.pi * n) / 2, math.pi)
        case Bucket(worst_case=wc):
            st = bucket_statistics(s)
            metrics.update(p_click=st.p_click, A=st.even_weight)
            if analytic:
                return ProtocolResult(None, s, metrics, traj)
            rec = bucket_measure(s, rng, outcome, worst_case=wc)
            target = PHI_PLUS if rec.outcome else PSI_PLUS
            metrics["odd_parity"] = float(not rec.outcome)
        case Homodyne():
            band = abs(alpha) * abs(math.sin(2 * theta))
            metrics["herald_probability"] = _herald_probability(s, detector, -band, band)
            if analytic:
                return ProtocolResult(None, s, metrics, traj)
            rec = homodyne_measure(s, detector, rng, outcome)
            metrics["heralded"] = float(abs(rec.outcome) < band)
            target = PSI_PLUS
        case _:
            raise TypeError(f"unsupported detector {detector!r}")
    metrics["probability"] = rec.probability
    metrics.update(_state_metrics(rec.posterior, target))
    return ProtocolResult(rec, rec.posterior, metrics, traj)


def _parity_readout(
    s: HybridState,
    even_mean: float,
    odd_mean: float,
    excess_noise: float,
    rng,
    x,
    metrics: dict,
) -> tuple[MeasurementRecord | None, HybridState | MixedOutcome]:
    """X(0) homodyne split at the midpoint of the even/odd peaks."""
    mid = 0.5 * (even_mean + odd_mean)
    metrics.update(even_mean=even_mean, odd_mean=odd_mean, midpoint=mid)
    metrics["error_exact"] = discrimination_error(abs(even_mean - odd_mean), 1 + excess_noise)
    if rng is None and x is None:
        return None, s
    rec = homodyne_measure(s, Homodyne(0.0, excess_noise), rng, x)
    odd = (rec.outcome - mid) * (odd_mean - even_mean) > 0
    metrics["parity"] = float(odd)
    post = rec.posterior
    if odd:
        metrics.update(_state_metrics(post, PSI_PLUS))
    else:
        metrics.update(_state_metrics(post, PHI_PLUS))
        present = {b.label for b in post.branches}
        if {"00", "11"} <= present:
            metrics["even_relative_phase"] = math.remainder(
                _label_phase(post, "00") - _label_phase(post, "11"), 2 * math.pi
            )
    metrics["probability"] = rec.probability
    return rec, post


def rotation_parity_homodyne_ops(theta: float, alpha: complex) -> list[BusOp]:
    return [
        CondRot(0, theta),
        CondRot(1, theta),
        UncondDisp(-2 * alpha * math.cos(2 * theta)),
        CondRot(0, theta),
        CondRot(1, theta),
    ]


def rotation_parity_homodyne_errors(alpha: float, theta: float, excess_noise: float = 0.0) -> tuple[float, float]:
    """(quoted erfc form, exact midpoint error) for the rotate-displace-rotate gate."""
    v = 1 + excess_noise
    quoted = float(0.5 * erfc(math.sqrt(2) * abs(alpha) * theta**2 / math.sqrt(v)))
    exact = discrimination_error(8 * abs(alpha) * math.sin(theta) ** 2, v)
    return quoted, exact


def rotation_parity_homodyne(
    qubits=PLUS2,
    alpha: float = 30.0,
    theta: float = 0.1,
    excess_noise: float = 0.0,
    rng: np.random.Generator | None = None,
    x: float | None = None,
) -> ProtocolResult:
    """R0 R1, D(-2 alpha cos 2theta), R0 R1, then X(0) homodyne parity readout."""
    s, traj = run_circuit(_input_state(qubits, alpha), rotation_parity_homodyne_ops(theta, alpha))
    odd_amp = alpha * (1 - 2 * math.cos(2 * theta))
    want = {"00": -alpha, "11": -alpha, "01": odd_amp, "10": odd_amp}
    quoted, _ = rotation_parity_homodyne_errors(alpha, theta, excess_noise)
    metrics = {"closure_residual": _bus_residual(s, want), "error_quoted": quoted}
    rec, final = _parity_readout(s, -2 * alpha, 2 * odd_amp, excess_noise, rng, x, metrics)
    return ProtocolResult(rec, final, metrics, traj)


def homodyne_error_rate(
    protocol: Callable[..., ProtocolResult], shots: int, seed: int, even: bool = True, **kw
) -> float:
    """Misclassified-parity fraction with a basis input of known parity (|00> or |01>)."""
    qubits = (1, 0, 0, 0) if even else (0, 1, 0, 0)
    pre = protocol(qubits, **kw)
    m = pre.metrics
    sampler = HomodyneSampler(pre.final, Homodyne(0.0, kw.get("excess_noise", 0.0)))
    wrong = 0
    for k in range(shots):
        _, reported = sampler(shot_rng(seed, k))
        odd = (reported - m["midpoint"]) * (m["odd_mean"] - m["even_mean"]) > 0
        wrong += odd == even
    return wrong / shots


# -- rotation-only controlled phase and its closed forms ----------------------------------------


@dataclass(frozen=True)
class RotationOnlyForms:
    phi_gg: float
    phi_ge: float
    phi_eg: float
    phi_ee: float
    psi_gg: float
    psi_ee: float
    gamma_gg: float
    gamma_ee: float
    alpha_plus: complex
    alpha_minus: complex
    phi_d: float
    phi_s: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def rotation_only_closed_forms(alpha: float, theta: float, errata: bool = False) -> RotationOnlyForms:
    """Closed forms for the rotation-only gate, evaluated verbatim.

    ``errata=True`` flips the sign of the sin(4 theta) term in phi_gg/phi_ee and swaps
    gamma_gg with gamma_ee, which is what the branch engine produces for the same alpha_+/-.
    """
    a2 = alpha**2
    c, s = math.cos, math.sin
    t = theta
    cos_part = a2 * (7 * c(t) - c(2 * t) - 3 * c(3 * t) + c(4 * t))
    s4 = -s(4 * t) if errata else s(4 * t)
    sin_part = a2 * (s(t) + 5 * s(2 * t) - s(3 * t) + s4)
    half = s(t / 2) ** 2
    psi_gg = -4 * a2 * half * (1 + c(t) + s(t)) * (c(2 * t) + s(2 * t))
    psi_ee = -4 * a2 * half * (1 + c(t) - s(t)) * (c(2 * t) - s(2 * t))
    g_minus = 16 * a2 * half**2 * (1 + c(t) - s(t)) ** 2
    g_plus = 16 * a2 * half**2 * (1 + c(t) + s(t)) ** 2
    gamma_gg, gamma_ee = (g_plus, g_minus) if errata else (g_minus, g_plus)
    phi_gg, phi_ee = cos_part + sin_part, cos_part - sin_part

    def amp(sign: int) -> complex:
        return alpha * (
            np.exp(sign * 4j * t + 1j * math.pi / 4)
            + math.sqrt(2) * (1 - np.exp(sign * 2j * t)) * (1j + np.exp(sign * 1j * t))
        )

    return RotationOnlyForms(
        phi_gg=phi_gg,
        phi_ge=4 * a2 * c(t),
        phi_eg=4 * a2 * c(t),
        phi_ee=phi_ee,
        psi_gg=psi_gg,
        psi_ee=psi_ee,
        gamma_gg=gamma_gg,
        gamma_ee=gamma_ee,
        alpha_plus=complex(amp(1)),
        alpha_minus=complex(amp(-1)),
        phi_d=8 * a2 * s(t) ** 2 * (2 * c(t) - c(2 * t)),
        phi_s=(phi_gg + psi_gg - phi_ee - psi_ee) / 4,
    )


def rotation_only_ops(beta: float, theta: float, final_displacement: bool = True) -> list[BusOp]:
    seq = load_frozen("fig11")["sequence"]
    ops = instantiate(seq, theta, beta)
    return ops if final_displacement else ops[:-1]


def rotation_only_simulated(alpha: float, theta: float) -> RotationOnlyForms:
    """The same quantities read off branch-engine runs of the frozen sequence.

    Phases are wrapped to (-pi, pi]; phi_d is accumulated from the wrapped pieces and
    wrapped again.
    """
    beta = math.sqrt(2) * alpha
    start = alpha * np.exp(1j * math.pi / 4)
    ops = rotation_only_ops(beta, theta)
    phase, bus = {}, {}
    for label in ("00", "01", "10", "11"):
        final, _ = run_circuit(HybridState.basis(label, start), ops)
        (b,) = final.branches
        phase[label], bus[label] = float(np.angle(b.coeff)), b.bus
    psi_gg = float((start.conjugate() * bus["00"]).imag)
    psi_ee = float((start.conjugate() * bus["11"]).imag)
    phi_d = phase["00"] - phase["01"] - phase["10"] + phase["11"] + psi_gg + psi_ee
    return RotationOnlyForms(
        phi_gg=phase["00"],
        phi_ge=phase["01"],
        phi_eg=phase["10"],
        phi_ee=phase["11"],
        psi_gg=psi_gg,
        psi_ee=psi_ee,
        gamma_gg=abs(bus["00"] - start) ** 2 / 2,
        gamma_ee=abs(bus["11"] - start) ** 2 / 2,
        alpha_plus=complex(bus["00"]),
        alpha_minus=complex(bus["11"]),
        phi_d=math.remainder(phi_d, 2 * math.pi),
        phi_s=(phase["00"] + psi_gg - phase["11"] - psi_ee) / 4,
    )


def rotation_only_deviation(a: RotationOnlyForms, b: RotationOnlyForms) -> dict[str, float]:
    """Per-field |a - b|; phases compared modulo 2 pi."""
    out = {}
    for k in a.__dataclass_fields__:
        x, y = getattr(a, k), getattr(b, k)
        if k.startswith("phi"):
            out[k] = abs(math.remainder(x - y, 2 * math.pi))
        else:
            out[k] = abs(x - y)
    return out


def rotation_only_cphase(
    qubits=PLUS2,
    beta: float = 5.0,
    theta: float | None = None,
    final_displacement: bool = True,
) -> ProtocolResult:
    """Eight alternating rotations and unconditional displacements; bus starts at beta(1+i)/2.

    The default theta satisfies |beta theta|^2 = pi/4.
    """
    theta = math.sqrt(math.pi / 4) / abs(beta) if theta is None else theta
    alpha = beta / math.sqrt(2)
    start = beta * (1 + 1j) / 2
    s, traj = run_circuit(_input_state(qubits, start), rotation_only_ops(beta, theta, final_displacement))
    forms = rotation_only_simulated(alpha, theta)
    metrics = {
        "bus_spread": s.bus_spread(),
        "phi_d": forms.phi_d,
        "gamma_gg": forms.gamma_gg,
        "gamma_ee": forms.gamma_ee,
    }
    metrics.update(_state_metrics(s))
    return ProtocolResult(None, s, metrics, traj)


# -- rotation + displacement parity gate ----------------------------------------------------------


def rotation_displacement_amplitudes(alpha: float, theta: float, variant: str = "printed") -> dict[str, complex]:
    even = alpha * (1 - math.cos(2 * theta)) if variant == "printed" else alpha * math.cos(2 * theta)
    return {"00": even, "11": even, "01": complex(alpha), "10": complex(alpha)}


def rotation_displacement_ops(alpha: float, theta: float) -> list[BusOp]:
    seq = load_frozen("fig13")["sequence"]
    return instantiate(seq, theta, alpha / 2 * math.sin(2 * theta))


def rotation_displacement_parity(
    qubits=PLUS2,
    alpha: float = 30.0,
    theta: float = 0.1,
    excess_noise: float = 0.0,
    rng: np.random.Generator | None = None,
    x: float | None = None,
) -> ProtocolResult:
    """Four-op rotate/conditionally-displace gate, then X(0) parity readout."""
    s, traj = run_circuit(_input_state(qubits, alpha), rotation_displacement_ops(alpha, theta))
    metrics = {
        "even_residual": _bus_residual(s, rotation_displacement_amplitudes(alpha, theta, "printed")),
        "even_residual_cos2theta": _bus_residual(s, rotation_displacement_amplitudes(alpha, theta, "cos2theta")),
        "error_quoted": float(0.5 * erfc(abs(alpha) * theta**2 / math.sqrt(2 * (1 + excess_noise)))),
    }
    rec, final = _parity_readout(
        s, 2 * alpha * math.cos(2 * theta), 2 * alpha, excess_noise, rng, x, metrics
    )
    return ProtocolResult(rec, final, metrics, traj)


# -- geometric phase --------------------------------------------------------------------------


def geometric_phase_of_path(steps: Sequence[complex], start: complex = 0j) -> float:
    """Coefficient phase accumulated by a closed chain of unconditional displacements.

    Each step is split so that no single increment reaches pi, which lets the wrapped
    per-op phase changes be summed without ambiguity.
    """
    steps = [complex(z) for z in steps]
    if abs(sum(steps)) > 1e-12:
        raise ValueError("path is not closed")
    reach = abs(start) + sum(abs(z) for z in steps)
    s = HybridState.basis("0", start)
    total = 0.0
    prev = 0.0
    for z in steps:
        k = max(1, math.ceil(abs(z) * reach))
        for _ in range(k):
            s, _ = run_circuit(s, [UncondDisp(z / k)])
            (b,) = s.branches
            cur = float(np.angle(b.coeff))
            total += math.remainder(cur - prev, 2 * math.pi)
            prev = cur
    return total


def shoelace_area(steps: Sequence[complex], start: complex = 0j) -> float:
    pts = np.cumsum([start, *steps])[:-1]
    x, y = pts.real, pts.imag
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
