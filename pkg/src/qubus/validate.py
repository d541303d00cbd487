"""Built-in validation suite: invariants, oracle agreement and closed-form checks."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import unitary_group

from . import protocols as P
from .core import (
    DEFAULT_MERGE_TOL,
    BusOp,
    CondDisp,
    CondRot,
    HybridState,
    SingleQubit,
    UncondDisp,
    run_circuit,
)
from .fock import (
    JCParams,
    coherent_fock,
    dispersive_jc_validate,
    displacement_matrix,
    embed,
    joint_fidelity,
    required_dim,
    run_circuit_fock,
    sandwich_displacement,
)
from .measurement import quoted_qnd_error
from .sequences import GRID_ALPHA, GRID_THETA, load_frozen

SEED = 20240611


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail, "values": self.values}


def displacement_phase(beta1: complex, beta2: complex) -> complex:
    """Phase of D(beta2) D(beta1) relative to D(beta1 + beta2)."""
    return cmath.exp((beta2 * beta1.conjugate() - beta2.conjugate() * beta1) / 2)


def check_composition(n: int = 200) -> Check:
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(n):
        b1, b2, z0 = (complex(*rng.uniform(-3, 3, 2)) for _ in range(3))
        b1 *= min(1, 3 / abs(b1))
        b2 *= min(1, 3 / abs(b2))
        s = HybridState.basis("0", z0)
        two, _ = run_circuit(s, [UncondDisp(b1), UncondDisp(b2)])
        one, _ = run_circuit(s, [UncondDisp(b1 + b2)])
        ratio = two.branches[0].coeff / one.branches[0].coeff
        worst = max(worst, abs(ratio - displacement_phase(b1, b2)))
    # the same phase from dense matrices
    dim = 60
    d = displacement_matrix(1j, dim).matrix @ displacement_matrix(1, dim).matrix
    direct = displacement_matrix(1 + 1j, dim).matrix
    vac = coherent_fock(0, dim).amps
    oracle = np.vdot(direct @ vac, d @ vac)
    oracle_err = abs(oracle - displacement_phase(1, 1j))
    ok = worst < 1e-12 and oracle_err < 1e-9
    return Check("composition", ok, f"max coefficient deviation {worst:.2e}; dense check {oracle_err:.2e}",
                 {"max_deviation": worst, "oracle_deviation": oracle_err})


def _random_polygon(rng: np.random.Generator) -> tuple[list[complex], complex]:
    kind = rng.integers(3)
    if kind == 0:
        w, h = rng.uniform(0.2, 4, 2)
        return [w, 1j * h, -w, -1j * h], complex(*rng.uniform(-2, 2, 2))
    k = int(rng.integers(3, 9))
    if kind == 1:
        ang = np.sort(rng.uniform(0, 2 * np.pi, k))
        r = rng.uniform(0.5, 4, k)
    else:
        # star: alternating radii, vertices in angular order
        ang = np.linspace(0, 2 * np.pi, 2 * k, endpoint=False) + rng.uniform(0, 1)
        r = np.where(np.arange(2 * k) % 2 == 0, rng.uniform(2.5, 4), rng.uniform(0.5, 1.5))
    pts = r * np.exp(1j * ang)
    return list(np.diff(np.append(pts, pts[0]))), pts[0]


def check_area(n: int = 50) -> Check:
    rng = np.random.default_rng(SEED + 1)
    worst = 0.0
    for _ in range(n):
        steps, start = _random_polygon(rng)
        steps[-1] = -sum(steps[:-1])
        phase = P.geometric_phase_of_path(steps, start)
        worst = max(worst, abs(phase - 2 * P.shoelace_area(steps, start)))
    return Check("area", worst < 1e-10, f"max |phase - 2 area| {worst:.2e} over {n} polygons", {"max_deviation": worst})


def random_circuit(rng: np.random.Generator, n_qubits: int, n_ops: int, bound: float = 4.0):
    amps = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    amps /= np.linalg.norm(amps)
    alpha = complex(*rng.uniform(-1, 1, 2))
    ops: list[BusOp] = []
    reach = abs(alpha)
    for _ in range(n_ops):
        kind = rng.integers(4)
        q = int(rng.integers(n_qubits))
        if kind == 0 or kind == 2:
            step = min(0.8, max(bound - reach, 0.0))
            beta = complex(*rng.uniform(-1, 1, 2)) * step / math.sqrt(2)
            reach += abs(beta)
            ops.append(CondDisp(q, beta) if kind == 0 else UncondDisp(beta))
        elif kind == 1:
            ops.append(CondRot(q, float(rng.uniform(-np.pi, np.pi))))
        else:
            ops.append(SingleQubit(q, unitary_group.rvs(2, random_state=rng), "u"))
    return amps, alpha, ops


def check_oracle(n: int = 100, merge_tol: float = DEFAULT_MERGE_TOL) -> Check:
    rng = np.random.default_rng(SEED + 2)
    worst = 1.0
    for _ in range(n):
        nq = int(rng.integers(1, 3))
        amps, alpha, ops = random_circuit(rng, nq, int(rng.integers(1, 11)))
        start = HybridState.product(amps, alpha, merge_tol=merge_tol)
        final, _ = run_circuit(start, ops)
        dim = required_dim(HybridState.product(amps, alpha), ops)
        dense = run_circuit_fock(nq, amps, alpha, ops, dim)
        worst = min(worst, joint_fidelity(embed(final, dim), dense))
    ok = worst >= 1 - 1e-8
    return Check("oracle", ok, f"min fidelity {worst:.12f} over {n} random circuits", {"min_fidelity": worst})


def _rotation_only(errata: bool) -> Check:
    name = "rotation_only_errata" if errata else "rotation_only"
    worst: dict[str, float] = {}
    for a in GRID_ALPHA:
        for t in GRID_THETA:
            dev = P.rotation_only_deviation(P.rotation_only_simulated(a, t), P.rotation_only_closed_forms(a, t, errata))
            for k, v in dev.items():
                if k != "phi_s":
                    worst[k] = max(worst.get(k, 0.0), v)
    bad = sorted(k for k, v in worst.items() if v > 1e-9)
    limit = [P.rotation_only_closed_forms(1.0, t).gamma_gg / (4 * t**4) for t in (1e-2, 1e-3)]
    limit_err = abs(limit[-1] - 1)
    ok = not bad and limit_err < 0.05
    detail = "all forms within 1e-9" if not bad else "mismatch in " + ", ".join(bad)
    return Check(name, ok, detail + f"; gamma_gg/(4 a^2 t^4) at t=1e-3: {limit[-1]:.6f}",
                 {"max_deviation": worst, "gamma_limit_ratio": limit[-1]})


def check_rotation_only() -> Check:
    return _rotation_only(False)


def check_rotation_only_errata() -> Check:
    return _rotation_only(True)


def _fig13(variant: str) -> Check:
    worst = 0.0
    for a in GRID_ALPHA:
        for t in GRID_THETA:
            r = P.rotation_displacement_parity(alpha=a, theta=t)
            key = "even_residual" if variant == "printed" else "even_residual_cos2theta"
            worst = max(worst, r.metrics[key])
    doc = load_frozen("fig13")
    name = "fig13" if variant == "printed" else "fig13_cos2theta"
    return Check(name, worst < 1e-9, f"max branch amplitude deviation {worst:.3e} (frozen variant {doc['variant']})",
                 {"max_deviation": worst})


def check_fig13() -> Check:
    return _fig13("printed")


def check_fig13_cos2theta() -> Check:
    return _fig13("cos2theta")


def check_jc() -> Check:
    fits = {}
    for ratio in (50, 60, 70, 80, 100):
        fits[ratio] = dispersive_jc_validate(JCParams(0.0, float(ratio), 1.0), alpha=1.0).relative_error
    errs = [fits[r] for r in sorted(fits)]
    monotone = all(b <= a for a, b in zip(errs, errs[1:]))
    ok = fits[50] <= 0.05 and monotone
    return Check("jc", ok, f"relative error {fits[50]:.2e} at ratio 50, monotone={monotone}",
                 {"relative_error": {str(k): float(v) for k, v in fits.items()}})


def check_sandwich() -> Check:
    big, small = sandwich_displacement(1.0, 0.1), sandwich_displacement(1.0, 0.05)
    ratio = big.error / small.error
    d1 = abs(small.displacement)
    d2 = abs(sandwich_displacement(2.0, 0.05).displacement)
    lin = d2 / d1
    ok = abs(ratio - 8) <= 1.6 and abs(lin - 2) <= 0.04
    return Check("sandwich", ok, f"error ratio {ratio:.4f}, displacement ratio {lin:.6f}",
                 {"error_ratio": ratio, "displacement_ratio": lin})


def check_qnd() -> Check:
    e3 = quoted_qnd_error(3.0)
    rescale = max(abs(quoted_qnd_error(b, 1.0) - quoted_qnd_error(b / math.sqrt(2))) for b in (1, 2, 3))
    ok = 1e-3 <= e3 <= 1.5e-3 and rescale < 1e-15
    return Check("qnd", ok, f"E(3) = {e3:.4e}; noise rescaling deviation {rescale:.1e}", {"E3": e3})


def check_gates() -> Check:
    b = math.sqrt(math.pi / 8)
    errs = {
        "cphase": P.cphase_equivalence_error(b, b),
        "cphase_rect": P.cphase_equivalence_error(2 * b, b / 2),
        "cnot": P.cnot_equivalence_error(b, b),
        "cnot_rect": P.cnot_equivalence_error(2 * b, b / 2),
    }
    worst = max(errs.values())
    return Check("gates", worst < 1e-10, f"max process deviation {worst:.2e}", errs)


CHECKS: dict[str, Callable[[], Check]] = {
    "composition": check_composition,
    "area": check_area,
    "oracle": check_oracle,
    "rotation_only": check_rotation_only,
    "rotation_only_errata": check_rotation_only_errata,
    "fig13": check_fig13,
    "fig13_cos2theta": check_fig13_cos2theta,
    "gates": check_gates,
    "qnd": check_qnd,
    "jc": check_jc,
    "sandwich": check_sandwich,
}


def run_validation(filter: str | None = None, merge_tol: float | None = None) -> dict:
    """Run the checks whose name contains ``filter``; ``merge_tol`` overrides the oracle run."""
    results = []
    for name, fn in CHECKS.items():
        if filter and filter not in name:
            continue
        if name == "oracle" and merge_tol is not None:
            results.append(check_oracle(merge_tol=merge_tol))
        else:
            results.append(fn())
    return {
        "schema": "qubus/1",
        "checks": [c.as_dict() for c in results],
        "passed": all(c.passed for c in results),
    }
