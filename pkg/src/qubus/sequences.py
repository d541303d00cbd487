"""Bounded search for gate sequences that are only given as circuit diagrams.

Two targets exist:

``fig11``  the rotation-only controlled-phase gate.  Alternating unconditional
           displacements (magnitude beta, axis-aligned) and conditional rotations
           by +/- theta, length <= 9.  Bus starts at alpha e^{i pi/4} with
           beta = sqrt(2) alpha.  A candidate must reproduce the closed-form bus
           amplitudes alpha_+/alpha_- for |00>/|11>, return |01>/|10> to the start,
           and give those two labels the phase 4 alpha^2 cos(theta).
``fig13``  the rotation + displacement parity gate.  Length <= 5 over conditional
           rotations by +/- theta and conditional displacements by +/-beta, +/-i beta
           with beta = (alpha/2) sin(2 theta).  Bus starts at alpha.

Candidates are enumerated shortest first, then lexicographically over the
template index order below, and the first hit is frozen.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .core import BusOp, CondDisp, CondRot, HybridState, UncondDisp, run_circuit

SCHEMA = "qubus-sequence/1"
GRID_ALPHA = (0.5, 1.0, 2.0)
GRID_THETA = (0.01, 0.05, 0.1)
MATCH_TOL = 1e-9

LABELS = ("00", "01", "10", "11")
_SIGMA = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]])
_DIRECTIONS = (1, 1j, -1, -1j)


def op_descriptor_to_busop(d: dict, theta: float, beta: float) -> BusOp:
    direction = complex(d.get("direction", [1, 0])[0], d.get("direction", [1, 0])[1])
    if d["op"] == "cond_rot":
        return CondRot(d["qubit"], d["sign"] * theta)
    if d["op"] == "cond_disp":
        return CondDisp(d["qubit"], direction * beta)
    if d["op"] == "uncond_disp":
        return UncondDisp(direction * beta)
    raise ValueError(f"unknown sequence op {d['op']!r}")


def instantiate(seq: Sequence[dict], theta: float, beta: float) -> list[BusOp]:
    return [op_descriptor_to_busop(d, theta, beta) for d in seq]


def _dir(z: complex) -> list[int]:
    return [int(z.real), int(z.imag)]


ROT_TEMPLATES = tuple(
    {"op": "cond_rot", "qubit": q, "sign": s} for q in (0, 1) for s in (1, -1)
)
UNCOND_TEMPLATES = tuple({"op": "uncond_disp", "direction": _dir(d)} for d in _DIRECTIONS)
COND_DISP_TEMPLATES = tuple(
    {"op": "cond_disp", "qubit": q, "direction": _dir(d)} for q in (0, 1) for d in (1, -1, 1j, -1j)
)


# -- targets -------------------------------------------------------------------------------


def fig11_start(alpha: float) -> complex:
    return alpha * np.exp(1j * math.pi / 4)


def fig11_alpha_pm(alpha: float, theta: float) -> tuple[complex, complex]:
    def amp(s: int) -> complex:
        return alpha * (
            np.exp(s * 4j * theta + 1j * math.pi / 4)
            + math.sqrt(2) * (1 - np.exp(s * 2j * theta)) * (1j + np.exp(s * 1j * theta))
        )

    return complex(amp(1)), complex(amp(-1))


def fig11_target(alpha: float, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Expected (bus amplitudes, phase mask/values) for labels 00, 01, 10, 11."""
    ap, am = fig11_alpha_pm(alpha, theta)
    start = fig11_start(alpha)
    bus = np.array([ap, start, start, am])
    phase = np.array([np.nan, 4 * alpha**2 * math.cos(theta), 4 * alpha**2 * math.cos(theta), np.nan])
    return bus, phase


def fig13_target(alpha: float, theta: float, variant: str = "printed") -> tuple[np.ndarray, np.ndarray]:
    if variant == "printed":
        even = alpha * (1 - math.cos(2 * theta))
    elif variant == "cos2theta":
        even = alpha * math.cos(2 * theta)
    else:
        raise ValueError(f"unknown fig13 variant {variant!r}")
    return np.array([even, alpha, alpha, even], dtype=complex), np.full(4, np.nan)


@dataclass(frozen=True)
class SearchProblem:
    name: str
    variant: str
    slots: Callable[[int, int], tuple[dict, ...]]  # (position, length) -> templates
    max_len: int
    start: Callable[[float], complex]
    beta: Callable[[float, float], float]
    target: Callable[[float, float], tuple[np.ndarray, np.ndarray]]
    starts_with: tuple[str, ...] = ("",)


def _fig11_slots(kind: str) -> Callable[[int, int], tuple[dict, ...]]:
    def slots(pos: int, length: int) -> tuple[dict, ...]:
        rot_first = kind == "R"
        return ROT_TEMPLATES if (pos % 2 == 0) == rot_first else UNCOND_TEMPLATES

    return slots


def problem(name: str, variant: str = "printed") -> list[SearchProblem]:
    if name == "fig11":
        return [
            SearchProblem(
                "fig11",
                "printed",
                _fig11_slots(kind),
                9,
                fig11_start,
                lambda a, t: math.sqrt(2) * a,
                fig11_target,
                (kind,),
            )
            for kind in ("D", "R")
        ]
    if name == "fig13":
        return [
            SearchProblem(
                "fig13",
                variant,
                lambda pos, length: ROT_TEMPLATES + COND_DISP_TEMPLATES,
                5,
                lambda a: complex(a),
                lambda a, t: a / 2 * math.sin(2 * t),
                lambda a, t: fig13_target(a, t, variant),
            )
        ]
    raise ValueError(f"unknown search target {name!r}")


# -- search ----------------------------------------------------------------------------------


def _grid() -> list[tuple[float, float]]:
    return [(a, t) for a in GRID_ALPHA for t in GRID_THETA]


def _step(bus: np.ndarray, phase: np.ndarray, d: dict, thetas: np.ndarray, betas: np.ndarray):
    # bus, phase: (grid, 4 labels)
    if d["op"] == "cond_rot":
        sig = _SIGMA[:, d["qubit"]][None, :]
        return bus * np.exp(1j * d["sign"] * thetas[:, None] * sig), phase
    direction = complex(*d["direction"])
    if d["op"] == "cond_disp":
        shift = direction * betas[:, None] * _SIGMA[:, d["qubit"]][None, :]
    else:
        shift = np.broadcast_to(direction * betas[:, None], bus.shape)
    return bus + shift, phase + (shift * bus.conj()).imag


def _residual(bus, phase, want_bus, want_phase) -> float:
    r = np.max(np.abs(bus - want_bus))
    mask = ~np.isnan(want_phase)
    if mask.any():
        r = max(r, np.max(np.abs(phase[mask] - want_phase[mask])))
    return float(r)


def search(name: str, variant: str = "printed") -> dict:
    """Enumerate candidates; returns the frozen-sequence document (``sequence`` is None if none match)."""
    grid = _grid()
    alphas = np.array([a for a, _ in grid])
    thetas = np.array([t for _, t in grid])
    hits: list[tuple[int, tuple[int, ...], tuple[dict, ...]]] = []
    probs = problem(name, variant)
    for length in range(1, probs[0].max_len + 1):
        for prob in probs:
            betas = np.array([prob.beta(a, t) for a, t in grid])
            start = np.array([[prob.start(a)] * 4 for a in alphas], dtype=complex)
            targets = [prob.target(a, t) for a, t in grid]
            want_bus = np.array([tb for tb, _ in targets])
            want_phase = np.array([tp for _, tp in targets])

            def dfs(pos, bus, phase, key, seq):
                if pos == length:
                    if _residual(bus, phase, want_bus, want_phase) < MATCH_TOL:
                        hits.append((length, (prob.starts_with, key), tuple(seq)))
                    return
                for k, d in enumerate(prob.slots(pos, length)):
                    nb, nph = _step(bus, phase, d, thetas, betas)
                    dfs(pos + 1, nb, nph, key + (k,), seq + [d])

            dfs(0, start, np.zeros(start.shape), (), [])
        if hits:
            break
    doc = {
        "schema": SCHEMA,
        "target": name,
        "variant": variant,
        "generator": f"qubus {__version__}",
        "grid": {"alpha": list(GRID_ALPHA), "theta": list(GRID_THETA)},
        "match_tol": MATCH_TOL,
        "multiplicity": len(hits),
        "sequence": None,
        "residual": None,
    }
    if hits:
        hits.sort(key=lambda h: (h[0], h[1]))
        seq = [dict(d) for d in hits[0][2]]
        doc["sequence"] = seq
        doc["alternatives"] = [[dict(d) for d in h[2]] for h in hits[1:]]
        doc["residual"] = verify(name, seq, variant)
    return doc


def verify(name: str, seq: Sequence[dict], variant: str = "printed") -> dict:
    """Run ``seq`` through the branch engine on every basis label over the grid."""
    prob = problem(name, variant)[0]
    worst_bus = 0.0
    worst_phase = 0.0
    for a, t in _grid():
        want_bus, want_phase = prob.target(a, t)
        ops = instantiate(seq, t, prob.beta(a, t))
        for i, label in enumerate(LABELS):
            final, _ = run_circuit(HybridState.basis(label, prob.start(a)), ops)
            (b,) = final.branches
            worst_bus = max(worst_bus, abs(b.bus - want_bus[i]))
            if not math.isnan(want_phase[i]):
                dphi = math.remainder(np.angle(b.coeff) - want_phase[i], 2 * math.pi)
                worst_phase = max(worst_phase, abs(dphi))
    return {"max_bus_deviation": float(worst_bus), "max_phase_deviation": float(worst_phase)}


FROZEN_VARIANT = {"fig11": "printed", "fig13": "cos2theta"}


def freeze(name: str) -> dict:
    """Document written to ``data/<name>.json``; records the printed-target outcome too."""
    variant = FROZEN_VARIANT[name]
    doc = search(name, variant)
    if variant != "printed":
        doc["printed_multiplicity"] = search(name, "printed")["multiplicity"]
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def load_frozen(name: str) -> dict:
    text = resources.files("qubus").joinpath("data", f"{name}.json").read_text()
    doc = json.loads(text)
    if doc.get("schema") != SCHEMA or doc.get("sequence") is None:
        raise ValueError(f"frozen sequence file for {name} is missing or invalid")
    return doc
