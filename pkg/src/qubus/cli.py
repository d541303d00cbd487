"""qubus command line: run scenarios, sweep parameters, validate, search sequences."""

from __future__ import annotations

import argparse
import copy
import csv
import io
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from . import protocols as P
from .core import (
    BusOp,
    CondDisp,
    CondRot,
    HybridState,
    QubusError,
    SingleQubit,
    UncondDisp,
    hadamard,
    reduced_qubit_density,
    run_circuit,
)
from .measurement import (
    Bucket,
    Homodyne,
    MixedOutcome,
    PhotonNumber,
    bucket_measure,
    bucket_statistics,
    homodyne_measure,
    homodyne_pdf,
    photon_number_measure,
    photon_number_pmf,
)
from .sequences import FROZEN_VARIANT, dumps, freeze, search

SCHEMA = "qubus/1"
MAX_SWEEP_POINTS = 10**6


class SchemaError(ValueError):
    """Malformed scenario or sweep file; the message names the offending field."""


# -- JSON helpers ----------------------------------------------------------------------


def cjson(z: complex) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def parse_complex(v: Any, where: str) -> complex:
    if isinstance(v, bool):
        raise SchemaError(f"{where}: expected a number, got a boolean")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, dict) and set(v) <= {"re", "im"} and all(
        isinstance(v.get(k, 0), (int, float)) for k in ("re", "im")
    ):
        return complex(v.get("re", 0.0), v.get("im", 0.0))
    raise SchemaError(f"{where}: expected a number or {{\"re\", \"im\"}} object")


def parse_float(v: Any, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SchemaError(f"{where}: expected a finite real number")
    return float(v)


def parse_int(v: Any, where: str, minimum: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{where}: expected an integer")
    if minimum is not None and v < minimum:
        raise SchemaError(f"{where}: must be >= {minimum}")
    return v


def parse_bool(v: Any, where: str) -> bool:
    if not isinstance(v, bool):
        raise SchemaError(f"{where}: expected true or false")
    return v


def parse_qubits(v: Any, where: str):
    if v == "plus_all":
        return v
    if not isinstance(v, list) or not v:
        raise SchemaError(f"{where}: expected \"plus_all\" or a list of amplitudes")
    amps = [parse_complex(x, f"{where}[{i}]") for i, x in enumerate(v)]
    if abs(np.linalg.norm(amps) - 1) > 1e-10:
        raise SchemaError(f"{where}: amplitudes are not normalized")
    return amps


def _default(o):
    if isinstance(o, (complex, np.complexfloating)):
        return cjson(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, default=_default) + "\n"


# -- scenario parsing ---------------------------------------------------------------------


def parse_op(d: Any, where: str, n_qubits: int) -> BusOp:
    if not isinstance(d, dict) or "op" not in d:
        raise SchemaError(f"{where}: expected an object with an \"op\" field")

    def qubit() -> int:
        q = parse_int(d.get("qubit"), f"{where}.qubit", 0)
        if q >= n_qubits:
            raise SchemaError(f"{where}.qubit: {q} out of range for {n_qubits} qubits")
        return q

    kind = d["op"]
    if kind == "cond_disp":
        return CondDisp(qubit(), parse_complex(d.get("beta"), f"{where}.beta"))
    if kind == "cond_rot":
        return CondRot(qubit(), parse_float(d.get("theta"), f"{where}.theta"))
    if kind == "uncond_disp":
        return UncondDisp(parse_complex(d.get("beta"), f"{where}.beta"))
    if kind == "hadamard":
        return hadamard(qubit())
    if kind == "single_qubit":
        u = d.get("u")
        if not (isinstance(u, list) and len(u) == 2 and all(isinstance(r, list) and len(r) == 2 for r in u)):
            raise SchemaError(f"{where}.u: expected a 2x2 matrix")
        mat = np.array([[parse_complex(x, f"{where}.u") for x in row] for row in u])
        try:
            return SingleQubit(qubit(), mat, str(d.get("name", "u")))
        except ValueError as e:
            raise SchemaError(f"{where}.u: {e}") from None
    raise SchemaError(f"{where}.op: unknown operation {kind!r}")


def op_json(op: BusOp) -> dict:
    match op:
        case CondDisp(qubit=q, beta=b):
            return {"op": "cond_disp", "qubit": q, "beta": cjson(b)}
        case CondRot(qubit=q, theta=t):
            return {"op": "cond_rot", "qubit": q, "theta": t}
        case UncondDisp(beta=b):
            return {"op": "uncond_disp", "beta": cjson(b)}
        case SingleQubit(qubit=q, u=u, name=name):
            return {"op": "single_qubit", "qubit": q, "name": name, "u": [[cjson(x) for x in row] for row in u]}
    raise TypeError(op)


def parse_measure(v: Any, where: str = "measure"):
    if v is None or v == "none":
        return None
    if not isinstance(v, dict) or "kind" not in v:
        raise SchemaError(f"{where}: expected \"none\" or an object with a \"kind\" field")
    kind = v["kind"]
    if kind == "homodyne":
        noise = parse_float(v.get("excess_noise", 0.0), f"{where}.excess_noise")
        if noise < 0:
            raise SchemaError(f"{where}.excess_noise: must be non-negative")
        return Homodyne(parse_float(v.get("angle", 0.0), f"{where}.angle"), noise)
    if kind == "photon_number":
        return PhotonNumber()
    if kind == "bucket":
        return Bucket(parse_bool(v.get("worst_case", False), f"{where}.worst_case"))
    raise SchemaError(f"{where}.kind: unknown detector {kind!r}")


# name -> (callable, {param: parser}, takes detector)
_Q = parse_qubits
_F = parse_float
_C = parse_complex
_I = parse_int
_B = parse_bool


def _opt_float(v, where):
    return None if v is None else parse_float(v, where)


PROTOCOLS: dict[str, tuple[Callable, dict[str, Callable], bool]] = {
    "qnd_qubit_measurement": (
        P.qnd_qubit_measurement,
        {"c0": _C, "c1": _C, "beta": _F, "excess_noise": _F, "alpha": _C, "x": _F},
        False,
    ),
    "parity_gate_displacement": (
        P.parity_gate_displacement,
        {"qubits": _Q, "beta": _F, "alpha": _C, "outcome": lambda v, w: v},
        True,
    ),
    "bucket_purification": (
        P.bucket_purification,
        {"qubits": _Q, "beta": _F, "m": lambda v, w: parse_int(v, w, 1), "worst_case": _B},
        False,
    ),
    "cphase_displacement_gate": (
        P.cphase_displacement_gate,
        {"qubits": _Q, "beta1": _F, "beta2": _opt_float, "alpha": _C},
        False,
    ),
    "cnot_displacement_variant": (
        P.cnot_displacement_variant,
        {"qubits": _Q, "beta1": _F, "beta2": _opt_float, "alpha": _C},
        False,
    ),
    "rotation_parity_number": (
        P.rotation_parity_number,
        {"qubits": _Q, "alpha": _C, "theta": _F, "outcome": lambda v, w: v},
        True,
    ),
    "rotation_parity_homodyne": (
        P.rotation_parity_homodyne,
        {"qubits": _Q, "alpha": _F, "theta": _F, "excess_noise": _F, "x": _F},
        False,
    ),
    "rotation_only_cphase": (
        P.rotation_only_cphase,
        {"qubits": _Q, "beta": _F, "theta": _opt_float, "final_displacement": _B},
        False,
    ),
    "rotation_displacement_parity": (
        P.rotation_displacement_parity,
        {"qubits": _Q, "alpha": _F, "theta": _F, "excess_noise": _F, "x": _F},
        False,
    ),
}
_STOCHASTIC = {
    "qnd_qubit_measurement",
    "parity_gate_displacement",
    "bucket_purification",
    "rotation_parity_number",
    "rotation_parity_homodyne",
    "rotation_displacement_parity",
}


def validate_scenario(sc: Any) -> dict:
    """Check a scenario document; returns a normalized copy or raises SchemaError."""
    if not isinstance(sc, dict):
        raise SchemaError("scenario: expected a JSON object")
    if sc.get("schema", SCHEMA) != SCHEMA:
        raise SchemaError(f"schema: expected {SCHEMA!r}")
    known = {"schema", "n_qubits", "initial", "ops", "protocol", "measure", "shots", "seed"}
    extra = set(sc) - known
    if extra:
        raise SchemaError(f"{sorted(extra)[0]}: unknown field")
    if ("ops" in sc) == ("protocol" in sc):
        raise SchemaError("ops/protocol: exactly one of the two must be present")
    shots = parse_int(sc.get("shots", 0), "shots", 0)
    seed = parse_int(sc.get("seed", 0), "seed", 0)
    if seed >= 2**64:
        raise SchemaError("seed: must fit in 64 bits")
    measure = parse_measure(sc.get("measure", "none"))
    out: dict = {"shots": shots, "seed": seed, "measure": measure}
    if "ops" in sc:
        n = parse_int(sc.get("n_qubits"), "n_qubits", 1)
        init = sc.get("initial")
        if not isinstance(init, dict):
            raise SchemaError("initial: expected an object with \"qubits\" and \"bus\"")
        qubits = init.get("qubits", "plus_all")
        bus = parse_complex(init.get("bus", 0.0), "initial.bus")
        if qubits == "plus_all":
            state = HybridState.plus_all(n, bus)
        else:
            amps = parse_qubits(qubits, "initial.qubits")
            if len(amps) != 2**n:
                raise SchemaError(f"initial.qubits: expected {2**n} amplitudes for {n} qubits")
            state = HybridState.product(amps, bus)
        if not isinstance(sc["ops"], list):
            raise SchemaError("ops: expected a list")
        out["state"] = state
        out["ops"] = [parse_op(d, f"ops[{i}]", n) for i, d in enumerate(sc["ops"])]
        return out
    proto = sc["protocol"]
    if not isinstance(proto, dict) or "name" not in proto:
        raise SchemaError("protocol: expected an object with \"name\" and \"params\"")
    name = proto["name"]
    if name not in PROTOCOLS:
        raise SchemaError(f"protocol.name: unknown protocol {name!r}")
    fn, spec, takes_detector = PROTOCOLS[name]
    params = proto.get("params", {})
    if not isinstance(params, dict):
        raise SchemaError("protocol.params: expected an object")
    kw = {}
    for k, v in params.items():
        if k not in spec:
            raise SchemaError(f"protocol.params.{k}: unknown parameter for {name}")
        kw[k] = spec[k](v, f"protocol.params.{k}")
    if takes_detector and measure is not None:
        kw["detector"] = measure
    elif measure is not None:
        raise SchemaError(f"measure: {name} fixes its own detector; use \"none\"")
    if shots and name not in _STOCHASTIC:
        raise SchemaError(f"shots: {name} has no measurement to sample")
    out.update(protocol=name, fn=fn, params=kw)
    return out


# -- reports --------------------------------------------------------------------------------


def state_json(s: HybridState | MixedOutcome) -> dict:
    if isinstance(s, MixedOutcome):
        return {"mixture": [{"weight": w, "state": state_json(c)} for w, c in s.components]}
    return {
        "n_qubits": s.n_qubits,
        "bus_consumed": s.bus_consumed,
        "global_phase": s.global_phase(),
        "branches": [{"label": b.label, "coeff": cjson(b.coeff), "bus": cjson(b.bus)} for b in s.branches],
    }


def matrix_json(m: np.ndarray) -> list:
    return [[cjson(x) for x in row] for row in m]


def _density(s) -> np.ndarray:
    return s.density() if isinstance(s, MixedOutcome) else reduced_qubit_density(s)


def _clean_metrics(m: dict) -> dict:
    out = {}
    for k, v in m.items():
        if isinstance(v, (bool, np.bool_)):
            v = float(v)
        out[k] = complex(v) if isinstance(v, complex) else float(v)
    return out


def _stage_table(traj_by_label: dict[str, list[list[complex]]]) -> list[dict]:
    n_stages = max(len(v) for v in traj_by_label.values())
    return [
        {"stage": k, "amplitudes": {lab: [cjson(z) for z in traj[k]] for lab, traj in traj_by_label.items() if k < len(traj)}}
        for k in range(n_stages)
    ]


def basis_trajectories(n_qubits: int, bus: complex, ops: list[BusOp]) -> dict[str, list[list[complex]]]:
    out = {}
    for i in range(2**n_qubits):
        label = format(i, f"0{n_qubits}b")
        _, traj = run_circuit(HybridState.basis(label, bus), ops)
        out[label] = [sorted((z for zs in stage.values() for z in zs), key=lambda z: (z.real, z.imag)) for stage in traj]
    return out


def protocol_basis_trajectories(name: str, fn: Callable, params: dict) -> dict[str, list[list[complex]]] | None:
    out = {}
    if name == "qnd_qubit_measurement":
        labels = [("0", {"c0": 1.0, "c1": 0.0}), ("1", {"c0": 0.0, "c1": 1.0})]
    elif name == "bucket_purification":
        return None
    else:
        labels = [(format(i, "02b"), {"qubits": list(np.eye(4)[i])}) for i in range(4)]
    base = {k: v for k, v in params.items() if k not in ("x", "outcome", "qubits", "c0", "c1")}
    for label, over in labels:
        r = fn(**base, **over)
        if r.trajectory is None:
            return None
        out[label] = [
            sorted((z for zs in stage.values() for z in zs), key=lambda z: (z.real, z.imag)) for stage in r.trajectory
        ]
    return out


def _measure_once(s: HybridState, model, rng):
    match model:
        case Homodyne():
            return homodyne_measure(s, model, rng)
        case PhotonNumber():
            return photon_number_measure(s, rng)
        case Bucket(worst_case=wc):
            return bucket_measure(s, rng, worst_case=wc)
    raise TypeError(model)


def _analytic_measure_metrics(s: HybridState, model) -> dict:
    match model:
        case Homodyne():
            idx, c, z = s.arrays()
            pdf = homodyne_pdf(s, model)
            lo = float(np.min(2 * (z * np.exp(-1j * model.angle)).real)) - 12
            hi = float(np.max(2 * (z * np.exp(-1j * model.angle)).real)) + 12
            xs = np.linspace(lo, hi, 4001)
            p = pdf(xs)
            mean = float(np.sum(xs * p) / np.sum(p))
            return {"quadrature_mean": mean}
        case PhotonNumber():
            pmf = photon_number_pmf(s)
            return {"p_n0": float(pmf[0]), "mean_photon_number": float(np.dot(np.arange(len(pmf)), pmf))}
        case Bucket():
            st = bucket_statistics(s)
            return {"p_click": st.p_click, "A": st.even_weight}
    return {}


def _outcome_json(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def run_scenario(sc: dict) -> tuple[dict, dict | None]:
    """Returns (report, trajectory document)."""
    v = validate_scenario(sc)
    shots, seed = v["shots"], v["seed"]
    report: dict = {
        "schema": SCHEMA,
        "generator": f"qubus {__version__}",
        "rng": {"algorithm": P.RNG_NAME, "numpy": P.RNG_VERSION, "seed": seed, "stream": "key=(seed, 0), counter=(0, shot, 0, 0)"},
        "scenario": sc,
    }
    if "ops" in v:
        start = v["state"]
        final, _ = run_circuit(start, v["ops"])
        metrics = {"norm": final.norm_squared(), "bus_spread": final.bus_spread(), "branches": float(len(final))}
        if final.n_qubits == 2:
            from .core import concurrence

            metrics["concurrence"] = concurrence(reduced_qubit_density(final))
        model = v["measure"]
        outcomes = []
        if model is not None:
            metrics.update(_analytic_measure_metrics(final, model))
            for k in range(shots):
                rec = _measure_once(final, model, P.shot_rng(seed, k))
                outcomes.append({"outcome": _outcome_json(rec.outcome), "probability": rec.probability})
        bus0 = start.branches[0].bus if start.branches else 0j
        traj = basis_trajectories(start.n_qubits, bus0, v["ops"])
        report.update(
            final=state_json(final),
            reduced_density=matrix_json(reduced_qubit_density(final)),
            metrics=_clean_metrics(metrics),
            outcomes=outcomes,
        )
    else:
        fn, params, name = v["fn"], v["params"], v["protocol"]
        analytic = fn(**params)
        report.update(
            final=state_json(analytic.final),
            reduced_density=matrix_json(_density(analytic.final)),
            metrics=_clean_metrics(analytic.metrics),
        )
        if analytic.ledger:
            report["ledger"] = list(analytic.ledger)
        outcomes = []
        sums: dict[str, float] = {}
        for k in range(shots):
            r = fn(**params, rng=P.shot_rng(seed, k))
            entry: dict = {}
            if r.outcome is not None:
                entry = {"outcome": _outcome_json(r.outcome.outcome), "probability": r.outcome.probability}
            entry["metrics"] = _clean_metrics(r.metrics)
            outcomes.append(entry)
            for mk, mv in entry["metrics"].items():
                sums[mk] = sums.get(mk, 0.0) + mv
        if shots:
            report["shot_means"] = {k: s / shots for k, s in sums.items()}
        report["outcomes"] = outcomes
        traj = protocol_basis_trajectories(name, fn, params)
    traj_doc = None
    if traj is not None:
        traj_doc = {"schema": SCHEMA, "per_basis_label": True, "stages": _stage_table(traj)}
    return report, traj_doc


# -- sweeps -----------------------------------------------------------------------------------


def _set_path(doc: dict, path: str, value):
    parts = path.split(".")
    cur = doc
    for i, p in enumerate(parts[:-1]):
        key: Any = int(p) if isinstance(cur, list) else p
        try:
            cur = cur[key]
        except (KeyError, IndexError, ValueError, TypeError):
            raise SchemaError(f"axes path {path!r}: {'.'.join(parts[: i + 1])} does not exist") from None
    last = parts[-1]
    if isinstance(cur, list):
        cur[int(last)] = value
    elif isinstance(cur, dict):
        cur[last] = value
    else:
        raise SchemaError(f"axes path {path!r}: parent is not an object")


def _metric_value(report: dict, name: str) -> float:
    for key in ("metrics", "shot_means"):
        if name in report.get(key, {}):
            v = report[key][name]
            return v
    raise SchemaError(f"metrics: {name!r} not produced by this scenario")


def _sweep_point(args) -> list:
    base, paths, values, metrics = args
    sc = copy.deepcopy(base)
    for p, val in zip(paths, values):
        _set_path(sc, p, val)
    report, _ = run_scenario(sc)
    return [_metric_value(report, m) for m in metrics]


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, complex):
        return f"{format(v.real, '.17g')}{'+' if v.imag >= 0 else '-'}{format(abs(v.imag), '.17g')}j"
    if isinstance(v, dict) and set(v) <= {"re", "im"}:
        return fmt(complex(v.get("re", 0), v.get("im", 0)))
    return str(v)


def validate_sweep(sw: Any) -> tuple[dict, list[str], list[list], list[str]]:
    if not isinstance(sw, dict):
        raise SchemaError("sweep: expected a JSON object")
    if sw.get("schema", SCHEMA) != SCHEMA:
        raise SchemaError(f"schema: expected {SCHEMA!r}")
    base = sw.get("base")
    validate_scenario(base)
    axes = sw.get("axes")
    if not isinstance(axes, list) or not axes:
        raise SchemaError("axes: must be a non-empty list")
    paths, values = [], []
    for i, ax in enumerate(axes):
        if not isinstance(ax, dict) or not isinstance(ax.get("path"), str):
            raise SchemaError(f"axes[{i}].path: expected a string")
        vals = ax.get("values")
        if not isinstance(vals, list) or not vals:
            raise SchemaError(f"axes[{i}].values: expected a non-empty list")
        paths.append(ax["path"])
        values.append(vals)
    if math.prod(len(v) for v in values) > MAX_SWEEP_POINTS:
        raise SchemaError(f"axes: grid exceeds {MAX_SWEEP_POINTS} points")
    metrics = sw.get("metrics")
    if not isinstance(metrics, list) or not metrics or not all(isinstance(m, str) for m in metrics):
        raise SchemaError("metrics: expected a non-empty list of names")
    return base, paths, values, metrics


def run_sweep(sw: dict, jobs: int = 1) -> str:
    base, paths, values, metrics = validate_sweep(sw)
    grid = list(itertools.product(*values))
    # check every point parses before spending time on any of them
    for point in grid:
        sc = copy.deepcopy(base)
        for p, val in zip(paths, point):
            _set_path(sc, p, val)
        validate_scenario(sc)
    tasks = [(base, paths, point, metrics) for point in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_sweep_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [_sweep_point(t) for t in tasks]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(paths + metrics)
    for point, row in zip(grid, rows):
        w.writerow([fmt(x) for x in list(point) + row])
    return buf.getvalue()


# -- entry point --------------------------------------------------------------------------------


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise SchemaError(f"{path}: file not found") from None
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON ({e})") from None


def _emit(text: str, out: str | None, filename: str):
    if out is None:
        sys.stdout.write(text)
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    (d / filename).write_text(text)


def cmd_run(args) -> int:
    report, traj = run_scenario(_load_json(args.file))
    _emit(to_json(report), args.out, "report.json")
    if traj is not None and args.out is not None:
        _emit(to_json(traj), args.out, "trajectory.json")
    return 0


def cmd_sweep(args) -> int:
    if args.jobs < 1:
        raise SchemaError("--jobs: must be at least 1")
    _emit(run_sweep(_load_json(args.file), args.jobs), args.out, "sweep.csv")
    return 0


def cmd_validate(args) -> int:
    from .validate import CHECKS, run_validation

    if args.filter and not any(args.filter in n for n in CHECKS):
        raise SchemaError(f"--filter: no check matches {args.filter!r}")
    summary = run_validation(args.filter, args.merge_tol)
    if args.json == "-":
        sys.stdout.write(to_json(summary))
    else:
        for c in summary["checks"]:
            print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']:<22} {c['detail']}")
        if args.json:
            Path(args.json).write_text(to_json(summary))
    return 0 if summary["passed"] else 1


def cmd_search(args) -> int:
    variant = args.variant or "printed"
    if args.target == "fig11" and variant != "printed":
        raise SchemaError("--variant: fig11 has only the printed target")
    doc = freeze(args.target) if variant == FROZEN_VARIANT[args.target] else search(args.target, variant)
    text = dumps(doc)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if doc["sequence"] is None:
        print(f"no sequence of the allowed form reproduces the {args.target} target ({variant})", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qubus", description=__doc__)
    ap.add_argument("--version", action="version", version=f"qubus {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("file")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("sweep", help="run a parameter sweep, emit CSV")
    s.add_argument("file")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)
    v = sub.add_parser("validate", help="run the built-in validation suite")
    v.add_argument("--filter")
    v.add_argument("--json", help="write the JSON summary to this file ('-' for stdout)")
    v.add_argument("--merge-tol", type=float, help="override merge_tol in the oracle check")
    v.set_defaults(func=cmd_validate)
    q = sub.add_parser("search-sequence", help="search for a figure-only gate sequence")
    q.add_argument("target", choices=["fig11", "fig13"])
    q.add_argument("--variant", choices=["printed", "cos2theta"])
    q.add_argument("--out")
    q.set_defaults(func=cmd_search)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except SchemaError as e:
        print(f"qubus: input error: {e}", file=sys.stderr)
        return 2
    except (QubusError, ValueError, ArithmeticError) as e:
        print(f"qubus: runtime error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
