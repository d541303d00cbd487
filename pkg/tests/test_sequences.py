import math

import numpy as np
import pytest

from qubus.core import CondDisp, CondRot, UncondDisp
from qubus.sequences import (
    GRID_ALPHA,
    GRID_THETA,
    dumps,
    fig11_alpha_pm,
    fig13_target,
    freeze,
    instantiate,
    load_frozen,
    op_descriptor_to_busop,
    search,
    verify,
)


def test_descriptor_conversion():
    assert op_descriptor_to_busop({"op": "cond_rot", "qubit": 1, "sign": -1}, 0.2, 3) == CondRot(1, -0.2)
    assert op_descriptor_to_busop({"op": "cond_disp", "qubit": 0, "direction": [0, -1]}, 0.2, 3) == CondDisp(0, -3j)
    assert op_descriptor_to_busop({"op": "uncond_disp", "direction": [-1, 0]}, 0.2, 3) == UncondDisp(-3)
    with pytest.raises(ValueError):
        op_descriptor_to_busop({"op": "swap"}, 0.2, 3)


def test_fig11_amplitudes_reduce_to_start_at_zero_angle():
    ap, am = fig11_alpha_pm(1.3, 0.0)
    start = 1.3 * np.exp(1j * math.pi / 4)
    assert ap == pytest.approx(start) and am == pytest.approx(start)


def test_fig13_unknown_variant():
    with pytest.raises(ValueError):
        fig13_target(1.0, 0.1, "other")


def test_frozen_fig11():
    doc = load_frozen("fig11")
    assert doc["variant"] == "printed"
    assert len(doc["sequence"]) == 8
    assert doc["multiplicity"] == 2
    res = verify("fig11", doc["sequence"])
    assert res["max_bus_deviation"] < 1e-9
    assert res["max_phase_deviation"] < 1e-9


def test_frozen_fig13_cos2theta():
    doc = load_frozen("fig13")
    assert doc["variant"] == "cos2theta"
    assert doc["printed_multiplicity"] == 0
    assert len(doc["sequence"]) == 4
    assert verify("fig13", doc["sequence"], "cos2theta")["max_bus_deviation"] < 1e-9
    assert verify("fig13", doc["sequence"], "printed")["max_bus_deviation"] > 0.1


def test_fig11_phases_on_odd_labels():
    from qubus.core import HybridState, run_circuit

    seq = load_frozen("fig11")["sequence"]
    for a in GRID_ALPHA:
        for t in GRID_THETA:
            start = a * np.exp(1j * math.pi / 4)
            final, _ = run_circuit(HybridState.basis("01", start), instantiate(seq, t, math.sqrt(2) * a))
            (b,) = final.branches
            assert math.remainder(np.angle(b.coeff) - 4 * a * a * math.cos(t), 2 * math.pi) == pytest.approx(0, abs=1e-9)


@pytest.mark.parametrize("name", ["fig11", "fig13"])
def test_search_is_idempotent(name):
    from importlib import resources

    text = resources.files("qubus").joinpath("data", f"{name}.json").read_text()
    assert dumps(freeze(name)) == text


def test_printed_fig13_has_no_solution():
    doc = search("fig13", "printed")
    assert doc["sequence"] is None and doc["multiplicity"] == 0
