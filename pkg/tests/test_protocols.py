import math

import numpy as np
import pytest

from qubus import protocols as P
from qubus.measurement import Bucket, Homodyne, MixedOutcome

S2 = 1 / math.sqrt(2)


def test_shot_rng_streams():
    a = P.shot_rng(42, 0).random(3)
    assert np.array_equal(a, P.shot_rng(42, 0).random(3))
    assert not np.array_equal(a, P.shot_rng(42, 1).random(3))
    assert not np.array_equal(a, P.shot_rng(43, 0).random(3))


def test_qnd_analytic_metrics():
    r = P.qnd_qubit_measurement(S2, S2, 3.0)
    assert r.metrics["error_quoted"] == pytest.approx(1.3498980316301e-3, rel=1e-12)
    assert r.outcome is None
    assert r.final.bus_amplitudes() == {"0": [3], "1": [-3]}


def test_qnd_forced_outcome_collapses():
    r = P.qnd_qubit_measurement(S2, S2, 3.0, x=6.0)
    assert r.metrics["bit"] == 0
    assert abs(r.final.qubit_vector()[0]) ** 2 > 1 - 1e-15


def test_qnd_requires_normalised_input():
    with pytest.raises(ValueError):
        P.qnd_qubit_measurement(1, 1, 3.0)


def test_qnd_error_rate_tracks_exact_error():
    rate = P.qnd_error_rate(0.5, 0.0, 4000, seed=3)
    sigma = math.sqrt(P.exact_qnd_error(0.5) * (1 - P.exact_qnd_error(0.5)) / 4000)
    assert abs(rate - P.exact_qnd_error(0.5)) < 5 * sigma


def test_parity_gate_analytic():
    r = P.parity_gate_displacement()
    assert r.metrics["p_n0"] == pytest.approx(0.5, abs=1e-12)
    assert r.final.bus_amplitudes() == {"00": [6], "01": [0], "10": [0], "11": [-6]}


def test_parity_gate_odd_herald():
    r = P.parity_gate_displacement(outcome=0)
    assert r.metrics["fidelity"] > 1 - 1e-10
    assert r.metrics["concurrence"] == pytest.approx(1, abs=1e-10)
    r = P.parity_gate_displacement(outcome=5)
    assert r.metrics["fidelity"] == pytest.approx(1, abs=1e-12)


def test_parity_gate_bucket_and_homodyne():
    r = P.parity_gate_displacement(detector=Bucket(), outcome=True)
    assert r.metrics["A"] == pytest.approx(0.5, abs=1e-12)
    # no parity information in the click: concurrence of the mixture is zero
    assert r.metrics["concurrence"] == pytest.approx(0, abs=1e-12)
    r = P.parity_gate_displacement(detector=Homodyne(), outcome=0.1)
    assert r.metrics["heralded"] == 1
    assert r.metrics["fidelity"] > 1 - 1e-10
    assert P.parity_gate_displacement(detector=Homodyne()).metrics["herald_probability"] == pytest.approx(0.5, abs=1e-6)


def test_purification_recursion():
    assert P.purification_recursion(4) == [0.5, 0.25, 0.125, 0.0625]
    assert P.purification_recursion(3, a=0.2, first_click=1.0) == pytest.approx([1, 0.2, 0.04])


def test_purification_forced_clicks_ledger():
    r = P.bucket_purification(m=5, worst_case=True)
    probs = [e["path_probability"] for e in r.ledger]
    assert probs == pytest.approx(P.purification_recursion(5), abs=1e-12)
    assert all(e["A"] == 0.5 for e in r.ledger)
    assert r.metrics["success"] == 0
    assert isinstance(r.final, MixedOutcome)


def test_purification_success_gives_bell_state():
    for k in range(20):
        r = P.bucket_purification(m=6, rng=P.shot_rng(11, k), worst_case=True)
        if r.metrics["success"]:
            assert r.metrics["fidelity"] > 1 - 1e-10
            break
    else:
        pytest.fail("no successful run in 20 tries")


def test_purification_rejects_zero_rounds():
    with pytest.raises(ValueError):
        P.bucket_purification(m=0)


@pytest.mark.parametrize("b1,b2", [(0.5 * math.sqrt(math.pi / 2), None), (math.sqrt(math.pi / 2), math.sqrt(math.pi / 32))])
def test_cphase_gate(b1, b2):
    r = P.cphase_displacement_gate(beta1=b1, beta2=b2)
    assert r.metrics["bus_spread"] < 1e-12
    assert r.metrics["concurrence"] == pytest.approx(1, abs=1e-12)
    assert r.metrics["process_error"] < 1e-10
    assert P.cnot_displacement_variant(beta1=b1, beta2=b2).metrics["process_error"] < 1e-10


def test_cphase_identity_when_product_zero():
    g = P.process_matrix(P.cphase_ops(1.0, 0.0))
    assert np.allclose(g, g[0, 0] * np.eye(4), atol=1e-12)


def test_process_matrix_requires_closed_loop():
    with pytest.raises(P.QubusError):
        P.process_matrix(P.parity_ops(1.0))


def test_rotation_parity_amplitudes_exact():
    r = P.rotation_parity_number(alpha=3.0, theta=0.5)
    assert r.metrics["rotation_residual"] < 1e-14


def test_rotation_parity_kappa_frozen():
    # exact relative phase offset at n = 3 from a dense Fock computation
    r = P.rotation_parity_number(alpha=3.0, theta=0.5, outcome=3)
    assert r.metrics["kappa"] == pytest.approx(-0.351539097498311, abs=1e-10)
    assert r.metrics["concurrence"] == pytest.approx(1, abs=1e-10)


def test_rotation_parity_homodyne_closes():
    r = P.rotation_parity_homodyne(alpha=30.0, theta=0.1)
    assert r.metrics["closure_residual"] < 1e-12


def test_rotation_parity_homodyne_errors_frozen():
    quoted, exact = P.rotation_parity_homodyne_errors(30.0, 0.1)
    assert quoted == pytest.approx(0.274253117750074, rel=1e-12)
    assert exact == pytest.approx(0.115847239647811, rel=1e-12)


def test_rotation_parity_homodyne_even_readout():
    r = P.rotation_parity_homodyne(alpha=2.0, theta=0.1, x=-4.0)
    assert r.metrics["parity"] == 0
    assert "even_relative_phase" in r.metrics


def test_rotation_only_phi_d_frozen():
    a = P.rotation_only_simulated(1.0, 0.1)
    assert a.phi_d == pytest.approx(0.0805263812504826, abs=1e-12)
    assert P.rotation_only_closed_forms(1.0, 0.1).phi_d == pytest.approx(a.phi_d, abs=1e-12)


def test_rotation_only_errata_matches():
    for a in (0.5, 1.0, 2.0):
        for t in (0.01, 0.05, 0.1):
            dev = P.rotation_only_deviation(P.rotation_only_simulated(a, t), P.rotation_only_closed_forms(a, t, errata=True))
            assert max(v for k, v in dev.items() if k != "phi_s") < 1e-9


def test_rotation_only_cphase_residual_shrinks():
    # fixed |beta theta|^2 = pi/4: residual displacement falls like theta^2
    spreads = [P.rotation_only_cphase(beta=b).metrics["bus_spread"] for b in (5.0, 10.0, 20.0)]
    assert spreads[0] > spreads[1] > spreads[2]
    assert spreads[1] / spreads[2] == pytest.approx(2, rel=0.05)
    r = P.rotation_only_cphase(beta=20.0)
    assert abs(r.metrics["phi_d"]) == pytest.approx(math.pi, abs=0.01)


def test_even_amplitude_variants():
    r = P.rotation_displacement_parity(alpha=1.0, theta=0.05)
    assert r.metrics["even_residual_cos2theta"] < 1e-12
    assert r.metrics["even_residual"] > 0.9


def test_geometric_phase_square():
    steps = [1, 1j, -1, -1j]
    assert P.shoelace_area(steps) == pytest.approx(1)
    assert P.geometric_phase_of_path(steps) == pytest.approx(2, abs=1e-12)
    with pytest.raises(ValueError):
        P.geometric_phase_of_path([1, 1j])
