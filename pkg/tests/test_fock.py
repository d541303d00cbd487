import math

import numpy as np
import pytest

from qubus.core import CondDisp, CondRot, HybridState, SingleQubit, UncondDisp, hadamard, run_circuit
from qubus.fock import (
    JCParams,
    TruncationError,
    coherent_amplitudes,
    coherent_fock,
    dispersive_jc_validate,
    displacement_matrix,
    embed,
    joint_fidelity,
    number_phase_matrix,
    quadrature_wavefunctions,
    run_circuit_fock,
    sandwich_displacement,
    tail_mass,
    truncation_dim,
)


def test_truncation_rule():
    assert truncation_dim(0) == 18
    assert truncation_dim(3) == math.ceil(9 + 8 * math.sqrt(10) + 10)
    for r in (0.5, 2.0, 5.0, 9.0):
        dim = truncation_dim(r)
        assert tail_mass(coherent_amplitudes(r, dim)) < 1e-8


def test_coherent_too_small_dim():
    with pytest.raises(TruncationError):
        coherent_fock(5.0, 20)
    with pytest.raises(TruncationError):
        displacement_matrix(5.0, 20)


def test_vacuum_is_basis_vector():
    v = coherent_fock(0, 19)
    assert v.amps[0] == 1 and v.norm() == 1


def test_displacement_unitary_and_moves_vacuum():
    beta = 1.5 - 0.5j
    d = displacement_matrix(beta, 60)
    # columns whose displaced support still fits under the truncation rule
    headroom = max(n for n in range(60) if truncation_dim(math.sqrt(n) + abs(beta)) <= 60)
    assert d.unitarity_error(headroom + 1) < 1e-9
    assert (displacement_matrix(-beta, 60) @ d).matrix[:headroom, :headroom] == pytest.approx(np.eye(headroom), abs=1e-9)
    assert number_phase_matrix(0.7, 60).unitarity_error() < 1e-12
    out = d @ coherent_fock(0, 60)
    assert abs(np.vdot(coherent_amplitudes(beta, 60), out.amps)) == pytest.approx(1, abs=1e-12)


def test_number_phase_rotates_coherent_state():
    r = number_phase_matrix(0.3, 40)
    out = r @ coherent_fock(1.2, 40)
    want = coherent_amplitudes(1.2 * np.exp(0.3j), 40)
    assert np.allclose(out.amps, want, atol=1e-14)


def test_quadrature_wavefunctions_match_kernel():
    from qubus.measurement import quadrature_kernel

    x = np.linspace(-6, 8, 31)
    for alpha, angle in ((0.7 + 0.4j, 0.0), (1.1 - 0.3j, 0.8)):
        psi = quadrature_wavefunctions(x, 50, angle)
        proj = coherent_amplitudes(alpha, 50) @ psi
        assert np.allclose(proj, quadrature_kernel(x, alpha, angle), atol=1e-12)


def test_embed_norm():
    s = HybridState.plus_all(2, 1 + 0.5j)
    v = embed(s, 40)
    assert np.vdot(v, v).real == pytest.approx(1, abs=1e-12)


def test_single_conditional_displacement_matches_dense():
    ops = [CondDisp(0, 0.8 + 0.2j)]
    branch, _ = run_circuit(HybridState.product([0.6, 0.8], 0.3), ops)
    dense = run_circuit_fock(1, [0.6, 0.8], 0.3, ops, 40)
    assert joint_fidelity(embed(branch, 40), dense) == pytest.approx(1, abs=1e-12)


def test_mixed_circuit_matches_dense():
    ops = [hadamard(1), CondDisp(0, 0.5), CondRot(1, 0.4), UncondDisp(-0.3j), SingleQubit(0, np.array([[0, 1], [1, 0]])), CondDisp(1, 0.2 + 0.6j)]
    amps = np.array([0.5, 0.5j, -0.5, 0.5])
    branch, _ = run_circuit(HybridState.product(amps, 0.4 - 0.2j), ops)
    dense = run_circuit_fock(2, amps, 0.4 - 0.2j, ops)
    assert joint_fidelity(embed(branch, len(dense) // 4), dense) > 1 - 1e-10


def test_dense_circuit_flags_truncation():
    with pytest.raises(TruncationError):
        run_circuit_fock(1, [1, 0], 0, [CondDisp(0, 4.0)], 19)


def test_joint_fidelity_orthogonal():
    assert joint_fidelity([1, 0], [0, 1]) == 0


def test_sandwich_third_order():
    a, b = sandwich_displacement(1.0, 0.1), sandwich_displacement(1.0, 0.05)
    assert a.error / b.error == pytest.approx(8, rel=0.2)
    d1 = abs(sandwich_displacement(1.0, 0.05).displacement)
    d2 = abs(sandwich_displacement(2.0, 0.05).displacement)
    assert d2 / d1 == pytest.approx(2, rel=0.02)


def test_sandwich_rejects_large_step():
    with pytest.raises(ValueError):
        sandwich_displacement(1.0, 0.3)


def test_jc_params_validation():
    with pytest.raises(ValueError):
        JCParams(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        JCParams(1.0, 1.0, 0.1)
    assert JCParams(0.0, 50.0, 1.0).chi_predicted == pytest.approx(1 / 200)


def test_jc_dispersive_fit():
    fit = dispersive_jc_validate(JCParams(0.0, 50.0, 1.0), alpha=1.0)
    assert fit.relative_error < 0.05
    assert fit.chi_eff == pytest.approx(fit.chi_predicted, rel=0.05)
