"""Acceptance criteria 1-11, each at its stated tolerance.

Every test records one PASS/FAIL line, repeated in the terminal summary.
"""

import math

import numpy as np
import pytest

from qubus import protocols as P
from qubus import validate as V
from qubus.measurement import exact_qnd_error, quoted_qnd_error, photon_number_measure, photon_number_pmf
from qubus.sequences import GRID_ALPHA, GRID_THETA

S2 = 1 / math.sqrt(2)
SHOTS = 10**5


def test_criterion_01_qnd_error_curve(acceptance):
    e3 = quoted_qnd_error(3.0)
    analytic_ok = abs(e3 - 1.3e-3) < 1e-4
    rescale = max(abs(quoted_qnd_error(b, 1.0) - quoted_qnd_error(b / math.sqrt(2))) for b in (1.0, 2.0, 3.0))
    parts, mc_ok, exact_ok = [], True, True
    for beta in (1.0, 2.0, 3.0):
        rate = P.qnd_error_rate(beta, 0.0, SHOTS, seed=1000 + int(beta))
        e = quoted_qnd_error(beta)
        sigma = math.sqrt(e * (1 - e) / SHOTS)
        ok = abs(rate - e) <= 5 * sigma
        mc_ok &= ok
        ex = exact_qnd_error(beta)
        exact_ok &= abs(rate - ex) <= 5 * math.sqrt(max(ex * (1 - ex), 1 / SHOTS) / SHOTS)
        parts.append(f"b={beta:g}: MC {rate:.3e} vs E {e:.3e} ({abs(rate - e) / sigma:.1f} sigma), exact {ex:.3e}")
    passed = analytic_ok and mc_ok and rescale == 0.0
    acceptance.record(
        1, passed,
        f"E(3)={e3:.4e}; rescaling deviation {rescale:.1e}; " + "; ".join(parts)
        + f"; MC vs exact overlap within 5 sigma: {exact_ok}",
    )
    assert exact_ok
    assert passed


def test_criterion_02_displacement_parity(acceptance):
    r0 = P.parity_gate_displacement(beta=3.0, outcome=0)
    fid0 = r0.metrics["fidelity"]
    s = P.parity_gate_displacement(beta=3.0).final
    pmf = photon_number_pmf(s)
    cdf = np.cumsum(pmf / pmf.sum())
    # same draw as photon_number_measure, one Philox stream per shot
    ns = np.array([min(int(np.searchsorted(cdf, P.shot_rng(42, k).random(), side="right")), len(pmf) - 1) for k in range(SHOTS)])
    worst = 0.0
    for n in sorted(set(ns[ns > 0].tolist())):
        post = photon_number_measure(s, n=n).posterior.qubit_vector()
        target = np.array([S2, 0, 0, S2 * (-1) ** n])
        worst = max(worst, 1 - abs(np.vdot(target, post)) ** 2)
    frac = float(np.mean(ns == 0))
    sigma = math.sqrt(0.25 / SHOTS)
    passed = fid0 >= 1 - 1e-10 and worst <= 1e-12 and abs(frac - 0.5) <= 5 * sigma
    acceptance.record(
        2, passed,
        f"n=0 fidelity 1-{1 - fid0:.1e}; worst n>0 infidelity {worst:.1e} over {len(set(ns[ns > 0].tolist()))} distinct n; "
        f"P(n=0)={frac:.4f} ({abs(frac - 0.5) / sigma:.1f} sigma)",
    )
    assert passed


def test_criterion_03_bucket_purification(acceptance):
    m_max = 6
    rec = P.purification_recursion(m_max)
    analytic = max(abs(rec[m - 1] - 0.5**m) for m in range(1, m_max + 1))
    forced = P.bucket_purification("plus_all", 3.0, m_max, worst_case=True).ledger
    engine = max(abs(e["path_probability"] - 0.5 ** e["iteration"]) for e in forced)
    runs = 10**4
    mixed = np.zeros(m_max)
    for k in range(runs):
        ledger = P.bucket_purification("plus_all", 3.0, m_max, rng=P.shot_rng(77, k), worst_case=True).ledger
        for e in ledger:
            if not e["click"]:
                break
            mixed[e["iteration"] - 1] += 1
    frac = mixed / runs
    z = [abs(frac[m] - 0.5 ** (m + 1)) / math.sqrt(0.5 ** (m + 1) * (1 - 0.5 ** (m + 1)) / runs) for m in range(m_max)]
    passed = analytic <= 1e-12 and engine <= 1e-12 and max(z) <= 5
    acceptance.record(
        3, passed,
        f"recursion deviation {analytic:.1e}, engine ledger deviation {engine:.1e}; "
        f"simulated residual {', '.join(f'{f:.4f}' for f in frac)} (max {max(z):.1f} sigma)",
    )
    assert passed


def test_criterion_04_measurement_free_gate(acceptance):
    b = math.sqrt(math.pi / 8)
    cases = [(b, b), (math.sqrt(math.pi / 2), math.sqrt(math.pi / 32))]
    details, passed = [], True
    for b1, b2 in cases:
        assert 2 * b1 * b2 == pytest.approx(math.pi / 4)
        cz = P.cphase_displacement_gate(P.PLUS2, b1, b2)
        # CNOT entangles control |+> (qubit 1) with target |0> (qubit 0)
        cx = P.cnot_displacement_variant(np.array([S2, S2, 0, 0]), b1, b2)
        for tag, r in (("cphase", cz), ("cnot", cx)):
            m = r.metrics
            ok = m["bus_spread"] < 1e-12 and abs(m["concurrence"] - 1) <= 1e-12 and m["process_error"] <= 1e-10
            passed &= ok
            details.append(
                f"{tag} b1/b2={b1 / b2:g}: spread {m['bus_spread']:.1e}, 1-C {1 - m['concurrence']:.1e}, process {m['process_error']:.1e}"
            )
    acceptance.record(4, passed, "; ".join(details))
    assert passed


def test_criterion_05_area_law(acceptance):
    c = V.check_area(50)
    acceptance.record(5, c.passed, c.detail)
    assert c.passed


def test_criterion_06_rotation_parity(acceptance):
    amp_res = max(
        P.rotation_parity_number(alpha=a, theta=t).metrics["rotation_residual"]
        for a in (0.5, 1.0, 3.0, 30.0) for t in (0.01, 0.1, 0.5)
    )
    closes = max(
        P.rotation_parity_homodyne(alpha=a, theta=t).metrics["closure_residual"]
        for a in (*GRID_ALPHA, 30.0) for t in GRID_THETA
    )
    ratios = {}
    for a in (*GRID_ALPHA, 30.0):
        for t in GRID_THETA:
            quoted_h, exact_h = P.rotation_parity_homodyne_errors(a, t)
            rd = P.rotation_displacement_parity(alpha=a, theta=t).metrics
            for tag, quoted, exact in (("homodyne", quoted_h, exact_h), ("cond_disp", rd["error_quoted"], rd["error_exact"])):
                ratios[(tag, a, t)] = (quoted, exact, max(quoted / exact, exact / quoted))
    worst_key = max(ratios, key=lambda k: ratios[k][2])
    wp, we, wr = ratios[worst_key]
    factor_ok = wr <= 2
    passed = amp_res <= 1e-12 and closes <= 1e-12 and factor_ok
    acceptance.record(
        6, passed,
        f"rotation amplitude residual {amp_res:.1e}; |00> closure {closes:.1e}; worst erfc ratio {wr:.3f} at "
        f"{worst_key[0]} alpha={worst_key[1]:g} theta={worst_key[2]:g} (printed {wp:.6f}, exact {we:.6f})",
    )
    for (tag, a, t), (p, e, r) in sorted(ratios.items()):
        print(f"    {tag:<9} alpha={a:<4g} theta={t:<5g} printed {p:.6e} exact {e:.6e} ratio {r:.3f}")
    assert amp_res <= 1e-12 and closes <= 1e-12
    assert factor_ok


def test_criterion_07_rotation_only(acceptance):
    worst: dict[str, float] = {}
    for a in GRID_ALPHA:
        for t in GRID_THETA:
            dev = P.rotation_only_deviation(P.rotation_only_simulated(a, t), P.rotation_only_closed_forms(a, t))
            for k, v in dev.items():
                if k not in ("phi_s", "phi_d"):
                    worst[k] = max(worst.get(k, 0.0), v)
    phi_d = max(
        abs(P.rotation_only_simulated(a, t).phi_d - P.rotation_only_closed_forms(a, t).phi_d)
        for a in GRID_ALPHA for t in GRID_THETA
    )
    limit = P.rotation_only_simulated(1.0, 1e-3).gamma_gg / (4 * 1e-3**4)
    bad = sorted(k for k, v in worst.items() if v > 1e-9)
    passed = not bad and phi_d <= 1e-9 and abs(limit - 1) <= 0.05
    acceptance.record(
        7, passed,
        f"{len(worst) - len(bad)}/{len(worst)} quantities within 1e-9"
        + (f"; misses: {', '.join(f'{k} {worst[k]:.2e}' for k in bad)}" if bad else "")
        + f"; phi_d deviation {phi_d:.1e}; gamma_gg/(4 a^2 t^4) at t=1e-3: {limit:.4f}",
    )
    assert phi_d <= 1e-9 and abs(limit - 1) <= 0.05
    assert not bad


def test_criterion_08_rotation_displacement_gate(acceptance):
    c = V.check_fig13()
    alt = V.check_fig13_cos2theta()
    acceptance.record(8, c.passed, f"{c.detail}; against alpha cos 2theta: {alt.values['max_deviation']:.1e}")
    assert alt.passed
    assert c.passed


def test_criterion_09_sandwich(acceptance):
    c = V.check_sandwich()
    acceptance.record(9, c.passed, c.detail)
    assert c.passed


def test_criterion_10_dispersive_jc(acceptance):
    c = V.check_jc()
    acceptance.record(10, c.passed, c.detail)
    assert c.passed


def test_criterion_11_oracle(acceptance):
    c = V.check_oracle(100)
    acceptance.record(11, c.passed, c.detail)
    assert c.passed
