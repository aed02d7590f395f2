import numpy as np
import pytest
import scipy.linalg

from adiabatic_lab.dynamics import LindbladGenerator, Schedule, evolve_lindblad
from adiabatic_lab.opalg import SIGMA_X, SIGMA_Y, SIGMA_Z, dagger, pauli_basis
from adiabatic_lab.openad import adiabatic_propagate_1d
from adiabatic_lab.thermo import (
    HBAR_EVS,
    adiabatic_heat_1d,
    build_ledger,
    dephasing_heat_scenario,
    entropy_rate,
    ev_to_rads,
    heat_rate,
    rads_to_ev,
    unitary_conjugate_channel,
    von_neumann_entropy,
    work_rate,
)

BASIS = pauli_basis(1)
RNG = np.random.default_rng(31)

OMEGA = ev_to_rads(82.662e-12)
BETA = 1.0 / ev_to_rads(17.238e-12)
TAU_DEC = 1.0e-3


def random_unitary(rng=RNG):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, _ = np.linalg.qr(a)
    return q


# ---------------------------------------------------------------------------
# rates


def test_heat_and_work_rate_dual_routes():
    gen = LindbladGenerator(0.7 * SIGMA_X + 0.2 * SIGMA_Z, ((0.4, SIGMA_Z),))
    rho = 0.5 * (np.eye(2, dtype=complex) + 0.3 * SIGMA_X - 0.5 * SIGMA_Z)
    h = 1.3 * SIGMA_X
    # passing the basis activates the paired evaluation; disagreement raises
    q = heat_rate(gen, rho, h, BASIS)
    assert q == pytest.approx(heat_rate(gen, rho, h), rel=1e-12)
    w = work_rate(0.9 * SIGMA_Y, rho, BASIS)
    assert w == pytest.approx(work_rate(0.9 * SIGMA_Y, rho), rel=1e-12)


def test_constant_hamiltonian_has_zero_work():
    rho = 0.5 * (np.eye(2, dtype=complex) + 0.4 * SIGMA_X)
    assert work_rate(np.zeros((2, 2)), rho) == 0.0


def test_entropy_rate_guards():
    gen = LindbladGenerator(np.zeros((2, 2)), ((1.0, SIGMA_Z),))
    with pytest.raises(ValueError, match="negative eigenvalue"):
        entropy_rate(gen, np.diag([1.2, -0.2]).astype(complex))
    with pytest.warns(RuntimeWarning, match="rank deficient"):
        entropy_rate(gen, np.diag([1.0, 0.0]).astype(complex))


def test_von_neumann_entropy_values():
    assert von_neumann_entropy(0.5 * np.eye(2)) == pytest.approx(np.log(2.0))
    assert von_neumann_entropy(np.diag([1.0, 0.0])) == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# ledger on the misaligned-bath scenario


def test_ledger_first_law_residual_shrinks_with_the_grid():
    coarse = dephasing_heat_scenario(OMEGA, BETA, 628.0, TAU_DEC, n_steps=1000)
    fine = dephasing_heat_scenario(OMEGA, BETA, 628.0, TAU_DEC, n_steps=4000)
    assert fine["ledger"].first_law_residual < 1e-7 * OMEGA
    # the residual is dominated by trapezoid error in the rate integrals
    ratio = coarse["ledger"].first_law_residual / fine["ledger"].first_law_residual
    assert ratio > 8.0


def test_scenario_heat_matches_closed_form_constant_rate():
    gamma0 = 628.0
    res = dephasing_heat_scenario(OMEGA, BETA, gamma0, TAU_DEC, n_steps=2000)
    want = OMEGA * np.tanh(BETA * OMEGA) * (1.0 - np.exp(-2.0 * gamma0 * TAU_DEC))
    assert res["q_total"] == pytest.approx(want, rel=1e-6)
    assert res["q_closed"] == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("gamma0", [314.0, 628.0, 1257.0])
def test_scenario_heat_matches_closed_form_ramped_rate(gamma0):
    res = dephasing_heat_scenario(
        OMEGA, BETA, lambda s: gamma0 * (1.0 + s), TAU_DEC, n_steps=2000
    )
    want = OMEGA * np.tanh(BETA * OMEGA) * (1.0 - np.exp(-3.0 * gamma0 * TAU_DEC))
    assert res["q_total"] == pytest.approx(want, rel=1e-6)


def test_heat_saturates_at_asymptote():
    res = dephasing_heat_scenario(OMEGA, BETA, 1.0e4, TAU_DEC, n_steps=4000)
    q_max = OMEGA * np.tanh(BETA * OMEGA)
    assert res["q_asymptote"] == pytest.approx(q_max, rel=1e-12)
    assert res["q_total"] == pytest.approx(q_max, rel=1e-3)


def test_entropy_rate_equals_beta_eff_times_heat_rate():
    """Pointwise dS = beta_eff dQ along the x-axis family of states."""
    res = dephasing_heat_scenario(OMEGA, BETA, 628.0, TAU_DEC, n_steps=1000)
    ledger = res["ledger"]
    traj = res["trajectory"]
    g = np.array([-np.real(np.trace(rho @ SIGMA_X)) for rho in traj.states])
    beta_eff = np.arctanh(g) / OMEGA
    want = beta_eff * ledger.heat_rate
    rel = np.abs(ledger.entropy_rate - want) / np.abs(want)
    assert np.max(rel) < 1e-8


def test_beta_eff_series_starts_at_bath_temperature():
    res = dephasing_heat_scenario(OMEGA, BETA, 314.0, TAU_DEC, n_steps=500)
    assert res["beta_eff"][0] == pytest.approx(BETA, rel=1e-12)
    assert np.all(np.diff(res["beta_eff"]) < 0)  # state heats monotonically


def test_scenario_input_validation():
    with pytest.raises(ValueError, match="positive"):
        dephasing_heat_scenario(-1.0, BETA, 314.0, TAU_DEC, n_steps=200)
    with pytest.raises(ValueError, match="positive"):
        dephasing_heat_scenario(OMEGA, 0.0, 314.0, TAU_DEC, n_steps=200)


# ---------------------------------------------------------------------------
# invariances and pairings


def test_heat_invariant_under_unitary_conjugation():
    gamma0 = 628.0
    sched = Schedule(
        TAU_DEC,
        lambda s: LindbladGenerator(OMEGA * SIGMA_X, ((gamma0, SIGMA_Z),)),
    )
    g0 = np.tanh(BETA * OMEGA)
    rho0 = 0.5 * (np.eye(2, dtype=complex) - g0 * SIGMA_X)
    base = build_ledger(sched, evolve_lindblad(sched, rho0, 800))
    for _ in range(5):
        u = random_unitary()
        conj = unitary_conjugate_channel(sched, u)
        traj = evolve_lindblad(conj, u @ rho0 @ dagger(u), 800)
        led = build_ledger(conj, traj)
        assert abs(led.heat[-1] - base.heat[-1]) < 1e-9 * OMEGA
        assert abs(led.entropy[-1] - base.entropy[-1]) < 1e-9


def test_conjugation_rejects_nonunitary():
    sched = Schedule(1.0, lambda s: LindbladGenerator(SIGMA_X, ()))
    with pytest.raises(ValueError, match="unitary"):
        unitary_conjugate_channel(sched, 2.0 * np.eye(2))


def test_adiabatic_heat_matches_direct_rate_for_constant_generator():
    gamma0, tau = 500.0, 1.5e-3
    ham = OMEGA * SIGMA_X
    sched = Schedule(tau, lambda s: LindbladGenerator(ham, ((gamma0, SIGMA_Z),)))
    g0 = np.tanh(BETA * OMEGA)
    rho0 = 0.5 * (np.eye(2, dtype=complex) - g0 * SIGMA_X)
    sol = adiabatic_propagate_1d(sched, rho0, tau, BASIS, n_points=101)

    from adiabatic_lab.opalg import to_coherence_vector

    h_comp = to_coherence_vector(ham, BASIS).components
    series = adiabatic_heat_1d(sol, h_comp)
    gen = LindbladGenerator(ham, ((gamma0, SIGMA_Z),))
    for k in (0, 50, 100):
        want = heat_rate(gen, sol.states[k], ham)
        assert series[k] == pytest.approx(want, rel=1e-9)


def test_ev_conversion_roundtrip_and_scale():
    assert rads_to_ev(ev_to_rads(82.662e-12)) == pytest.approx(82.662e-12, rel=1e-15)
    # 1 eV corresponds to about 1.52e15 rad/s
    assert ev_to_rads(1.0) == pytest.approx(1.0 / HBAR_EVS)
