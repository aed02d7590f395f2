import numpy as np
import pytest

from adiabatic_lab.adcheck import (
    c_ar,
    c_tong,
    c_trad,
    c_wu,
    min_gap_noninertial,
    nmr_rotating,
    nmr_rotating_frame,
    oscillating,
    oscillating_noninertial,
    scan_min_gap,
    theorem1_check,
    theorem2_check,
)
from adiabatic_lab.dynamics import Schedule, evolve_unitary, nmr_closed_form_p0
from adiabatic_lab.spectral import LevelCrossingError

W0 = 2 * np.pi * 1.0e4
THETA = 0.03
TAU = 1.0e-3
W1 = W0 * np.tan(THETA)


def nmr_kit(r, n_points=2001):
    return nmr_rotating(W0, W1, r * W0, TAU, n_points=n_points)


# ---------------------------------------------------------------------------
# closed forms of the rotating-drive model


@pytest.mark.parametrize("r", [0.1, 0.5, 1.0, 2.0, 3.0])
def test_nmr_c_trad_closed_form(r):
    kit = nmr_kit(r)
    want = 0.5 * abs(r * np.sin(THETA) * np.cos(THETA))
    assert c_trad(kit.frame, kit.schedule) == pytest.approx(want, rel=1e-4)


@pytest.mark.parametrize("r", [0.1, 0.5, 1.0, 2.0, 3.0])
def test_nmr_c_wu_closed_form(r):
    kit = nmr_kit(r, n_points=801)
    want = (
        r * np.sin(THETA) * np.cos(THETA)
        / (2.0 * np.sqrt(1.0 + r**2 * np.cos(THETA) ** 4))
    )
    assert c_wu(kit.frame) == pytest.approx(want, rel=1e-4)


def test_nmr_c_tong_part_a_is_c_trad():
    kit = nmr_kit(1.5, n_points=801)
    parts = c_tong(kit.frame, kit.schedule)
    assert parts["a"] == pytest.approx(c_trad(kit.frame, kit.schedule), rel=1e-10)
    assert parts["max"] >= parts["a"]
    assert set(parts) == {"a", "b", "c", "max"}


def test_nmr_c_tong_mean_statistic_not_larger():
    kit = nmr_kit(1.5, n_points=801)
    hi = c_tong(kit.frame, kit.schedule, stat="max")
    lo = c_tong(kit.frame, kit.schedule, stat="mean")
    assert lo["b"] <= hi["b"] + 1e-12
    assert lo["c"] <= hi["c"] + 1e-12


def test_c_ar_scales_with_tau_squared():
    k1 = nmr_rotating(W0, W1, 0.5 * W0, TAU, n_points=801)
    k2 = nmr_rotating(W0, W1, 0.5 * W0, 2 * TAU, n_points=801)
    v1 = c_ar(k1.frame, k1.schedule)
    v2 = c_ar(k2.frame, k2.schedule)
    # dH/dt is tau independent in physical time, so the bound grows as tau^2
    assert v2 / v1 == pytest.approx(4.0, rel=1e-3)


def test_c_ar_custom_gap_profile():
    kit = nmr_kit(0.5, n_points=801)
    base = c_ar(kit.frame, kit.schedule)
    halved = c_ar(kit.frame, kit.schedule, gap_fn=lambda e: 0.5 * (e[:, 1] - e[:, 0]))
    # the curvature term |H'||H''|/gap^3 dominates this model, so halving
    # the gap multiplies the bound by 8
    assert halved == pytest.approx(8.0 * base, rel=1e-9)
    with pytest.raises(ValueError, match="positive"):
        c_ar(kit.frame, kit.schedule, gap_fn=lambda e: np.zeros(len(e)))


# ---------------------------------------------------------------------------
# oscillating-drive model


def test_oscillating_energies_closed_form():
    r = 0.7
    kit = oscillating(W0, THETA, r * W0, TAU, n_points=801)
    t = kit.frame.grid * TAU
    x = np.tan(THETA) * np.sin(r * W0 * t)
    want = 0.5 * W0 * np.sqrt(1.0 + x * x)
    assert np.max(np.abs(kit.frame.energies[:, 1] - want)) < 1e-8 * W0


def test_noninertial_energies_closed_form():
    r = 0.6
    kit = oscillating_noninertial(W0, THETA, r * W0, TAU, n_points=801)
    t = kit.frame.grid * TAU
    want = 0.5 * W0 * np.sqrt((1 - r) ** 2 + np.tan(THETA) ** 2 * np.sin(r * W0 * t) ** 2)
    assert np.max(np.abs(kit.frame.energies[:, 1] - want)) < 1e-8 * W0


def test_noninertial_refuses_resonance():
    with pytest.raises(ValueError, match="resonant"):
        oscillating_noninertial(W0, THETA, W0, TAU)


@pytest.mark.parametrize("r", [0.0, 0.5, 1.0, 2.0])
def test_min_gap_closed_form(r):
    """Direct scan of the transformed spectrum against omega0 |1 - r|."""
    want = min_gap_noninertial(W0, r)
    if r == 1.0:
        # the transformed schedule itself, probed by scan (frames refuse it)
        tt = np.tan(THETA)

        def sampler(s):
            t = s * TAU
            amp = 0.5 * W0 * tt * np.sin(r * W0 * t)
            return amp * np.array(
                [[0, np.exp(1j * r * W0 * t)], [np.exp(-1j * r * W0 * t), 0]]
            )

        got = scan_min_gap(Schedule(TAU, sampler), n_points=4001)
        assert got == pytest.approx(0.0, abs=1e-6 * W0)
        assert want == 0.0
    else:
        kit = oscillating_noninertial(W0, THETA, r * W0, TAU, n_points=2001)
        got = 2.0 * np.min(kit.frame.energies[:, 1])
        assert got == pytest.approx(want, rel=1e-6)


# ---------------------------------------------------------------------------
# frame-equivalence checks


def test_theorem1_oscillating_verdicts():
    ok = theorem1_check(oscillating(W0, THETA, 0.1 * W0, TAU, n_points=801), n_points=801)
    assert ok["satisfied"] and ok["max_deviation"] < 0.02
    bad = theorem1_check(oscillating(W0, THETA, W0, TAU, n_points=801), n_points=801)
    assert not bad["satisfied"] and bad["max_deviation"] > 0.1


def test_theorem2_nmr_verdicts():
    ok = theorem2_check(nmr_kit(0.1, n_points=801), n_points=801)
    assert ok["satisfied"] and ok["max_deviation"] < 0.02
    bad = theorem2_check(nmr_kit(1.0, n_points=801), n_points=801)
    assert not bad["satisfied"] and bad["max_deviation"] > 0.1


def test_theorem2_verdict_matches_integration():
    """The propagator-based drift equals the integrated population drift."""
    for r in (0.1, 1.0):
        kit = nmr_kit(r, n_points=801)
        res = theorem2_check(kit, n_points=801)
        traj = evolve_unitary(kit.schedule, kit.frame.vectors[0][:, 0], 4000)
        p_trans = np.abs(
            np.array(
                [
                    np.vdot(kit.frame.vectors[-1][:, 1], traj.final),
                ]
            )
        ) ** 2
        # adiabatic <=> negligible final transition probability
        assert (p_trans[0] < 0.02**2) == res["satisfied"]


def test_theorem2_rejects_drifting_transformed_hamiltonian():
    kit = oscillating(W0, THETA, 0.5 * W0, TAU, n_points=801)
    with pytest.raises(ValueError, match="not constant"):
        theorem2_check(kit, n_points=801)


def test_theorem_checks_need_frame_map():
    kit = nmr_rotating_frame(W0, W1, 0.5 * W0, TAU, n_points=801)
    with pytest.raises(ValueError, match="frame map"):
        theorem1_check(kit, n_points=801)
    with pytest.raises(ValueError, match="frame map"):
        theorem2_check(kit, n_points=801)


def test_rotating_frame_companion_is_static_and_resonance_guarded():
    kit = nmr_rotating_frame(W0, W1, 0.5 * W0, TAU, n_points=801)
    h0 = np.asarray(kit.schedule.at(0.0))
    h1 = np.asarray(kit.schedule.at(0.9))
    assert np.max(np.abs(h0 - h1)) == 0.0
    with pytest.raises(ValueError, match="resonance"):
        nmr_rotating_frame(W0, 0.0, W0, TAU)


def test_survival_probability_closed_form_vs_integration():
    """Bare-state survival under the rotating drive, five drive ratios."""
    for r in (0.1, 0.5, 1.0, 2.0, 3.0):
        w = r * W0
        tau = TAU

        def sampler(s, w=w):
            t = s * tau
            return 0.5 * W0 * np.array(
                [
                    [1.0, np.tan(THETA) * np.exp(-1j * w * t)],
                    [np.tan(THETA) * np.exp(1j * w * t), -1.0],
                ]
            )

        traj = evolve_unitary(Schedule(tau, sampler), np.array([1.0, 0.0]), 1000)
        got = np.abs(traj.states[:, 0]) ** 2
        want = nmr_closed_form_p0(W0, W1, w, traj.times)
        assert np.max(np.abs(got - want)) < 1e-6
