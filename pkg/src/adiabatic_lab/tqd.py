"""Transitionless driving: counter-diabatic schedules, phase freedoms,
field-cost scenarios, gate constructions, and a pulse-program compiler.

A driving Hamiltonian built from a tracked frame reproduces the frame's
eigenstates exactly at any speed, carrying per-level phases chosen by a
:class:`PhaseChoice`.  The adiabatic choice mimics slow driving, the
optimal choice zeroes every controllable phase and minimizes the
Hilbert-Schmidt field cost.

All frequencies are rad/s with hbar = 1 except where a parameter name
says ``_hz``; those are plain Hz at the lab boundary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .dynamics import Schedule, evolve_unitary, pure_state_density
from .opalg import dagger
from .spectral import SpectralFrame, fourth_order_derivative, frame_from_functions

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)

HERMITICITY_TOL = 1e-8
PHASE_IMAG_TOL = 1e-8


# ---------------------------------------------------------------------------
# phase freedoms and driving schedules


@dataclass(eq=False)
class PhaseChoice:
    """Per-level phase rates theta_n(s) on a frame grid, in rad/s."""

    theta: np.ndarray  # (M, d) real
    name: str = "custom"

    def __post_init__(self) -> None:
        self.theta = np.asarray(self.theta, dtype=float)


def adiabatic_phases(frame: SpectralFrame) -> PhaseChoice:
    """Phase rates that mimic slow driving: -E_n plus the connection term
    i <E_n|dE_n/dt>."""
    m, d = frame.energies.shape
    theta = np.empty((m, d))
    for n in range(d):
        conn = 1j * frame.connection(n, n)
        _assert_real(conn, "adiabatic phase")
        theta[:, n] = -frame.energies[:, n] + np.real(conn)
    return PhaseChoice(theta, name="adiabatic")


def optimal_phases(frame: SpectralFrame) -> PhaseChoice:
    """Minimal-field phase rates theta_n = i <E_n|dE_n/dt>; in a
    parallel-transport gauge these vanish identically."""
    m, d = frame.energies.shape
    theta = np.empty((m, d))
    for n in range(d):
        conn = 1j * frame.connection(n, n)
        _assert_real(conn, "optimal phase")
        theta[:, n] = np.real(conn)
    return PhaseChoice(theta, name="optimal")


def constant_phases(frame: SpectralFrame, values: Sequence[float]) -> PhaseChoice:
    values = np.asarray(values, dtype=float)
    theta = np.broadcast_to(values, (len(frame.grid), values.shape[0])).copy()
    return PhaseChoice(theta, name="constant")


def _assert_real(series: np.ndarray, label: str) -> None:
    worst = float(np.max(np.abs(np.imag(series))))
    scale = max(1.0, float(np.max(np.abs(series))))
    if worst > PHASE_IMAG_TOL * scale:
        raise AssertionError(f"{label} has imaginary residual {worst:.2e}")


def matrix_series_schedule(grid: np.ndarray, tau: float, mats: np.ndarray) -> Schedule:
    """Schedule over a precomputed matrix series.

    Samples exactly at grid nodes when s lands on one (within 1e-6 of a
    node index) and interpolates linearly otherwise.  Fixed-step
    integrators whose nodes and midpoints coincide with the grid therefore
    see the series without interpolation error.
    """
    m = len(grid)

    def sampler(s: float) -> np.ndarray:
        x = s * (m - 1)
        k = int(round(x))
        if abs(x - k) < 1e-6:
            return mats[min(max(k, 0), m - 1)]
        lo = min(max(int(math.floor(x)), 0), m - 2)
        w = x - lo
        return (1.0 - w) * mats[lo] + w * mats[lo + 1]

    return Schedule(tau=tau, sampler=sampler)


def generalized_tqd(frame: SpectralFrame, phases: PhaseChoice) -> Schedule:
    """Driving schedule that follows the frame's eigenstates exactly while
    each level accumulates exp(i int theta_n dt).

    H(t) = i sum_n |dE_n/dt><E_n|  -  sum_n theta_n |E_n><E_n|,
    Hermitized with an asserted residual below 1e-8 of its scale.
    """
    m, d = frame.energies.shape
    if phases.theta.shape != (m, d):
        raise ValueError("phase array does not match the frame grid")
    mats = np.empty((m, d, d), dtype=complex)
    for k in range(m):
        v, dv = frame.vectors[k], frame.dvectors[k]
        h = 1j * (dv @ dagger(v)) - (v * phases.theta[k][None, :]) @ dagger(v)
        asym = float(np.max(np.abs(h - dagger(h))))
        scale = max(1.0, float(np.max(np.abs(h))))
        if asym > HERMITICITY_TOL * scale:
            raise AssertionError(
                f"driving Hamiltonian asymmetry {asym:.2e} at node {k}; "
                "frame derivatives are too noisy"
            )
        mats[k] = 0.5 * (h + dagger(h))
    return matrix_series_schedule(frame.grid, frame.tau, mats)


def standard_tqd(frame: SpectralFrame) -> Schedule:
    """Driving schedule with adiabatic phases: the frame Hamiltonian plus
    its counter-diabatic correction."""
    return generalized_tqd(frame, adiabatic_phases(frame))


def counter_diabatic_term(frame: SpectralFrame) -> Schedule:
    """The bare gauge-invariant correction (optimal phases): this is the
    whole driving field of the minimal-cost protocol."""
    return generalized_tqd(frame, optimal_phases(frame))


def energy_cost_sigma(h: Schedule, n_quad: int = 801) -> float:
    """Mean Hilbert-Schmidt field size (1/tau) int sqrt(Tr H^2) dt."""
    grid = np.linspace(0.0, 1.0, n_quad)
    vals = np.empty(n_quad)
    for k, s in enumerate(grid):
        ham = np.asarray(h.at(s), dtype=complex)
        vals[k] = math.sqrt(max(float(np.real(np.trace(ham @ ham))), 0.0))
    return float(trapezoid(vals, grid))


def tqd_time_independence(frame: SpectralFrame, phases: PhaseChoice) -> dict:
    """Premise and conclusion of the constant-driving criterion.

    When every connection <E_k|dE_m/dt> is constant in time, constant
    phase rates give a time-independent driving Hamiltonian.  Returns the
    largest connection drift and the largest driving-field drift, both
    relative to their initial scale.
    """
    d = frame.n_levels
    conn0 = np.array([[frame.connection(k, n)[0] for n in range(d)] for k in range(d)])
    drift = 0.0
    for k in range(d):
        for n in range(d):
            series = frame.connection(k, n)
            drift = max(drift, float(np.max(np.abs(series - conn0[k, n]))))
    conn_scale = max(float(np.max(np.abs(conn0))), 1e-300)

    sched = generalized_tqd(frame, phases)
    h0 = np.asarray(sched.at(0.0))
    h_scale = max(float(np.max(np.abs(h0))), 1e-300)
    h_drift = 0.0
    for s in frame.grid:
        h_drift = max(h_drift, float(np.max(np.abs(np.asarray(sched.at(s)) - h0))))
    return {
        "connection_drift": drift / conn_scale,
        "field_drift": h_drift / h_scale,
    }


# ---------------------------------------------------------------------------
# avoided-crossing sweep scenario


def lz_schedules(
    delta: float,
    theta_fn: Callable[[float], float],
    tau: float,
    n_points: int = 801,
    theta_dot_fn: Callable[[float], float] | None = None,
) -> dict:
    """Two-level avoided-crossing sweep H0 = delta (sigma_z + tan(theta(s))
    sigma_x) and its driving variants.

    Returns schedules {"h0", "standard", "optimal"} plus the closed-form
    frame.  The optimal variant is the bare correction
    (d theta/ds / (2 tau)) sigma_y, time independent for a linear sweep.
    """
    if delta == 0.0:
        raise ValueError("delta must be nonzero")

    def tdot(s: float) -> float:
        if theta_dot_fn is not None:
            return theta_dot_fn(s)
        h = 1e-6
        lo, hi = max(0.0, s - h), min(1.0, s + h)
        return (theta_fn(hi) - theta_fn(lo)) / (hi - lo)

    def h0_sampler(s: float) -> np.ndarray:
        th = theta_fn(s)
        if abs(math.cos(th)) < 1e-9:
            raise ValueError(f"sweep angle reaches pi/2 at s={s:.4f}; field diverges")
        return delta * (SIGMA_Z + math.tan(th) * SIGMA_X)

    def cd_sampler(s: float) -> np.ndarray:
        return (tdot(s) / (2.0 * tau)) * SIGMA_Y

    def std_sampler(s: float) -> np.ndarray:
        return h0_sampler(s) + cd_sampler(s)

    def energy_fn(s: float) -> np.ndarray:
        e = abs(delta) / abs(math.cos(theta_fn(s)))
        return np.array([-e, e])

    def vector_fn(s: float) -> np.ndarray:
        half = 0.5 * theta_fn(s)
        return np.array(
            [[-math.sin(half), math.cos(half)], [math.cos(half), math.sin(half)]],
            dtype=complex,
        )

    def dvector_fn(s: float) -> np.ndarray:
        half = 0.5 * theta_fn(s)
        rate = 0.5 * tdot(s) / tau
        return rate * np.array(
            [[-math.cos(half), -math.sin(half)], [-math.sin(half), math.cos(half)]],
            dtype=complex,
        )

    frame = frame_from_functions(tau, n_points, energy_fn, vector_fn, dvector_fn)
    return {
        "h0": Schedule(tau, h0_sampler),
        "standard": Schedule(tau, std_sampler),
        "optimal": Schedule(tau, cd_sampler),
        "frame": frame,
    }


def lz_intensities(
    theta_fn: Callable[[float], float],
    delta: float,
    tau: float,
    n_quad: int = 2001,
) -> dict:
    """Relative field intensities of the avoided-crossing sweep variants.

    Normalized so the bare sweep has unit intensity:
    i_opt = int |theta'|^2 ds / (4 tau^2 delta^2 int tan^2 theta ds) and
    i_std = 1 + i_opt.  ``tau_b`` is the duration where the correction
    intensity matches the bare one, sqrt(int |theta'|^2 / int tan^2) /
    (2 |delta|).
    """
    grid = np.linspace(0.0, 1.0, n_quad)
    theta = np.array([theta_fn(s) for s in grid])
    if np.any(np.abs(np.cos(theta)) < 1e-9):
        raise ValueError("sweep angle reaches pi/2; intensity integral diverges")
    tan2 = np.tan(theta) ** 2
    dtheta = fourth_order_derivative(theta, grid[1] - grid[0])
    int_tan2 = float(trapezoid(tan2, grid))
    int_dth2 = float(trapezoid(dtheta**2, grid))
    if int_tan2 <= 0.0:
        raise ValueError("bare sweep intensity vanishes; nothing to normalize by")
    i_opt = int_dth2 / (4.0 * tau**2 * delta**2 * int_tan2)
    return {
        "i0": 1.0,
        "i_opt": i_opt,
        "i_std": 1.0 + i_opt,
        "tau_b": math.sqrt(int_dth2 / int_tan2) / (2.0 * abs(delta)),
        "int_tan2": int_tan2,
        "int_dtheta2": int_dth2,
    }


# ---------------------------------------------------------------------------
# rotating-field cost comparison


def nmr_field_ratio(omega0: float, omega1: float, omega: float) -> float:
    """Amplitude ratio of the bare rotating-field drive to the minimal
    correction field: (omega0^2 + omega1^2) / (omega1 omega).

    A vanishing denominator (static or transverse-free drive) is returned
    as infinity with a warning rather than raised, since the divergence is
    the physically meaningful answer.
    """
    denom = omega1 * omega
    if denom == 0.0:
        warnings.warn("correction field vanishes; ratio diverges", RuntimeWarning)
        return math.inf
    return (omega0**2 + omega1**2) / denom


def bloch_field(h: np.ndarray) -> np.ndarray:
    """Components (bx, by, bz) of a traceless qubit Hamiltonian
    H = (1/2) b . sigma."""
    h = np.asarray(h, dtype=complex)
    return np.array(
        [
            float(np.real(np.trace(h @ SIGMA_X))),
            float(np.real(np.trace(h @ SIGMA_Y))),
            float(np.real(np.trace(h @ SIGMA_Z))),
        ]
    )


def nmr_tqd_field_norms(omega0: float, omega1: float, omega: float) -> dict:
    """Closed-form field magnitudes of the rotating-drive qubit protocols.

    All three are time independent: the bare field, the bare-plus-
    correction field (orthogonal contributions), and the minimal
    correction alone.
    """
    b0 = math.hypot(omega0, omega1)
    alpha = math.atan2(omega1, omega0)
    b_opt = abs(omega) * math.sin(alpha)
    return {
        "b0": b0,
        "b_opt": b_opt,
        "b_std": math.hypot(b0, b_opt),
        "ratio": nmr_field_ratio(omega0, omega1, omega) if omega1 * omega != 0 else math.inf,
    }


# ---------------------------------------------------------------------------
# measurement-steered gates


def _projector_pair(axis: Sequence[float]) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    axis = np.asarray(axis, dtype=float)
    if axis.shape != (3,):
        raise ValueError("gate axis must be a 3-vector")
    norm = float(np.linalg.norm(axis))
    if norm < 1e-12:
        raise ValueError("gate axis must be nonzero")
    nx, ny, nz = axis / norm
    eps = math.acos(max(-1.0, min(1.0, nz)))
    delta = math.atan2(ny, nx)
    n_plus = np.array([math.cos(0.5 * eps), np.exp(1j * delta) * math.sin(0.5 * eps)])
    n_minus = np.array([-math.sin(0.5 * eps), np.exp(1j * delta) * math.cos(0.5 * eps)])
    return n_plus, n_minus, pure_state_density(n_plus), pure_state_density(n_minus)


def gate_target_unitary(axis: Sequence[float], phi: float) -> np.ndarray:
    """The rotation the steered protocol implements on its register:
    |n+><n+| + e^{i phi} |n-><n-|."""
    _, _, p_plus, p_minus = _projector_pair(axis)
    return p_plus + np.exp(1j * phi) * p_minus


def _ancilla_ham(xi: float, omega: float, phi0: float) -> Callable[[float], np.ndarray]:
    def sampler(s: float) -> np.ndarray:
        sweep = phi0 * s
        return -omega * (
            math.cos(sweep) * SIGMA_Z
            + math.sin(sweep) * (math.cos(xi) * SIGMA_X + math.sin(xi) * SIGMA_Y)
        )

    return sampler


def _ancilla_cd(xi: float, phi0: float, tau: float) -> np.ndarray:
    return (0.5 * phi0 / tau) * (math.cos(xi) * SIGMA_Y - math.sin(xi) * SIGMA_X)


def controlled_gate_schedule(
    axis: Sequence[float],
    phi: float,
    phi0: float,
    omega: float,
    tau: float,
    variant: str = "adiabatic",
    controlled: bool = False,
) -> Schedule:
    """Ancilla-steered rotation gate about ``axis`` by angle ``phi``.

    The register is projected onto the axis eigenstates; each branch drags
    an ancilla from its ground state through a sweep of angle ``phi0``,
    imprinting the branch phase on the ancilla's excited component.
    Variants: "adiabatic" (bare sweep, needs slow tau), "standard" (sweep
    plus correction), "optimal" (correction only, exact at any speed and
    time independent).  With ``controlled`` a further qubit gates the
    rotation: the branch Hamiltonian acts only in its excited subspace.
    """
    if variant not in ("adiabatic", "standard", "optimal"):
        raise ValueError(f"unknown variant {variant!r}")
    _, _, p_plus, p_minus = _projector_pair(axis)
    h_plus = _ancilla_ham(0.0, omega, phi0)
    h_minus = _ancilla_ham(phi, omega, phi0)
    cd_plus = _ancilla_cd(0.0, phi0, tau)
    cd_minus = _ancilla_cd(phi, phi0, tau)

    def branch(s: float, base: Callable[[float], np.ndarray], cd: np.ndarray) -> np.ndarray:
        if variant == "adiabatic":
            return base(s)
        if variant == "standard":
            return base(s) + cd
        return cd

    def sampler(s: float) -> np.ndarray:
        h = np.kron(p_plus, branch(s, h_plus, cd_plus)) + np.kron(
            p_minus, branch(s, h_minus, cd_minus)
        )
        if controlled:
            off = branch(s, h_plus, cd_plus)
            return np.kron(np.diag([1.0, 0.0]), np.kron(ID2, off)) + np.kron(
                np.diag([0.0, 1.0]), h
            )
        return h

    return Schedule(tau=tau, sampler=sampler)


def gate_run(
    schedule: Schedule,
    register_state: np.ndarray,
    axis: Sequence[float],
    phi: float,
    n_steps: int,
    controlled: bool = False,
) -> dict:
    """Run a steered-gate schedule and post-select the flagged branch.

    The ancilla starts in its ground state |0>; at the end the component
    with the ancilla flipped carries the rotated register.  Success below
    1e-12 (no sweep, phi0 = 0) is refused since the post-selected state
    is then undefined.
    """
    register_state = np.asarray(register_state, dtype=complex)
    register_state = register_state / np.linalg.norm(register_state)
    psi0 = np.kron(register_state, np.array([1.0, 0.0], dtype=complex))
    traj = evolve_unitary(schedule, psi0, n_steps)
    final = traj.final.reshape(-1, 2)
    branch = final[:, 1]
    success = float(np.real(np.vdot(branch, branch)))
    if success < 1e-12:
        raise ValueError("post-selected branch has no weight")
    out = branch / math.sqrt(success)

    u_rot = gate_target_unitary(axis, phi)
    if controlled:
        u_rot = np.kron(np.diag([1.0, 0.0]), ID2) + np.kron(np.diag([0.0, 1.0]), u_rot)
    expected = u_rot @ register_state
    fid = float(abs(np.vdot(expected, out)) ** 2)
    return {
        "success_prob": success,
        "output": out,
        "target": expected,
        "fidelity": fid,
        "trajectory": traj,
    }


# ---------------------------------------------------------------------------
# two-spin phase-gate forms and the pulse-program compiler


def phase_gate_schedule(nu_hz: float, tau: float, variant: str) -> Schedule:
    """Two-spin form of the steered z rotation used by the compiler.

    H0(s) = -2 pi nu [cos(pi s) 1 x sigma_z + sin(pi s) sigma_z x sigma_x];
    "standard" adds (pi / 2 tau) sigma_z x sigma_y, "optimal" keeps only
    that correction.
    """
    if variant not in ("adiabatic", "standard", "optimal"):
        raise ValueError(f"unknown variant {variant!r}")
    w = 2.0 * math.pi * nu_hz
    zz_x = np.kron(SIGMA_Z, SIGMA_X)
    one_z = np.kron(ID2, SIGMA_Z)
    correction = (0.5 * math.pi / tau) * np.kron(SIGMA_Z, SIGMA_Y)

    def sampler(s: float) -> np.ndarray:
        base = -w * (math.cos(math.pi * s) * one_z + math.sin(math.pi * s) * zz_x)
        if variant == "adiabatic":
            return base
        if variant == "standard":
            return base + correction
        return correction

    return Schedule(tau=tau, sampler=sampler)


@dataclass(eq=False)
class PulseSequence:
    """A compiled program of in-plane rotations and scalar-coupling delays.

    ``items`` is a tuple of ("ROT", spin, theta, phi) and ("FREE", dt)
    entries in execution order.  Rotations are
    exp[-i (theta/2)(cos(phi) sigma_x + sin(phi) sigma_y)] on the named
    spin (1 or 2); a delay evolves exp[-i (pi J / 2) dt sigma_z sigma_z]
    with J in Hz.  ``energy_units`` counts rotations, the pulse-energy
    bookkeeping unit.
    """

    variant: str
    n_blocks: int
    tau: float
    nu_hz: float
    j_hz: float
    items: tuple

    @property
    def n_rotations(self) -> int:
        return sum(1 for it in self.items if it[0] == "ROT")

    @property
    def n_free(self) -> int:
        return sum(1 for it in self.items if it[0] == "FREE")

    @property
    def energy_units(self) -> int:
        return self.n_rotations

    @property
    def total_delay(self) -> float:
        return float(sum(it[1] for it in self.items if it[0] == "FREE"))


def _rot(spin: int, theta: float, phi: float) -> tuple:
    # canonical form: non-negative angle, axis phase wrapped to (-pi, pi]
    if theta < 0:
        theta, phi = -theta, phi + math.pi
    phi = math.remainder(phi, 2.0 * math.pi)
    return ("ROT", spin, float(theta), float(phi))


def compile_pulse_sequence(
    variant: str,
    n_blocks: int,
    tau: float,
    nu_hz: float,
    j_hz: float,
) -> PulseSequence:
    """Compile the phase-gate evolution into rotations and delays.

    adiabatic: a basis-opening pulse, n_blocks symmetric Trotter blocks
    of [half x-pulse, coupling delay, half x-pulse], and a closing pulse;
    2 (n_blocks + 1) rotations.  The opening pulse turns the coupling
    term into plain sigma_z sigma_z evolution whose required phase is
    non-negative throughout the sweep, so every delay is realizable.

    standard: n_blocks first-order blocks in the lab basis; per block a
    two-pulse conjugated delay implements the combined coupling-plus-
    correction term (its in-plane axis absorbs both components) and a
    three-pulse composite implements the single-spin z term; 5 n_blocks
    rotations.

    optimal: the correction alone is a fixed two-spin rotation; one echo
    delay pair of total length tau with difference 1/J realizes it with
    3 rotations.  Durations that cannot fit the echo (tau < 1/J) are
    refused.
    """
    if variant not in ("adiabatic", "standard", "optimal"):
        raise ValueError(f"unknown variant {variant!r}")
    if tau <= 0 or j_hz <= 0:
        raise ValueError("tau and j_hz must be positive")
    items: list = []
    w = 2.0 * math.pi * nu_hz

    if variant == "optimal":
        dt1 = (j_hz * tau + 1.0) / (2.0 * j_hz)
        dt2 = tau - dt1
        if dt2 < 0:
            raise ValueError(
                f"echo delay 2 is negative ({dt2:.3e} s): tau must be at least 1/J"
            )
        items.append(_rot(2, 0.5 * math.pi, 0.0))
        items.append(("FREE", dt1))
        items.append(_rot(2, math.pi, 0.0))
        items.append(("FREE", dt2))
        items.append(_rot(2, 0.5 * math.pi, 0.0))
        return PulseSequence(variant, 0, tau, nu_hz, j_hz, tuple(items))

    if n_blocks < 1:
        raise ValueError("n_blocks must be at least 1")
    dt = tau / n_blocks
    mids = (np.arange(n_blocks) + 0.5) * dt

    if variant == "adiabatic":
        items.append(_rot(2, 0.5 * math.pi, 0.5 * math.pi))  # open: z <-> x basis
        for n, t_n in enumerate(mids):
            c = -w * math.cos(math.pi * t_n / tau)
            d_free = (4.0 * nu_hz / j_hz) * math.sin(math.pi * t_n / tau) * dt
            if d_free < -1e-15:
                raise ValueError(f"negative delay in block {n + 1}")
            items.append(_rot(2, c * dt, 0.0))
            items.append(("FREE", max(d_free, 0.0)))
            items.append(_rot(2, c * dt, 0.0))
        items.append(_rot(2, 0.5 * math.pi, -0.5 * math.pi))  # close
        return PulseSequence(variant, n_blocks, tau, nu_hz, j_hz, tuple(items))

    # standard
    k_corr = 0.5 * math.pi / tau
    for n, t_n in enumerate(mids):
        a = -w * math.cos(math.pi * t_n / tau)
        b = -w * math.sin(math.pi * t_n / tau)
        v_norm = math.hypot(b, k_corr)
        phi_v = math.atan2(k_corr, b)
        d_free = 2.0 * v_norm * dt / (math.pi * j_hz)
        if d_free < 0:
            raise ValueError(f"negative delay in block {n + 1}")
        # conjugated delay: exp(-i dt sigma_z (b sx + k sy))
        items.append(_rot(2, 0.5 * math.pi, phi_v + 1.5 * math.pi))
        items.append(("FREE", d_free))
        items.append(_rot(2, 0.5 * math.pi, phi_v + 0.5 * math.pi))
        # z composite: exp(-i dt a 1 x sigma_z), zeta = 2 a dt
        zeta = 2.0 * a * dt
        items.append(_rot(2, 0.5 * math.pi, math.pi))
        items.append(_rot(2, zeta, 0.5 * math.pi))
        items.append(_rot(2, 0.5 * math.pi, 0.0))
    return PulseSequence(variant, n_blocks, tau, nu_hz, j_hz, tuple(items))


def _rotation_matrix(theta: float, phi: float) -> np.ndarray:
    axis = math.cos(phi) * SIGMA_X + math.sin(phi) * SIGMA_Y
    return (
        math.cos(0.5 * theta) * ID2 - 1j * math.sin(0.5 * theta) * axis
    )


def pulse_sequence_unitary(seq: PulseSequence) -> np.ndarray:
    """The exact two-spin unitary of a compiled program."""
    u = np.eye(4, dtype=complex)
    zz = np.kron(SIGMA_Z, SIGMA_Z)
    for item in seq.items:
        if item[0] == "ROT":
            _, spin, theta, phi = item
            r = _rotation_matrix(theta, phi)
            step = np.kron(r, ID2) if spin == 1 else np.kron(ID2, r)
        else:
            phase = 0.5 * math.pi * seq.j_hz * item[1]
            step = np.diag(np.exp(-1j * phase * np.diag(zz)))
        u = step @ u
    return u


def serialize_pulse_sequence(seq: PulseSequence) -> str:
    lines = [
        "# pulse-program v1",
        (
            f"# variant={seq.variant} n_blocks={seq.n_blocks} tau={seq.tau!r} "
            f"nu_hz={seq.nu_hz!r} j_hz={seq.j_hz!r}"
        ),
        (
            f"# rotations={seq.n_rotations} free_intervals={seq.n_free} "
            f"energy_units={seq.energy_units}"
        ),
    ]
    for item in seq.items:
        if item[0] == "ROT":
            _, spin, theta, phi = item
            lines.append(f"ROT {spin} {theta!r} {phi!r}")
        else:
            lines.append(f"FREE {item[1]!r}")
    return "\n".join(lines) + "\n"


def parse_pulse_sequence(text: str) -> PulseSequence:
    """Inverse of :func:`serialize_pulse_sequence`."""
    meta: dict = {}
    items: list = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                if "=" in token:
                    key, val = token.split("=", 1)
                    meta[key] = val
            continue
        parts = line.split()
        if parts[0] == "ROT":
            items.append(("ROT", int(parts[1]), float(parts[2]), float(parts[3])))
        elif parts[0] == "FREE":
            items.append(("FREE", float(parts[1])))
        else:
            raise ValueError(f"unknown program line {line!r}")
    return PulseSequence(
        variant=meta.get("variant", "unknown"),
        n_blocks=int(meta.get("n_blocks", 0)),
        tau=float(meta.get("tau", 0.0)),
        nu_hz=float(meta.get("nu_hz", 0.0)),
        j_hz=float(meta.get("j_hz", 0.0)),
        items=tuple(items),
    )
