"""Nonlinear storage/recall dynamics of the Raman-reduced Bloch system.

The strong-field solver evolves the scaled field together with the full
per-node ground-state Bloch variables.  With the stage sign s_nu = +1 for
storage and -1 for retrieval, c_j = 1 / (1 + d31_j / Delta) the one-photon
denominator factor, and B_mn = sum_j w_j c_j r_mn_j, the system is

    dZ zeta    = (i beta/2) (s_nu B11 zeta / Delta + f(tau) B12)
    dtau r12_j = +i s_nu c_j zeta (2 r11_j - 1)
                 - i [d21_j - Delta c_j f(tau) + Delta c_j |zeta|^2/|Omega|^2] r12_j
    dtau r11_j = -2 s_nu c_j Im(conj(zeta) r12_j)

The detuning bracket reads the static two-photon shift d21_j alongside
the control light shift -Delta c_j f and the probe light shift written in
regular form |g A|^2 / (Delta + d31) = Delta c_j |zeta|^2 / |Omega|^2.
The linearized solver's composite rate d21 + d31 f is the first order of
d21 - Delta c_j f once the common Stark rotation Delta f is factored off.

Unlike the linear module this one works in bare variables: the input
boundary carries the physical control-induced chirp exp(+i psi), and the
stepper rotates the full per-node bracket d21 - Delta c_j f out exactly
(Simpson-integrated control phases), so the fast common phase cancels
between the field and the rotation and the Runge-Kutta stages only see
the slow node-spread rates.  The field is re-solved across the slab at
every Runge-Kutta stage by an integrating-factor quadrature, keeping the
coupled step 4th order.  Storage integrates the field from the input
face Z = 0; retrieval from a zero boundary at Z = L, emitting backward.
All node/Z updates are whole-array operations with a fixed reduction
order, so repeated runs are bit-identical.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .conditions import ProtocolConfig
from .core import (
    ControlProfile,
    EnsembleSpec,
    Grid,
    MediumSpec,
    ProbeSpec,
    SUPPORT_FLOOR,
    WEAK_AMPLITUDE_RATIO,
)
from .errors import (
    ConditionsUnmet,
    ControlVanishes,
    IncompleteAbsorptionWarning,
    NonFiniteField,
    PhysicalityViolation,
    ResonantSingularity,
    ValidationError,
)
from .numerics import cumulative_integral, simpson_increments
from .records import EchoRecord, envelope_from_scaled

# Bloch-sphere slack |r12|^2 <= r11 (1 - r11) + BLOCH_EPS guaranteed on the
# state after every step; excursions beyond BLOCH_EMERGENCY mean the step
# went unstable rather than accumulated truncation, and raise
BLOCH_EPS = 1.0e-8
BLOCH_EMERGENCY = 1.0e-3

# |Omega|^2 below this fraction of its peak counts as control-off for the
# probe Stark ratio; a live field there is a ControlVanishes error
CONTROL_FLOOR = 1.0e-12
FIELD_FLOOR = 1.0e-9

# transmitted-energy fraction above which the complete-absorption premise
# of the recall analysis is flagged
ABSORPTION_WARNING_FRACTION = 0.05


def _c_factors(ensemble: EnsembleSpec, one_photon_detuning: float
               ) -> np.ndarray:
    """Per-node denominator factor 1 / (1 + d31 / Delta)."""
    denom = 1.0 + ensemble.delta31s / one_photon_detuning
    if np.any(np.abs(denom) < 1e-6):
        raise ResonantSingularity(
            "Delta + d31 vanished for a node; the adiabatic reduction is "
            "invalid there")
    return 1.0 / denom


@dataclass(frozen=True)
class KernelAccumulator:
    """Ensemble kernels B11, B12 at every Z with explicit partials.

    partials_mn[j] is node j's weighted contribution w_j c_j r_mn_j(Z);
    the reductions run in fixed node order (numpy pairwise over axis 0),
    so repeated evaluation is bit-identical and cannot pick up an
    order-dependent rounding spread.
    """

    partials_11: np.ndarray     # (n_node, n_z) real
    partials_12: np.ndarray     # (n_node, n_z) complex

    @classmethod
    def build(cls, ensemble: EnsembleSpec, c_factors: np.ndarray,
              r12: np.ndarray, r11: np.ndarray) -> "KernelAccumulator":
        wc = (ensemble.weights * c_factors)[:, None]
        return cls(partials_11=wc * r11, partials_12=wc * r12)

    @property
    def b11(self) -> np.ndarray:
        return np.add.reduce(self.partials_11, axis=0)

    @property
    def b12(self) -> np.ndarray:
        return np.add.reduce(self.partials_12, axis=0)


@dataclass
class SimulationState:
    """Evolving strong-field state on one stage grid.

    zeta_t rows fill as the clock advances; r12/r11 are the current
    coherence and ground population per (node, Z).  accumulated_psi is
    the running control Stark phase Delta * int f and zeta_scale the
    largest field magnitude seen so far (the reference for control-off
    field checks).
    """

    zeta_t: np.ndarray          # (n_tau, n_z) complex
    r12: np.ndarray             # (n_node, n_z) complex
    r11: np.ndarray             # (n_node, n_z) real
    stage: str                  # "storage" | "retrieval"
    clock: float
    step_index: int
    z: np.ndarray
    c_factors: np.ndarray       # (n_node,)
    boundary: Callable          # (tau, psi) -> incoming scaled field
    f_integral: float = 0.0
    accumulated_psi: float = 0.0
    zeta_scale: float = 0.0

    @classmethod
    def fresh(cls, grid: Grid, ensemble: EnsembleSpec,
              one_photon_detuning: float, stage: str,
              boundary: Callable | None = None,
              r12_initial: np.ndarray | None = None,
              r11_initial: np.ndarray | None = None) -> "SimulationState":
        if stage not in ("storage", "retrieval"):
            raise ValidationError(f"unknown stage {stage!r}")
        shape = (ensemble.n_nodes, grid.n_z)
        r12 = (np.zeros(shape, dtype=complex) if r12_initial is None
               else np.array(r12_initial, dtype=complex))
        r11 = (np.ones(shape, dtype=float) if r11_initial is None
               else np.array(r11_initial, dtype=float))
        if r12.shape != shape or r11.shape != shape:
            raise ValidationError(
                f"initial atomic arrays must have shape {shape}")
        if boundary is None:
            boundary = lambda s, psi: 0.0 + 0.0j
        return cls(
            zeta_t=np.zeros((grid.n_tau, grid.n_z), dtype=complex),
            r12=r12, r11=r11, stage=stage, clock=0.0, step_index=0,
            z=grid.z(), c_factors=_c_factors(ensemble, one_photon_detuning),
            boundary=boundary)

    @property
    def stage_sign(self) -> int:
        return +1 if self.stage == "storage" else -1

    @property
    def dz(self) -> float:
        return float(self.z[1] - self.z[0])

    def assert_physical(self) -> None:
        """Restore the Bloch-ball bounds and raise if they truly broke.

        The lossless equations keep each node's Bloch vector
        (Re r12, Im r12, r11 - 1/2) on the sphere of radius 1/2 exactly,
        so an outward excursion is integrator truncation; Runge-Kutta
        steps at the validated rate bound can overshoot by a few parts
        in 1e7 near population turning points.  Such excursions are
        projected radially back onto the ball, which keeps 0 <= r11 <= 1
        and |r12|^2 <= r11 (1 - r11) + BLOCH_EPS invariant at any
        validated step size.  An excursion beyond BLOCH_EMERGENCY is not
        truncation-sized and raises instead of being hidden."""
        s_z = self.r11 - 0.5
        norm = np.sqrt(np.abs(self.r12) ** 2 + s_z ** 2)
        worst = float(norm.max()) - 0.5
        if not math.isfinite(worst) or worst > BLOCH_EMERGENCY:
            raise PhysicalityViolation(
                f"Bloch vector left the unit ball by {worst:.3g}")
        over = norm > 0.5
        if np.any(over):
            shrink = 0.5 / norm[over]
            self.r12[over] *= shrink
            self.r11[over] = 0.5 + s_z[over] * shrink
        np.clip(self.r11, 0.0, 1.0, out=self.r11)


def _solve_field_ode(a: np.ndarray, source: np.ndarray, dz: float,
                     boundary_value: complex) -> np.ndarray:
    """dZ zeta = a(Z) zeta + source(Z) with zeta[0] = boundary_value.

    Integrating-factor quadrature: both cumulative integrals are 4th
    order, and a purely imaginary a (the population-dispersion term)
    yields an exactly unimodular factor.
    """
    phi = np.exp(cumulative_integral(a, dz))
    inner = cumulative_integral(source / phi, dz)
    return phi * (boundary_value + inner)


def field_row(state: SimulationState, ensemble: EnsembleSpec,
              medium: MediumSpec, control: ControlProfile, s: float,
              psi: float, r12: np.ndarray, r11: np.ndarray) -> np.ndarray:
    """Scaled field across the slab at time s given the atomic arrays.

    Storage integrates from the input face Z = 0; retrieval from a zero
    boundary at the far face toward the exit at Z = 0 (the slab is
    flipped, solved forward, and flipped back).
    """
    kernels = KernelAccumulator.build(ensemble, state.c_factors, r12, r11)
    sgn = state.stage_sign
    beta = medium.coupling_beta
    a = (0.5j * beta * sgn / control.one_photon_detuning) * kernels.b11
    source = (0.5j * beta * float(control.f(s))) * kernels.b12
    if sgn > 0:
        row = _solve_field_ode(a, source, state.dz,
                               complex(state.boundary(s, psi)))
    else:
        rev = _solve_field_ode(-a[::-1], -source[::-1], state.dz,
                               complex(state.boundary(s, psi)))
        row = rev[::-1]
    if not np.all(np.isfinite(row)):
        raise NonFiniteField(f"field row non-finite at tau={s}")
    return row


def _stark_rates(state: SimulationState, control: ControlProfile, s: float,
                 row: np.ndarray, delta: float) -> np.ndarray:
    """Probe light shift Delta c_j |zeta|^2 / |Omega|^2 per (node, Z).

    The ratio equals the regular form |g A|^2 / (Delta + d31); with the
    control off a live field makes it singular, which is the
    ControlVanishes regime error.
    """
    om2 = float(np.abs(control.rabi(s)) ** 2)
    peak2 = control.peak_rabi() ** 2
    row_mag = float(np.max(np.abs(row)))
    if om2 <= CONTROL_FLOOR * peak2:
        if row_mag > FIELD_FLOOR * max(state.zeta_scale, 1e-300):
            raise ControlVanishes(
                f"|Omega(tau={s:.6g})| = 0 with |zeta| = {row_mag:.3g}; "
                "the probe Stark ratio is singular")
        return np.zeros((len(state.c_factors), row.shape[0]))
    return (delta * state.c_factors)[:, None] * \
        (np.abs(row) ** 2 / om2)[None, :]


def _lawson_step(state: SimulationState, ensemble: EnsembleSpec,
                 control: ControlProfile, dt: float,
                 row_fn: Callable) -> None:
    """One RK4 step in the frame co-rotating with d21 - Delta c_j f.

    The per-node bracket phase is Simpson-integrated and applied as an
    exact rotation; row_fn(u, psi, r12, r11) supplies the field row the
    slopes see at stage time u.  The drive and the probe Stark rate are
    the only terms the Runge-Kutta stages step.
    """
    s = state.clock
    delta = control.one_photon_detuning
    sgn = float(state.stage_sign)
    c = state.c_factors[:, None]
    d21 = ensemble.delta21s[:, None]

    df_half, df_full = simpson_increments(control.f, s, dt)
    rot_half = np.exp(-1j * (d21 * (0.5 * dt) - delta * c * float(df_half)))
    rot_full = np.exp(-1j * (d21 * dt - delta * c * float(df_full)))
    psi0 = state.accumulated_psi
    psi_half = psi0 + delta * float(df_half)
    psi_full = psi0 + delta * float(df_full)

    def slope(rot, p_st, n_st, u, psi):
        r12_st = rot * p_st
        row = row_fn(u, psi, r12_st, n_st)
        stark = _stark_rates(state, control, u, row, delta)
        kp = (1j * sgn) * c * row[None, :] * (2.0 * n_st - 1.0) / rot \
            - 1j * stark * p_st
        kn = -2.0 * sgn * c * (np.conj(row)[None, :] * r12_st).imag
        return kp, kn

    p, n = state.r12, state.r11
    one = np.ones_like(rot_half)
    k1p, k1n = slope(one, p, n, s, psi0)
    k2p, k2n = slope(rot_half, p + 0.5 * dt * k1p, n + 0.5 * dt * k1n,
                     s + 0.5 * dt, psi_half)
    k3p, k3n = slope(rot_half, p + 0.5 * dt * k2p, n + 0.5 * dt * k2n,
                     s + 0.5 * dt, psi_half)
    k4p, k4n = slope(rot_full, p + dt * k3p, n + dt * k3n, s + dt, psi_full)

    state.r12 = rot_full * (p + (dt / 6.0) * (k1p + 2.0 * k2p
                                              + 2.0 * k3p + k4p))
    state.r11 = n + (dt / 6.0) * (k1n + 2.0 * k2n + 2.0 * k3n + k4n)
    state.clock = s + dt
    state.step_index += 1
    state.f_integral += float(df_full)
    state.accumulated_psi = psi_full
    state.assert_physical()


def advance_field(state: SimulationState, ensemble: EnsembleSpec,
                  medium: MediumSpec, control: ControlProfile) -> np.ndarray:
    """Re-solve the field at the current clock from the current atoms.

    Records the row at the current step index and returns it.  Together
    with advance_atoms this is the plain operator-split step; the run
    drivers use the fully coupled advance_strong instead.
    """
    row = field_row(state, ensemble, medium, control, state.clock,
                    state.accumulated_psi, state.r12, state.r11)
    state.zeta_t[state.step_index] = row
    state.zeta_scale = max(state.zeta_scale, float(np.max(np.abs(row))))
    return row


def advance_atoms(state: SimulationState, ensemble: EnsembleSpec,
                  control: ControlProfile, dt: float) -> SimulationState:
    """One frozen-field atomic step: the row recorded at the current step
    index drives all four Runge-Kutta stages."""
    row = state.zeta_t[state.step_index]
    _lawson_step(state, ensemble, control, dt,
                 row_fn=lambda u, psi, r12, r11: row)
    state.zeta_scale = max(state.zeta_scale, float(np.max(np.abs(row))))
    return state


def advance_strong(state: SimulationState, ensemble: EnsembleSpec,
                   medium: MediumSpec, control: ControlProfile, dt: float
                   ) -> SimulationState:
    """One coupled step: the field is re-solved from the provisional
    atoms at every Runge-Kutta stage, then recorded at the new clock."""

    def row_fn(u, psi, r12, r11):
        return field_row(state, ensemble, medium, control, u, psi, r12, r11)

    _lawson_step(state, ensemble, control, dt, row_fn)
    if state.step_index < state.zeta_t.shape[0]:
        row = field_row(state, ensemble, medium, control, state.clock,
                        state.accumulated_psi, state.r12, state.r11)
        state.zeta_t[state.step_index] = row
        state.zeta_scale = max(state.zeta_scale,
                               float(np.max(np.abs(row))))
    return state


def probe_boundary(probe: ProbeSpec, control: ControlProfile) -> Callable:
    """Scaled input field at the entry face.

    The physical envelope is dressed by conj(Omega) and carries the
    control Stark chirp exp(+i psi), which keeps the probe centered on
    the shifted line while the control is on.
    """
    scale = WEAK_AMPLITUDE_RATIO * probe.amplitude_scale

    def boundary(s, psi):
        return (scale * np.conj(control.rabi(s)) * probe.envelope(s)
                * np.exp(1j * psi))

    return boundary


def excitation_profile(state: SimulationState, ensemble: EnsembleSpec
                       ) -> np.ndarray:
    """Ensemble excitation sum_j w_j (1 - r11_j) at every Z."""
    return ensemble.weights @ (1.0 - state.r11)


def _flux_weights(control: ControlProfile, medium: MediumSpec,
                  tau: np.ndarray) -> np.ndarray:
    """Photon-flux weight 2 / (beta f) where the control is on, else 0."""
    f_tau = np.asarray(control.f(tau), dtype=float)
    out = np.zeros_like(f_tau)
    on = f_tau > 1e-12 * max(control.peak_f(), 1e-300)
    out[on] = 2.0 / (medium.coupling_beta * f_tau[on])
    return out


def _validate_grid(grid: Grid, ensemble: EnsembleSpec,
                   control: ControlProfile, medium: MediumSpec,
                   drive_bound: float, bandwidth: float) -> None:
    # the stepper rotates out the full bracket, so the residual tau rate
    # is the node spread plus the state-dependent drive and Stark terms
    f_peak = control.peak_f()
    delta = abs(control.one_photon_detuning)
    c_max = float(np.max(np.abs(
        _c_factors(ensemble, control.one_photon_detuning))))
    stark_bound = delta * c_max * drive_bound ** 2 \
        / max(control.peak_rabi() ** 2, 1e-300)
    rate = float(np.max(np.abs(ensemble.delta21s))) \
        + float(np.max(np.abs(ensemble.delta31s))) * f_peak * c_max \
        + bandwidth + drive_bound * c_max + stark_bound
    coupling = 0.5 * medium.coupling_beta * c_max * (f_peak + 1.0 / delta)
    grid.validate(max_phase_rate=rate, max_coupling=coupling)


@dataclass
class StrongStorageOutcome:
    state: SimulationState
    tau: np.ndarray
    input_envelope: np.ndarray      # dressed physical envelope at Z = 0
    transmitted_fraction: float
    input_photons: float
    transmitted_photons: float
    stored_excitation: float
    audit_residual: float


def run_storage(probe: ProbeSpec, control: ControlProfile,
                ensemble: EnsembleSpec, medium: MediumSpec,
                grid: Grid) -> StrongStorageOutcome:
    """Drive the nonlinear storage stage and account for every photon.

    The photon flux 2 |zeta|^2 / (beta f) obeys an exact continuity law
    against the ensemble excitation, so input = transmitted + stored is
    a discretization audit, not a physics assumption.  A transmitted
    fraction above 5% triggers IncompleteAbsorptionWarning because the
    recall analysis presumes complete absorption.
    """
    tau = grid.tau()
    peak_zeta = WEAK_AMPLITUDE_RATIO * probe.amplitude_scale \
        * control.peak_rabi()
    _validate_grid(grid, ensemble, control, medium,
                   drive_bound=peak_zeta, bandwidth=probe.spectral_width)

    # the scaled field cannot represent probe light outside the control
    # window, where conj(Omega) vanishes
    env_all = np.abs(probe.sample(tau))
    env_peak = float(env_all.max())
    outside = (tau < control.switch_on) | (tau > control.switch_off)
    if env_peak > 0 and np.any(env_all[outside] > SUPPORT_FLOOR * env_peak):
        raise ValidationError(
            "probe support extends outside the control window")

    state = SimulationState.fresh(
        grid, ensemble, control.one_photon_detuning, stage="storage",
        boundary=probe_boundary(probe, control))
    state.zeta_scale = peak_zeta
    state.zeta_t[0] = field_row(state, ensemble, medium, control, 0.0, 0.0,
                                state.r12, state.r11)

    for _ in range(grid.n_tau - 1):
        advance_strong(state, ensemble, medium, control, grid.dt)

    flux = _flux_weights(control, medium, tau)
    input_photons = float(np.trapezoid(
        flux * np.abs(state.zeta_t[:, 0]) ** 2, tau))
    transmitted_photons = float(np.trapezoid(
        flux * np.abs(state.zeta_t[:, -1]) ** 2, tau))
    # 4th-order quadrature: the stored profile decays like exp(-alpha z)
    # and plain trapezoid error would dominate the audit at depth >~ 10
    stored = float(cumulative_integral(
        excitation_profile(state, ensemble), grid.dz)[-1])
    scale = max(input_photons, 1e-300)
    audit = abs(input_photons - transmitted_photons - stored) / scale
    transmitted = transmitted_photons / scale
    if transmitted > ABSORPTION_WARNING_FRACTION:
        warnings.warn(
            f"transmitted fraction {transmitted:.3g} exceeds "
            f"{ABSORPTION_WARNING_FRACTION}: the probe is not completely "
            "absorbed", IncompleteAbsorptionWarning)

    # Stark-dressed record (accumulated Stark phase removed): the raw
    # chirp runs at Delta f rad per unit, far beyond Nyquist on any grid
    # the solver needs, and the solver cancels it analytically anyway
    input_envelope = (WEAK_AMPLITUDE_RATIO * probe.amplitude_scale
                      * control.one_photon_detuning * probe.sample(tau))
    return StrongStorageOutcome(
        state=state, tau=tau, input_envelope=input_envelope,
        transmitted_fraction=transmitted, input_photons=input_photons,
        transmitted_photons=transmitted_photons, stored_excitation=stored,
        audit_residual=audit)


def handover_wavevector_mismatch(protocol: ProtocolConfig) -> float:
    """Residual grating wavevector q left by the mode-matching operation.

    q = (n1 w1 + n2 w2) / c - (K1z - K2z); the stored coherence maps into
    the retrieval frame as r12 exp(i q Z).  Without phase-matching data
    the operation is assumed ideal (q = 0); a backward-matched geometry
    gives q = 0 exactly.
    """
    m = protocol.matching
    if m is None:
        return 0.0
    return (m.n1 * m.omega1 + m.n2 * m.omega2) / m.light_speed \
        - (m.K1z - m.K2z)


def run_retrieval(stored: SimulationState, control2: ControlProfile,
                  protocol: ProtocolConfig, ensemble: EnsembleSpec,
                  medium: MediumSpec, grid2: Grid,
                  tau_input=None, input_envelope=None,
                  storage_ensemble_inverted: bool = True,
                  gap_time: float = 0.0,
                  conditions=None,
                  probe_spectral_width: float | None = None,
                  transmitted_fraction: float = math.nan) -> EchoRecord:
    """Retrieve the echo from a stored strong-field state.

    ensemble is the stage-1 node table; RECRIB recall inverts it per the
    protocol flags while comb recall keeps it.  The handover applies the
    mode-matching map r12 -> r12 exp(i q Z) and the dark-interval phase
    exp(-i d21 gap_time) analytically (detunings as seen before any
    inversion); populations are frozen between stages.  conditions, when
    supplied, is the ConditionReport consulted in strict mode.
    """
    if protocol.strict and conditions is not None and not conditions.overall:
        raise ConditionsUnmet(
            "strict mode: conditions failed: "
            + ", ".join(conditions.failing_ids()), report=conditions)
    if stored.z.shape != (grid2.n_z,) or \
            not np.allclose(stored.z, grid2.z()):
        raise ValidationError(
            "retrieval grid does not match the stored state's Z axis")

    r12 = np.array(stored.r12, dtype=complex)
    if gap_time > 0.0:
        r12 *= np.exp(-1j * ensemble.delta21s * gap_time)[:, None]
    q = handover_wavevector_mismatch(protocol)
    if q != 0.0:
        r12 *= np.exp(1j * q * stored.z)[None, :]
    if protocol.protocol == "recrib" and storage_ensemble_inverted:
        ensemble2 = ensemble.inverted(
            invert_31=protocol.invert_delta31,
            invert_21=protocol.invert_delta21)
    else:
        ensemble2 = ensemble

    if probe_spectral_width is None:
        if tau_input is not None:
            span = float(tau_input[-1] - tau_input[0])
            probe_spectral_width = max(1.0 / max(span, 1e-300), 1e-12)
        else:
            probe_spectral_width = 1.0 / grid2.t_end
    drive_bound = max(stored.zeta_scale, 1e-300)
    _validate_grid(grid2, ensemble2, control2, medium,
                   drive_bound=drive_bound, bandwidth=probe_spectral_width)

    state = SimulationState.fresh(
        grid2, ensemble2, control2.one_photon_detuning, stage="retrieval",
        boundary=None, r12_initial=r12, r11_initial=stored.r11)
    state.zeta_scale = drive_bound
    stored_initial = float(cumulative_integral(
        excitation_profile(state, ensemble2), state.dz)[-1])
    state.zeta_t[0] = field_row(state, ensemble2, medium, control2, 0.0,
                                0.0, state.r12, state.r11)

    for _ in range(grid2.n_tau - 1):
        advance_strong(state, ensemble2, medium, control2, grid2.dt)

    tau2 = grid2.tau()
    flux = _flux_weights(control2, medium, tau2)
    emitted = float(np.trapezoid(flux * np.abs(state.zeta_t[:, 0]) ** 2,
                                 tau2))
    stored_final = float(cumulative_integral(
        excitation_profile(state, ensemble2), state.dz)[-1])
    released = stored_initial - stored_final
    audit = abs(emitted - released) / max(stored_initial, 1e-300)

    # dress the echo the same way the input record is dressed: remove the
    # stage-2 accumulated Stark phase so the envelope is slow on the grid
    psi2 = control2.one_photon_detuning * cumulative_integral(
        np.asarray(control2.f(tau2), dtype=float), grid2.dt)
    echo = envelope_from_scaled(state.zeta_t[:, 0], control2, tau2) \
        * np.exp(-1j * psi2)
    t2_pred = math.nan if protocol.t2 is None else protocol.t2
    return EchoRecord(
        protocol=protocol.protocol,
        tau_input=(None if tau_input is None
                   else np.asarray(tau_input, dtype=float)),
        input_envelope=(None if input_envelope is None
                        else np.asarray(input_envelope, dtype=complex)),
        tau_echo=tau2,
        echo_envelope=echo,
        t1=protocol.t1,
        t2=t2_pred,
        transmitted_fraction=transmitted_fraction,
        conditions=conditions,
        extras={"state": state, "audit_residual": audit,
                "emitted_photons": emitted,
                "released_excitation": released},
    )
