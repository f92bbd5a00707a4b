"""Reversibility conditions for echo recall and their constructive solvers.

Strong-field recall needs four conditions: (i) phase matching between probe
and backward echo, (ii) time-reversed control envelopes with equal coupling,
(iii) node-wise rephasing of the total Raman detuning, and (iv)
anti-correlated one-photon detunings.  The weak-field (linear) regime
relaxes these to primed variants: (i') phase matching including the
slow-light index correction beta/Delta per stage, (ii') a product condition
on beta * f only, and (iii') either node-wise inversion (k = 0) or the comb
timing f1 t1 + f2 t2 = 2 pi k / spacing (k >= 1).

Envelope conditions compare the stages on a shared clock where stage 2 runs
backward: residuals are built from Omega2(-tau) against Omega1(tau).  Each
stage carries a clock_offset mapping its local time to that shared clock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import ControlProfile, EnsembleSpec, ProbeSpec
from .errors import NonCausalEcho, ValidationError

ALGEBRAIC_TOL = 1e-9
ENVELOPE_TOL = 1e-6

DEFAULT_TOLERANCES = {
    "i": ALGEBRAIC_TOL,
    "ii": ENVELOPE_TOL,
    "iii": ALGEBRAIC_TOL,
    "iv": ALGEBRAIC_TOL,
    "i'": ALGEBRAIC_TOL,
    "ii'": ENVELOPE_TOL,
    "iii'": ALGEBRAIC_TOL,
}


@dataclass(frozen=True)
class PhaseMatching:
    """Wavevector bookkeeping for the probe/echo pair.

    Only z-projections are dynamical (1-d reduction); alpha_phase is the
    global coherence phase carried through recall.  light_speed sets the
    unit system.
    """

    K1z: float
    K2z: float
    omega1: float
    omega2: float
    n1: float = 1.0
    n2: float = 1.0
    alpha_phase: float = 0.0
    light_speed: float = 1.0

    def __post_init__(self):
        if self.light_speed <= 0:
            raise ValidationError("light_speed must be > 0")
        if self.n1 < 1.0 or self.n2 < 1.0:
            raise ValidationError("refractive indexes must be >= 1")

    @classmethod
    def backward_matched(cls, omega1: float, omega2: float, n1: float = 1.0,
                         n2: float = 1.0, alpha_phase: float = 0.0,
                         light_speed: float = 1.0) -> "PhaseMatching":
        """Forward probe, backward echo, both on their free dispersion."""
        k1 = n1 * omega1 / light_speed
        k2 = k1 - (n1 * omega1 + n2 * omega2) / light_speed
        return cls(K1z=k1, K2z=k2, omega1=omega1, omega2=omega2, n1=n1,
                   n2=n2, alpha_phase=alpha_phase, light_speed=light_speed)

    def residual_strong(self) -> float:
        """Normalized defect of c(K1 - K2) = n1 w1 + n2 w2."""
        c = self.light_speed
        target = self.n1 * self.omega1 + self.n2 * self.omega2
        return abs(c * (self.K1z - self.K2z) - target) / abs(
            self.n1 * self.omega1)

    def residual_weak(self, beta1: float, delta1: float, beta2: float,
                      delta2: float) -> float:
        """Same defect including the slow-light correction beta/Delta."""
        c = self.light_speed
        target = (self.n1 * self.omega1 + self.n2 * self.omega2
                  + c * (beta1 / delta1 + beta2 / delta2))
        return abs(c * (self.K1z - self.K2z) - target) / abs(
            self.n1 * self.omega1)


@dataclass(frozen=True)
class ConditionEntry:
    id: str
    residual: float
    tolerance: float
    satisfied: bool
    blocked: bool = False

    def line(self) -> str:
        status = "blocked" if self.blocked else (
            "pass" if self.satisfied else "fail")
        return (f"{self.id} residual={self.residual:.6e} "
                f"tolerance={self.tolerance:.1e} {status}")


@dataclass(frozen=True)
class ConditionReport:
    entries: tuple[ConditionEntry, ...]

    @property
    def overall(self) -> bool:
        return all(e.satisfied for e in self.entries)

    def get(self, cid: str) -> ConditionEntry:
        for e in self.entries:
            if e.id == cid:
                return e
        raise KeyError(cid)

    def failing_ids(self) -> list[str]:
        return [e.id for e in self.entries if not e.satisfied]

    def as_text(self) -> str:
        lines = [e.line() for e in self.entries]
        lines.append(f"overall {'pass' if self.overall else 'fail'}")
        return "\n".join(lines)


@dataclass(frozen=True)
class ProtocolConfig:
    """Recall-protocol selector shared by both integrators.

    t1 is the storage dephasing time (coherence write instant to stage-1
    control switch-off); t2, when given, prescribes the retrieval window
    you expect the echo in.  For comb recall, comb_spacing and k fix the
    rephasing order.  strict turns condition defects into errors.
    """

    protocol: str
    t1: float = 0.0
    t2: float | None = None
    matching: PhaseMatching | None = None
    comb_spacing: float = 0.0
    k: int = 1
    strict: bool = False
    invert_delta21: bool = True
    invert_delta31: bool = True

    def __post_init__(self):
        if self.protocol not in ("recrib", "reafc"):
            raise ValidationError(f"unknown protocol {self.protocol!r}")
        if self.protocol == "reafc":
            if self.comb_spacing <= 0:
                raise ValidationError("reafc needs comb_spacing > 0")
            if self.k < 1:
                raise ValidationError("reafc needs k >= 1")
        if self.t1 < 0:
            raise ValidationError("t1 must be >= 0")

    def expected_echo_time(self, f1: float, f2: float) -> float:
        """Echo emission time on the stage-2 clock."""
        if self.protocol == "recrib":
            if f2 <= 0:
                raise ValidationError("f2 must be > 0")
            return f1 * self.t1 / f2
        return echo_time_afc(f1, f2, self.t1, self.comb_spacing, self.k)


@dataclass(frozen=True)
class StageSetup:
    """Everything one stage contributes to the condition checks.

    beta is the stage's composite coupling constant (the envelope
    conditions compare beta1 f1 against beta2 f2, so it lives here rather
    than on a shared medium).  clock_offset maps stage-local time to the
    shared reversal clock: shared = local - clock_offset.
    """

    control: ControlProfile
    ensemble: EnsembleSpec
    probe: ProbeSpec | None = None
    matching: PhaseMatching | None = None
    beta: float = 1.0
    clock_offset: float = 0.0

    def shared_rabi(self, tau_shared):
        return self.control.rabi(np.asarray(tau_shared) + self.clock_offset)

    def shared_f(self, tau_shared):
        return self.control.f(np.asarray(tau_shared) + self.clock_offset)

    def shared_window(self) -> tuple[float, float]:
        return (self.control.switch_on - self.clock_offset,
                self.control.switch_off - self.clock_offset)


def _entry(cid, residual, tolerances) -> ConditionEntry:
    tol = tolerances[cid]
    return ConditionEntry(id=cid, residual=float(residual), tolerance=tol,
                          satisfied=bool(residual <= tol))


def _blocked(cid, tolerances) -> ConditionEntry:
    return ConditionEntry(id=cid, residual=math.nan,
                          tolerance=tolerances[cid], satisfied=False,
                          blocked=True)


def _shared_grid(stage1: StageSetup, stage2: StageSetup,
                 n_samples: int = 2048) -> np.ndarray:
    """Tau samples covering stage 1 and the reflection of stage 2."""
    a1, b1 = stage1.shared_window()
    a2, b2 = stage2.shared_window()
    lo = min(a1, -b2)
    hi = max(b1, -a2)
    pad = 0.05 * (hi - lo)
    return np.linspace(lo - pad, hi + pad, n_samples)


def _matching_of(stage1: StageSetup, stage2: StageSetup) -> PhaseMatching:
    m = stage1.matching or stage2.matching
    if m is None:
        raise ValidationError("no PhaseMatching attached to either stage")
    return m


def _paired_ensembles(stage1: StageSetup, stage2: StageSetup):
    e1, e2 = stage1.ensemble, stage2.ensemble
    if e1.n_nodes != e2.n_nodes:
        raise ValidationError(
            "stage ensembles must pair node-for-node "
            f"({e1.n_nodes} vs {e2.n_nodes})")
    return e1, e2


def check_strong_conditions(stage1: StageSetup, stage2: StageSetup,
                            tau_grid=None, tolerances=None
                            ) -> ConditionReport:
    """Residuals of the four strong-field recall conditions.

    Never raises on physics grounds; every defect is reported.  Condition
    iii is only evaluated when ii and iv pass, because its node-pairing
    form presumes them; otherwise it is reported blocked.
    """
    tolerances = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    if tau_grid is None:
        tau_grid = _shared_grid(stage1, stage2)
    tau_grid = np.asarray(tau_grid, dtype=float)

    matching = _matching_of(stage1, stage2)
    res_i = matching.residual_strong()

    om1 = np.abs(stage1.shared_rabi(tau_grid))
    om2r = np.abs(stage2.shared_rabi(-tau_grid))
    om_scale = max(om1.max(), 1e-300)
    f1 = stage1.shared_f(tau_grid)
    f2r = stage2.shared_f(-tau_grid)
    f_scale = max(f1.max(), 1e-300)
    res_ii = max(
        float(np.max(np.abs(om1 - om2r))) / om_scale,
        abs(stage1.beta - stage2.beta) / abs(stage1.beta),
        float(np.max(np.abs(f1 - f2r))) / f_scale,
    )

    d1 = stage1.control.one_photon_detuning
    d2 = stage2.control.one_photon_detuning
    e1, e2 = _paired_ensembles(stage1, stage2)
    res_iv = max(
        abs(d2 + d1) / abs(d1),
        float(np.max(np.abs(e2.delta31s / d2 - e1.delta31s / d1))),
    )

    ent_i = _entry("i", res_i, tolerances)
    ent_ii = _entry("ii", res_ii, tolerances)
    ent_iv = _entry("iv", res_iv, tolerances)

    if ent_ii.satisfied and ent_iv.satisfied:
        fp1 = stage1.control.peak_f()
        fp2 = stage2.control.peak_f()
        total1 = e1.raman_detunings(fp1)
        total2 = e2.raman_detunings(fp2)
        width = e1.raman_width(fp1)
        scale = width if width > 0 else max(np.max(np.abs(total1)), 1.0)
        res_iii = float(np.max(np.abs(total2 + total1))) / scale
        ent_iii = _entry("iii", res_iii, tolerances)
    else:
        ent_iii = _blocked("iii", tolerances)

    return ConditionReport(entries=(ent_i, ent_ii, ent_iii, ent_iv))


def solve_strong_stage2(stage1: StageSetup, anchor: float = 0.0
                        ) -> StageSetup:
    """Construct the stage-2 parameters that null all four residuals.

    Flips the one-photon detuning, shifts the echo carrier by twice that
    detuning, mirrors the control envelope about the shared-clock origin,
    keeps the coupling, inverts every node, and phase-matches the backward
    echo.  anchor re-anchors the mirrored envelope in stage-2 local time
    (local reversal point anchor/2 instead of 0).
    """
    ctl1 = stage1.control
    d1 = ctl1.one_photon_detuning
    m1 = stage1.matching
    if m1 is None:
        omega1 = stage1.probe.carrier if stage1.probe is not None else 0.0
        m1 = PhaseMatching.backward_matched(omega1=omega1,
                                            omega2=omega1 + 2.0 * d1)
        stage1 = replace(stage1, matching=m1)
    omega2 = m1.omega1 + 2.0 * d1
    c = m1.light_speed
    k2 = m1.K1z - (m1.n1 * m1.omega1 + m1.n2 * omega2) / c
    matching2 = PhaseMatching(
        K1z=m1.K1z, K2z=k2, omega1=m1.omega1, omega2=omega2, n1=m1.n1,
        n2=m1.n2, alpha_phase=m1.alpha_phase, light_speed=c)

    # shared clock: stage 2 local time = anchor + (shared time), so the
    # mirrored envelope lands at local tau = anchor - (stage-1 local tau)
    ctl2 = ctl1.time_reversed(
        anchor=anchor + stage1.clock_offset, detuning=-d1, carrier=omega2)
    return StageSetup(
        control=ctl2,
        ensemble=stage1.ensemble.inverted(),
        probe=None,
        matching=matching2,
        beta=stage1.beta,
        clock_offset=anchor,
    )


def check_weak_conditions(stage1: StageSetup, stage2: StageSetup,
                          protocol: str = "recrib", k: int = 0,
                          t1: float = 0.0, t2: float = 0.0,
                          tau_grid=None, tolerances=None) -> ConditionReport:
    """Residuals of the linear-regime recall conditions.

    For comb rephasing (k >= 1) supply the storage and retrieval times t1
    and t2; the comb spacing is read from the stage-1 ensemble.  k = 0
    checks node-wise inversion instead.
    """
    tolerances = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    if k < 0:
        raise ValidationError("k must be >= 0")
    if protocol not in ("recrib", "reafc"):
        raise ValidationError(f"unknown protocol {protocol!r}")
    if tau_grid is None:
        tau_grid = _shared_grid(stage1, stage2)
    tau_grid = np.asarray(tau_grid, dtype=float)

    matching = _matching_of(stage1, stage2)
    d1 = stage1.control.one_photon_detuning
    d2 = stage2.control.one_photon_detuning
    res_i = matching.residual_weak(stage1.beta, d1, stage2.beta, d2)

    bf1 = stage1.beta * stage1.shared_f(tau_grid)
    bf2r = stage2.beta * stage2.shared_f(-tau_grid)
    res_ii = float(np.max(np.abs(bf1 - bf2r))) / max(bf1.max(), 1e-300)

    if k == 0:
        e1, e2 = _paired_ensembles(stage1, stage2)
        fp1 = stage1.control.peak_f()
        fp2 = stage2.control.peak_f()
        total1 = e1.raman_detunings(fp1)
        total2 = e2.raman_detunings(fp2)
        width = e1.raman_width(fp1)
        scale = width if width > 0 else max(np.max(np.abs(total1)), 1.0)
        res_iii = float(np.max(np.abs(total2 + total1))) / scale
    else:
        spacing = stage1.ensemble.comb_spacing
        if spacing <= 0:
            raise ValidationError(
                "k >= 1 rephasing needs a comb ensemble with positive "
                "spacing")
        fp1 = stage1.control.peak_f()
        fp2 = stage2.control.peak_f()
        res_iii = (abs(fp1 * t1 + fp2 * t2 - 2.0 * math.pi * k / spacing)
                   * spacing / (2.0 * math.pi))

    return ConditionReport(entries=(
        _entry("i'", res_i, tolerances),
        _entry("ii'", res_ii, tolerances),
        _entry("iii'", res_iii, tolerances),
    ))


def echo_carrier_weak(omega1: float, control1: ControlProfile,
                      control2: ControlProfile,
                      omega21: float | None = None
                      ) -> tuple[float, float | None]:
    """Echo carrier under two-photon resonance with constant Stark shifts.

    omega2 = omega1 + (control carrier difference) + (Stark shift
    difference).  When the ground-state splitting omega21 is supplied the
    stage-1 resonance defect |omega1 - (carrier1 + omega21 - shift1)| is
    returned alongside; otherwise None.
    """
    shift1 = control1.one_photon_detuning * control1.peak_f()
    shift2 = control2.one_photon_detuning * control2.peak_f()
    omega2 = omega1 + control2.carrier - control1.carrier + shift1 - shift2
    residual = None
    if omega21 is not None:
        residual = abs(omega1 - (control1.carrier + omega21 - shift1))
    return omega2, residual


def echo_time_afc(f1: float, f2: float, t1: float, delta_comb: float,
                  k: int = 1) -> float:
    """Retrieval delay t2 completing the comb rephasing at order k.

    Solves f1 t1 + f2 t2 = 2 pi k / delta_comb.
    """
    if f2 <= 0:
        raise ValidationError("f2 must be > 0")
    if delta_comb <= 0:
        raise ValidationError("delta_comb must be > 0")
    if k < 1 or int(k) != k:
        raise ValidationError("k must be an integer >= 1")
    t2 = (2.0 * math.pi * k / delta_comb - f1 * t1) / f2
    if t2 <= 0:
        raise NonCausalEcho(
            f"rephasing order k={k} already passed during storage "
            f"(t2={t2:.6g}); try k >= {k + 1}")
    return t2
