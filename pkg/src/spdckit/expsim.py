"""Monte Carlo simulation and analysis of the coincidence-counting experiment.

Rate model (all rates in 1/s):

    singles_i   = R * eta_i * (1 + b)                 R = pair rate * power
    coincidence = R * eta_1 * eta_2 * w_route * P(alpha, beta)
    accidentals = singles_1 * singles_2 * tau

where eta_i are the per-arm efficiency chains, b the singles background
fraction, w_route the probability that both photons exit the correct
multiplexer port (w^2, plus the doubly-swapped term (1-w)^2 which also
coincides), and P the polarizer projection of the dephased entangled state.
Counts are Poisson draws from these rates; a run is deterministic for a
fixed 64-bit seed (PCG64, fixed draw order: S1, S2, C_true, C_accidental).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class SourceParams:
    pair_rate_per_mw: float
    pump_power_mw: float
    state_phase_rad: float = 0.0
    state_visibility: float = 1.0
    wdm_routing_prob: float = 0.99
    arm1_efficiency: float = 1.0
    arm2_efficiency: float = 1.0
    coincidence_window_ns: float = 5.8
    background_fraction: float = 0.0
    depolarization_mode: str = "dephasing"   # "dephasing" | "werner"

    def __post_init__(self):
        for name in ("state_visibility", "wdm_routing_prob",
                     "arm1_efficiency", "arm2_efficiency"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.coincidence_window_ns < 0:
            raise ConfigError("coincidence window must be nonnegative")
        if self.pair_rate_per_mw < 0 or self.pump_power_mw < 0:
            raise ConfigError("rates and powers must be nonnegative")
        if self.background_fraction < 0:
            raise ConfigError("background fraction must be nonnegative")
        if self.depolarization_mode not in ("dephasing", "werner"):
            raise ConfigError("depolarization_mode must be 'dephasing' or 'werner'")


@dataclass(frozen=True)
class MeasurementSetting:
    """Polarizer angles in degrees; None means the polarizer is removed."""

    alpha_deg: float | None
    beta_deg: float | None
    duration_s: float = 1.0

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ConfigError("measurement duration must be positive")


@dataclass(frozen=True)
class CountRecord:
    singles1: int
    singles2: int
    coincidences: int
    duration_s: float
    setting: MeasurementSetting
    seed: int

    def __post_init__(self):
        if self.coincidences > min(self.singles1, self.singles2):
            raise ConfigError("coincidences cannot exceed either singles count")


def coincidence_probability(alpha_deg: float, beta_deg: float,
                            phase_rad: float, visibility: float) -> float:
    """Projection of the dephased HH/VV state onto linear polarizers."""
    if not 0.0 <= visibility <= 1.0:
        raise ConfigError("state visibility must lie in [0, 1]")
    a = np.radians(alpha_deg)
    b = np.radians(beta_deg)
    return float(0.5 * (np.cos(a) ** 2 * np.cos(b) ** 2
                        + np.sin(a) ** 2 * np.sin(b) ** 2
                        + 2.0 * visibility * np.cos(phase_rad)
                        * np.cos(a) * np.sin(a) * np.cos(b) * np.sin(b)))


def expected_rates(params: SourceParams, setting: MeasurementSetting) -> dict:
    """Expected singles, true-coincidence and accidental rates in 1/s.

    The default depolarization mode scales only the coherence term of the
    projection (pure dephasing); the optional isotropic mode mixes the pure
    projection with white noise, P = V P_pure + (1 - V)/4, and does reduce
    the H/V-basis correlations.
    """
    rate = params.pair_rate_per_mw * params.pump_power_mw
    s1 = rate * params.arm1_efficiency * (1.0 + params.background_fraction)
    s2 = rate * params.arm2_efficiency * (1.0 + params.background_fraction)
    if setting.alpha_deg is None or setting.beta_deg is None:
        projection = 1.0
    elif params.depolarization_mode == "werner":
        pure = coincidence_probability(
            setting.alpha_deg, setting.beta_deg, params.state_phase_rad, 1.0)
        v = params.state_visibility
        projection = v * pure + (1.0 - v) / 4.0
    else:
        projection = coincidence_probability(
            setting.alpha_deg, setting.beta_deg,
            params.state_phase_rad, params.state_visibility)
    w = params.wdm_routing_prob
    routing = w * w + (1.0 - w) * (1.0 - w)
    c_true = rate * params.arm1_efficiency * params.arm2_efficiency * routing * projection
    tau_s = params.coincidence_window_ns * 1e-9
    return {"singles1": s1, "singles2": s2, "true_coincidences": c_true,
            "accidentals": s1 * s2 * tau_s}


def simulate_run(params: SourceParams, setting: MeasurementSetting, seed: int) -> CountRecord:
    """One simulated measurement; identical seed reproduces identical counts."""
    rates = expected_rates(params, setting)
    rng = np.random.default_rng(seed)
    t = setting.duration_s
    s1 = int(rng.poisson(rates["singles1"] * t))
    s2 = int(rng.poisson(rates["singles2"] * t))
    c = int(rng.poisson(rates["true_coincidences"] * t))
    c += int(rng.poisson(rates["accidentals"] * t))
    # physical coincidences are a subset of each singles stream
    c = min(c, s1, s2)
    return CountRecord(s1, s2, c, t, setting, seed)


@dataclass(frozen=True)
class CorrectedRate:
    rate_per_s: float
    accidental_rate_per_s: float
    clamped: bool   # negative fluctuation clamped to zero


def accidental_correction(record: CountRecord, tau_ns: float) -> CorrectedRate:
    """C/T - (S1/T)(S2/T) tau, clamped at zero with a flag."""
    if record.duration_s <= 0:
        raise ConfigError("record duration must be positive")
    t = record.duration_s
    acc = (record.singles1 / t) * (record.singles2 / t) * tau_ns * 1e-9
    corrected = record.coincidences / t - acc
    if corrected < 0:
        return CorrectedRate(0.0, acc, True)
    return CorrectedRate(corrected, acc, False)


@dataclass(frozen=True)
class VisibilityEstimate:
    visibility: float
    stderr: float
    corrected_max_per_s: float
    corrected_min_per_s: float


def visibility_from_scan(record_max: CountRecord, record_min: CountRecord,
                         tau_ns: float, corrected: bool = True) -> VisibilityEstimate:
    """(C_max - C_min)/(C_max + C_min) with a binomial standard error.

    Rates are accidental-corrected unless ``corrected`` is False. The error
    uses the effective corrected counts in a binomial model and is propagated
    as sigma_V = 2 sigma_p.
    """
    if corrected:
        r_max = accidental_correction(record_max, tau_ns).rate_per_s
        r_min = accidental_correction(record_min, tau_ns).rate_per_s
    else:
        r_max = record_max.coincidences / record_max.duration_s
        r_min = record_min.coincidences / record_min.duration_s
    n_eff = r_max * record_max.duration_s + r_min * record_min.duration_s
    if n_eff <= 0:
        raise DomainError("no coincidences in either analyzer setting")
    total = r_max + r_min
    v = (r_max - r_min) / total
    p = r_max / total
    stderr = 2.0 * float(np.sqrt(max(p * (1.0 - p), 1.0 / n_eff) / n_eff))
    return VisibilityEstimate(float(v), stderr, float(r_max), float(r_min))


def fidelity_estimate(v_hv: float, v_45: float) -> float:
    """F = (1 + V_HV + 2 V_45)/4, taking the circular-basis visibility equal to V_45."""
    if not (0.0 <= v_hv <= 1.0 and 0.0 <= v_45 <= 1.0):
        raise ConfigError("visibilities must lie in [0, 1]")
    return (1.0 + v_hv + 2.0 * v_45) / 4.0


def coupling_efficiency_estimate(c_over_s: float, detector_eff: float,
                                 losses) -> float:
    """Net coupling efficiency implied by a coincidence-to-singles ratio.

    eta = (C/S) / (detector_eff * prod(1 - loss_i)).
    """
    if not 0.0 <= c_over_s <= 1.0:
        raise ConfigError("C/S ratio must lie in [0, 1]")
    denom = detector_eff
    for loss in losses:
        if not 0.0 <= loss < 1.0:
            raise ConfigError("losses must lie in [0, 1)")
        denom *= 1.0 - loss
    if denom <= 0:
        raise DomainError("efficiency chain denominator is zero")
    return c_over_s / denom


@dataclass(frozen=True)
class PowerScanRow:
    power_mw: float
    singles1: int
    singles2: int
    coincidences_raw: int
    coincidences_corrected_per_s: float
    seed: int


def rates_vs_power(params: SourceParams, powers_mw, setting: MeasurementSetting,
                   seed: int) -> list[PowerScanRow]:
    """Simulated count rates over a pump-power scan at one analyzer setting.

    Each power gets an independent child seed derived deterministically from
    the parent seed, so the scan is reproducible as a whole.
    """
    powers = [float(p) for p in powers_mw]
    if any(p <= 0 for p in powers):
        raise ConfigError("pump powers must be positive")
    children = np.random.SeedSequence(seed).spawn(len(powers))
    rows = []
    for power, child in zip(powers, children):
        child_seed = int(child.generate_state(1, dtype=np.uint64)[0])
        p = replace(params, pump_power_mw=power)
        record = simulate_run(p, setting, child_seed)
        corrected = accidental_correction(record, params.coincidence_window_ns)
        rows.append(PowerScanRow(
            power_mw=power,
            singles1=record.singles1,
            singles2=record.singles2,
            coincidences_raw=record.coincidences,
            coincidences_corrected_per_s=corrected.rate_per_s,
            seed=child_seed,
        ))
    return rows
