"""Collinear type-I phase matching for the two-crystal source.

The pump propagates as an extraordinary wave at the cut angle; both
down-conversion photons are ordinary. Energy conservation ties the idler to
the signal, 1/lam2 = 1/lam_p - 1/lam1, and the collinear mismatch is

    dk = 2 pi [ n(theta_p, lam_p)/lam_p - n_o(lam1)/lam1 - n_o(lam2)/lam2 ]

reported in rad/mm. Non-degenerate solutions exist only while the pump index
at the cut angle exceeds the ordinary index at the degenerate wavelength;
the angle where both coincide is the degeneracy cutoff, above which there is
no collinear solution.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, NoPhaseMatchError
from .materials import Material, ORDINARY, extraordinary_at, refractive_index

BRACKET_SCAN_STEP_NM = 0.5
ROOT_XTOL_NM = 1e-12
DEGENERATE_TOL_PER_MM = 1e-9


@dataclass(frozen=True)
class PhaseMatchConfig:
    """Crystal cut and pump parameters of one down-conversion crystal."""

    material: Material
    theta_p_deg: float
    length_mm: float
    pump_nm: float
    pump_fwhm_nm: float = 0.0

    def __post_init__(self):
        if self.length_mm <= 0:
            raise ConfigError("crystal length must be positive")
        if self.pump_fwhm_nm < 0:
            raise ConfigError("pump bandwidth must be nonnegative")
        if not 0.0 <= self.theta_p_deg <= 90.0:
            raise ConfigError("cut angle must lie in [0, 90] degrees")

    def with_length(self, length_mm: float) -> "PhaseMatchConfig":
        return replace(self, length_mm=length_mm)


@dataclass(frozen=True)
class PairSolution:
    pump_nm: float
    lambda_signal_nm: float
    lambda_idler_nm: float
    residual_per_mm: float
    degenerate: bool = False

    @property
    def energy_residual_per_nm(self) -> float:
        return 1.0 / self.lambda_signal_nm + 1.0 / self.lambda_idler_nm - 1.0 / self.pump_nm


def conjugate_wavelength(pump_nm: float, lam_nm):
    """Energy-conserving partner wavelength: 1/lam2 = 1/pump - 1/lam."""
    lam = np.asarray(lam_nm, dtype=float)
    if np.any(lam <= pump_nm):
        raise ConfigError("down-conversion wavelength must exceed the pump wavelength")
    return 1.0 / (1.0 / pump_nm - 1.0 / lam)


def delta_k(config: PhaseMatchConfig, pump_nm: float, signal_nm):
    """Collinear mismatch in rad/mm; the conjugate follows from energy conservation."""
    lam2 = conjugate_wavelength(pump_nm, signal_nm)
    n_pump = refractive_index(config.material, extraordinary_at(config.theta_p_deg), pump_nm)
    n_1 = refractive_index(config.material, ORDINARY, signal_nm)
    n_2 = refractive_index(config.material, ORDINARY, lam2)
    per_nm = 2.0 * np.pi * (n_pump / pump_nm - n_1 / np.asarray(signal_nm) - n_2 / lam2)
    return per_nm * 1.0e6


def _signal_bracket(config: PhaseMatchConfig, pump_nm: float) -> tuple[float, float]:
    """Searchable signal range: above the pump, conjugate inside material validity."""
    lo_o, hi_o = config.material.ordinary.range_nm
    lam1_hi = 2.0 * pump_nm
    if lam1_hi > hi_o:
        raise NoPhaseMatchError(
            f"degenerate wavelength {lam1_hi:g} nm outside {config.material.name} validity")
    # conjugate of the longest valid idler bounds the signal from below
    lam1_lo = max(lo_o, conjugate_wavelength(pump_nm, hi_o)) + 1e-9
    return lam1_lo, lam1_hi


def solve_signal_idler(config: PhaseMatchConfig) -> PairSolution:
    """Find the collinear pair for the configured cut angle and pump.

    Scans the signal bracket at 0.5 nm steps for a sign change of the
    mismatch, then refines by Brent's method (bracketed bisection/secant).
    Returns the non-degenerate pair with lam1 < lam2, or the degenerate
    solution flagged as such when the mismatch only vanishes at 2*lam_p.
    """
    pump = config.pump_nm
    lam1_lo, lam1_hi = _signal_bracket(config, pump)
    f = lambda l1: delta_k(config, pump, l1)

    dk_deg = f(lam1_hi)
    if abs(dk_deg) < DEGENERATE_TOL_PER_MM:
        return PairSolution(pump, lam1_hi, lam1_hi, float(dk_deg), degenerate=True)

    grid = np.arange(lam1_lo, lam1_hi, BRACKET_SCAN_STEP_NM)
    grid = np.append(grid, lam1_hi)
    values = f(grid)
    sign_change = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]
    if len(sign_change) == 0:
        raise NoPhaseMatchError(
            f"no collinear solution for {config.material.name} at "
            f"theta_p={config.theta_p_deg:g} deg, pump {pump:g} nm "
            f"(cut angle beyond the degeneracy cutoff, or pair outside dispersion validity)")
    i = int(sign_change[0])
    lam1 = brentq(f, float(grid[i]), float(grid[i + 1]), xtol=ROOT_XTOL_NM, rtol=8.9e-16)
    lam2 = float(conjugate_wavelength(pump, lam1))
    return PairSolution(pump, float(lam1), lam2, float(f(lam1)), degenerate=False)


def solve_angle(material: Material, pump_nm: float, signal_target_nm: float,
                angle_tol_deg: float = 1e-6) -> float:
    """Cut angle at which the collinear solution sits at ``signal_target_nm``.

    Inverse of :func:`solve_signal_idler` by construction: finds the root in
    theta of the same mismatch at the target wavelengths.
    """
    if signal_target_nm <= pump_nm:
        raise ConfigError("signal target must exceed the pump wavelength (zero-energy idler)")
    if signal_target_nm > 2.0 * pump_nm:
        raise ConfigError("signal target beyond degeneracy; pass the shorter pair member")

    def mismatch(theta_deg: float) -> float:
        cfg = PhaseMatchConfig(material, theta_deg, 1.0, pump_nm)
        return float(delta_k(cfg, pump_nm, signal_target_nm))

    lo, hi = 1e-6, 90.0 - 1e-6
    f_lo, f_hi = mismatch(lo), mismatch(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoPhaseMatchError(
            f"no cut angle in (0, 90) phase-matches signal {signal_target_nm:g} nm "
            f"for pump {pump_nm:g} nm in {material.name}")
    return float(brentq(mismatch, lo, hi, xtol=angle_tol_deg, rtol=8.9e-16))


def degeneracy_cutoff_angle(material: Material, pump_nm: float) -> float:
    """Cut angle where the collinear solution is exactly degenerate."""
    return solve_angle(material, pump_nm, 2.0 * pump_nm)
