"""Down-conversion spectra from the collinear sinc^2 kernel.

The relative spectral density of one arm is the pump-bandwidth average of the
phase-matching kernel,

    S(lam) ~ integral sinc^2( dk(lam_p', lam) L / 2 ) g(lam_p') dlam_p'

with g a normalized Gaussian of the configured pump FWHM (a delta function
for a monochromatic pump). For the idler arm the same kernel is evaluated
against the idler wavelength, the signal following from energy conservation.
The quadrature uses composite Simpson with a fixed node order, so results do
not depend on how grid work is partitioned.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DegenerateScanError, ResolutionError
from .materials import ORDINARY, extraordinary_at, group_index
from .phasematch import PhaseMatchConfig, conjugate_wavelength, delta_k, solve_signal_idler

PUMP_QUADRATURE_INTERVALS = 64      # composite Simpson intervals over +/- 2.5 FWHM
PUMP_QUADRATURE_SPAN_FWHM = 2.5
DEFAULT_GRID_STEP_NM = 0.05
MIN_POINTS_ABOVE_HALF = 10
_FWHM_TO_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))


@dataclass(frozen=True)
class Spectrum:
    arm: str
    wavelengths_nm: np.ndarray
    density: np.ndarray       # peak-normalized
    fwhm_nm: float
    center_nm: float

    def to_csv(self, path: str | Path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lambda_nm", "density"])
            for lam, s in zip(self.wavelengths_nm, self.density):
                writer.writerow([f"{lam:.10g}", f"{s:.10g}"])


@dataclass(frozen=True)
class BandwidthScanPoint:
    length_mm: float
    fwhm_nm: float


@dataclass(frozen=True)
class BandwidthScanResult:
    points: tuple[BandwidthScanPoint, ...]
    exponent: float
    residual: float

    def to_csv(self, path: str | Path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["L_mm", "fwhm_nm"])
            for p in self.points:
                writer.writerow([f"{p.length_mm:.10g}", f"{p.fwhm_nm:.10g}"])


def pump_quadrature(config: PhaseMatchConfig) -> tuple[np.ndarray, np.ndarray]:
    """Pump nodes and Simpson-weighted Gaussian values (single node if monochromatic)."""
    if config.pump_fwhm_nm == 0.0:
        return np.array([config.pump_nm]), np.array([1.0])
    sigma = config.pump_fwhm_nm / _FWHM_TO_SIGMA
    span = PUMP_QUADRATURE_SPAN_FWHM * config.pump_fwhm_nm
    nodes = np.linspace(config.pump_nm - span, config.pump_nm + span,
                        PUMP_QUADRATURE_INTERVALS + 1)
    gauss = np.exp(-0.5 * ((nodes - config.pump_nm) / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi))
    simpson = np.ones(nodes.size)
    simpson[1:-1:2] = 4.0
    simpson[2:-1:2] = 2.0
    return nodes, gauss * simpson


def _kernel_matrix(config: PhaseMatchConfig, pump_nodes: np.ndarray,
                   grid: np.ndarray, arm: str) -> np.ndarray:
    length_nm = config.length_mm * 1.0e6
    if arm == "signal":
        dk_per_mm = delta_k(config, pump_nodes[:, None], grid[None, :])
    else:
        lam1 = conjugate_wavelength(pump_nodes[:, None], grid[None, :])
        dk_per_mm = delta_k(config, pump_nodes[:, None], lam1)
    x = dk_per_mm * 1.0e-6 * length_nm / 2.0
    return np.sinc(x / np.pi) ** 2


def _extract_fwhm(grid: np.ndarray, s: np.ndarray) -> tuple[float, float]:
    """Width and center of the half-maximum lobe containing the global peak."""
    peak = int(np.argmax(s))
    i = peak
    while i > 0 and s[i - 1] >= 0.5:
        i -= 1
    j = peak
    while j < s.size - 1 and s[j + 1] >= 0.5:
        j += 1
    if i == 0 or j == s.size - 1:
        raise ResolutionError("grid does not bracket the half-maximum crossings")
    if j - i + 1 < MIN_POINTS_ABOVE_HALF:
        raise ResolutionError(
            f"only {j - i + 1} grid points above half maximum; need at least "
            f"{MIN_POINTS_ABOVE_HALF} (refine the grid step)")
    left = grid[i - 1] + (0.5 - s[i - 1]) * (grid[i] - grid[i - 1]) / (s[i] - s[i - 1])
    right = grid[j] + (0.5 - s[j]) * (grid[j + 1] - grid[j]) / (s[j + 1] - s[j])
    return float(right - left), float(0.5 * (left + right))


def spectral_density(config: PhaseMatchConfig, grid, arm: str = "signal") -> Spectrum:
    """Peak-normalized spectral density of one arm on the given grid.

    ``grid`` is either an array of wavelengths in nm or a (start, stop, step)
    triple. Raises :class:`ResolutionError` when the half-maximum lobe is not
    resolved by at least ten grid points or runs off the grid.
    """
    if arm not in ("signal", "idler"):
        raise ConfigError("arm must be 'signal' or 'idler'")
    if isinstance(grid, tuple) and len(grid) == 3:
        start, stop, step = grid
        grid = np.arange(start, stop + step / 2, step)
    grid = np.asarray(grid, dtype=float)
    if grid.size < 3:
        raise ConfigError("spectral grid needs at least three points")

    nodes, weights = pump_quadrature(config)
    kernel = _kernel_matrix(config, nodes, grid, arm)
    s = weights @ kernel          # fixed summation order over pump nodes
    s = s / s.max()
    fwhm, center = _extract_fwhm(grid, s)
    return Spectrum(arm=arm, wavelengths_nm=grid, density=s, fwhm_nm=fwhm, center_nm=center)


def _width_scales(config: PhaseMatchConfig) -> tuple[float, float, float]:
    """(center, mono width estimate, pump-smear estimate) for grid sizing only."""
    pair = solve_signal_idler(config)
    l1, l2 = pair.lambda_signal_nm, pair.lambda_idler_nm
    mat = config.material
    ng1 = float(group_index(mat, ORDINARY, l1))
    ng2 = float(group_index(mat, ORDINARY, l2))
    dng = abs(ng1 - ng2)
    if dng < 1e-12:
        return l1, np.inf, np.inf
    length_nm = config.length_mm * 1.0e6
    w_mono = 2.78312 * l1**2 / (np.pi * length_nm * dng)
    ng_pump = float(group_index(mat, extraordinary_at(config.theta_p_deg), config.pump_nm))
    slope = (l1 / config.pump_nm) ** 2 * abs(ng_pump - ng2) / dng
    return l1, w_mono, slope * config.pump_fwhm_nm


def default_grid(config: PhaseMatchConfig, arm: str = "signal",
                 step_nm: float = DEFAULT_GRID_STEP_NM,
                 halfspan_nm: float | None = None) -> np.ndarray:
    """Grid centered on the solved arm wavelength, kept clear of degeneracy."""
    l1, w_mono, w_pump = _width_scales(config)
    center = l1 if arm == "signal" else float(conjugate_wavelength(config.pump_nm, l1))
    if halfspan_nm is None:
        if not np.isfinite(w_mono):
            raise ResolutionError("cannot size a default grid at degeneracy; pass halfspan_nm")
        halfspan_nm = max(3.0 * (w_mono + w_pump), 5.0)
    degenerate = 2.0 * config.pump_nm
    lo_o, hi_o = config.material.ordinary.range_nm
    pump_hi = config.pump_nm + PUMP_QUADRATURE_SPAN_FWHM * config.pump_fwhm_nm
    if arm == "signal":
        lo = max(center - halfspan_nm, conjugate_wavelength(pump_hi, hi_o) + 0.5, lo_o)
        hi = min(center + halfspan_nm, degenerate - 0.25)
    else:
        lo = max(center - halfspan_nm, degenerate + 0.25)
        hi = min(center + halfspan_nm, hi_o - 0.5)
    if hi - lo < 10 * step_nm:
        raise ResolutionError("usable grid span collapsed; widen validity or reduce step")
    return np.arange(lo, hi + step_nm / 2, step_nm)


def bandwidth_scan(config: PhaseMatchConfig, lengths_mm, arm: str = "signal",
                   step_nm: float = DEFAULT_GRID_STEP_NM) -> BandwidthScanResult:
    """Power-law fit FWHM ~ L^p over the given crystal lengths.

    Least squares on log FWHM vs log L; returns the exponent and the RMS fit
    residual in log space.
    """
    lengths = [float(x) for x in lengths_mm]
    if len(lengths) < 3:
        raise ConfigError("bandwidth scan needs at least three lengths")
    if any(x <= 0 for x in lengths):
        raise ConfigError("crystal lengths must be positive")
    log_l = np.log(lengths)
    if np.ptp(log_l) < 1e-12:
        raise DegenerateScanError("all scan lengths identical; regression is degenerate")

    widths = []
    for length in lengths:
        cfg = config.with_length(length)
        grid = default_grid(cfg, arm=arm, step_nm=step_nm)
        widths.append(spectral_density(cfg, grid, arm=arm).fwhm_nm)
    log_w = np.log(widths)
    coeffs = np.polyfit(log_l, log_w, 1)
    fit = np.polyval(coeffs, log_l)
    residual = float(np.sqrt(np.mean((log_w - fit) ** 2)))
    points = tuple(BandwidthScanPoint(l, w) for l, w in zip(lengths, widths))
    return BandwidthScanResult(points=points, exponent=float(coeffs[0]), residual=residual)
