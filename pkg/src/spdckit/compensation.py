"""Two-process relative phase, compensator optimization, visibility.

In the two-crystal source a pair born in the second crystal rides on pump
light that first crossed crystal 1 as an ordinary wave, while a pair born in
the first crystal crosses crystal 2 with both photons polarized in the plane
of that crystal's optic axis (extraordinary at the cut angle). The creation-
position phase integrates to the same sinc factor for both processes and
drops out of their difference, leaving

    phi = 2 pi { s_p dn_c(lam_p) d_p / lam_p
               + [ n_o(lam_p)/lam_p - n(th_p,lam1)/lam1 - n(th_p,lam2)/lam2 ] L
               + s_c [ dn_c(lam1)/lam1 + dn_c(lam2)/lam2 ] d_c }

where dn_c = n_e - n_o of the compensator crystals (cut at 90 degrees, both
principal indices act directly, no walk-off), d_p / d_c are the pump-path
and pair-path compensator thicknesses and s_p / s_c their orientation signs.
phi is affine in the thicknesses, so zeroing both spectral slopes at the
operating point is an exact 2x2 linear solve.

A constant global phase offset is physically irrelevant; maps subtract their
center value.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (InvalidStackError, SingularSystemError, ZeroWeightError)
from .materials import Material, ORDINARY, extraordinary_at, refractive_index
from .phasematch import (PhaseMatchConfig, conjugate_wavelength, delta_k,
                         solve_signal_idler)

GRADIENT_BASE_STEP_NM = 0.05
DEFAULT_WINDOW_NM = (0.5, 7.5)   # half-widths: pump axis, photon axis
_FWHM_TO_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))


class Segment(str, Enum):
    PUMP_PATH = "pump_path"
    PAIR_PATH = "pair_path"
    CRYSTAL_1 = "downconversion_crystal_1"
    CRYSTAL_2 = "downconversion_crystal_2"


class AxisPlane(str, Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


@dataclass(frozen=True)
class StackElement:
    material: Material
    thickness_mm: float
    segment: Segment
    axis_plane: AxisPlane
    orientation_sign: int = 1

    def __post_init__(self):
        if self.thickness_mm < 0:
            raise InvalidStackError("element thickness must be nonnegative")
        if self.orientation_sign not in (-1, 1):
            raise InvalidStackError("orientation sign must be +1 or -1")


@dataclass(frozen=True)
class OpticalStack:
    """Ordered birefringent elements around one PhaseMatchConfig."""

    config: PhaseMatchConfig
    elements: tuple[StackElement, ...]

    def __post_init__(self):
        crystals = [e for e in self.elements
                    if e.segment in (Segment.CRYSTAL_1, Segment.CRYSTAL_2)]
        ones = [e for e in crystals if e.segment == Segment.CRYSTAL_1]
        twos = [e for e in crystals if e.segment == Segment.CRYSTAL_2]
        if len(ones) != 1 or len(twos) != 1:
            raise InvalidStackError("stack needs exactly one element per down-conversion crystal")
        c1, c2 = ones[0], twos[0]
        if c1.material.name != c2.material.name or c1.thickness_mm != c2.thickness_mm:
            raise InvalidStackError("down-conversion crystals must share material and thickness")
        if c1.thickness_mm != self.config.length_mm:
            raise InvalidStackError("down-conversion crystal thickness must match the config length")

    def _path(self, segment: Segment) -> list[StackElement]:
        return [e for e in self.elements if e.segment == segment]

    @property
    def pump_compensators(self) -> list[StackElement]:
        return self._path(Segment.PUMP_PATH)

    @property
    def pair_compensators(self) -> list[StackElement]:
        return self._path(Segment.PAIR_PATH)

    def with_compensators(self, pump_mm: float, pair_mm: float,
                          pump_sign: int, pair_sign: int) -> "OpticalStack":
        """Copy of the stack with the designated compensators replaced."""
        pump_seen = pair_seen = False
        out = []
        for e in self.elements:
            if e.segment is Segment.PUMP_PATH and not pump_seen:
                out.append(replace(e, thickness_mm=pump_mm, orientation_sign=pump_sign))
                pump_seen = True
            elif e.segment is Segment.PAIR_PATH and not pair_seen:
                out.append(replace(e, thickness_mm=pair_mm, orientation_sign=pair_sign))
                pair_seen = True
            else:
                out.append(e)
        if not (pump_seen and pair_seen):
            raise InvalidStackError("stack lacks a pump-path or pair-path compensator element")
        return OpticalStack(self.config, tuple(out))


def two_crystal_stack(config: PhaseMatchConfig, compensator: Material,
                      pump_comp_mm: float = 0.0, pair_comp_mm: float = 0.0,
                      pump_sign: int = 1, pair_sign: int = 1) -> OpticalStack:
    """Canonical source layout: pump compensator, two crossed crystals, pair compensator."""
    return OpticalStack(config, (
        StackElement(compensator, pump_comp_mm, Segment.PUMP_PATH, AxisPlane.VERTICAL, pump_sign),
        StackElement(config.material, config.length_mm, Segment.CRYSTAL_1, AxisPlane.VERTICAL),
        StackElement(config.material, config.length_mm, Segment.CRYSTAL_2, AxisPlane.HORIZONTAL),
        StackElement(compensator, pair_comp_mm, Segment.PAIR_PATH, AxisPlane.VERTICAL, pair_sign),
    ))


def _birefringence(material: Material, lam_nm):
    return (refractive_index(material, extraordinary_at(90.0), lam_nm)
            - refractive_index(material, ORDINARY, lam_nm))


def relative_phase(stack: OpticalStack, pump_nm, signal_nm):
    """Relative phase (radians) between the two emission processes."""
    cfg = stack.config
    lam_p = np.asarray(pump_nm, dtype=float)
    lam1 = np.asarray(signal_nm, dtype=float)
    lam2 = conjugate_wavelength(lam_p, lam1)

    pol_pair = extraordinary_at(cfg.theta_p_deg)
    core = (refractive_index(cfg.material, ORDINARY, lam_p) / lam_p
            - refractive_index(cfg.material, pol_pair, lam1) / lam1
            - refractive_index(cfg.material, pol_pair, lam2) / lam2) * cfg.length_mm

    pump_term = 0.0
    for e in stack.pump_compensators:
        pump_term = pump_term + e.orientation_sign * _birefringence(e.material, lam_p) \
            / lam_p * e.thickness_mm
    pair_term = 0.0
    for e in stack.pair_compensators:
        pair_term = pair_term + e.orientation_sign * (
            _birefringence(e.material, lam1) / lam1
            + _birefringence(e.material, lam2) / lam2) * e.thickness_mm

    # mm * nm^-1 -> radians
    return 2.0 * np.pi * 1.0e6 * (core + pump_term + pair_term)


def phase_gradients(stack: OpticalStack, pump_nm: float, signal_nm: float,
                    base_step_nm: float = GRADIENT_BASE_STEP_NM) -> np.ndarray:
    """(d phi/d lam_p, d phi/d lam1) in rad/nm.

    Richardson-extrapolated central differences: two stencils with sample
    separations ``base_step`` and ``base_step/2``, combined to cancel the
    leading error term.
    """
    def central(f, x, h):
        return (f(x + h / 2) - f(x - h / 2)) / h

    out = []
    for axis in (0, 1):
        def f(x):
            args = [pump_nm, signal_nm]
            args[axis] = x
            return relative_phase(stack, *args)
        x0 = (pump_nm, signal_nm)[axis]
        g1 = central(f, x0, base_step_nm)
        g2 = central(f, x0, base_step_nm / 2)
        out.append((4.0 * g2 - g1) / 3.0)
    return np.array(out)


@dataclass(frozen=True)
class CompensatorSolution:
    pump_thickness_mm: float
    pair_thickness_mm: float
    pump_sign: int
    pair_sign: int
    residual_grad_rad_per_nm: tuple[float, float]
    center_pump_nm: float
    center_signal_nm: float
    stack: OpticalStack


def optimize_compensators(stack: OpticalStack) -> CompensatorSolution:
    """Thicknesses that flatten the phase map at the operating point.

    Zeroes both first-order spectral slopes of the relative phase at the
    solved collinear pair. Because the phase is affine in the two thicknesses
    the conditions form an exact 2x2 linear system in the signed thicknesses;
    orientation signs are chosen afterwards to make both thicknesses
    nonnegative.
    """
    cfg = stack.config
    pair = solve_signal_idler(cfg)
    lp0, l10 = cfg.pump_nm, pair.lambda_signal_nm

    def grads(pump_mm: float, pair_mm: float) -> np.ndarray:
        s = stack.with_compensators(pump_mm, pair_mm, 1, 1)
        return phase_gradients(s, lp0, l10)

    g00 = grads(0.0, 0.0)
    col_pump = grads(1.0, 0.0) - g00
    col_pair = grads(0.0, 1.0) - g00
    matrix = np.column_stack([col_pump, col_pair])
    scale = np.max(np.abs(matrix))
    if scale == 0.0 or abs(np.linalg.det(matrix)) < 1e-12 * scale**2:
        raise SingularSystemError(
            "compensator thickness directions are linearly dependent at the operating point")
    signed = np.linalg.solve(matrix, -g00)

    pump_sign = 1 if signed[0] >= 0 else -1
    pair_sign = 1 if signed[1] >= 0 else -1
    pump_mm, pair_mm = abs(float(signed[0])), abs(float(signed[1]))
    solved = stack.with_compensators(pump_mm, pair_mm, pump_sign, pair_sign)
    residual = phase_gradients(solved, lp0, l10)
    return CompensatorSolution(
        pump_thickness_mm=pump_mm,
        pair_thickness_mm=pair_mm,
        pump_sign=pump_sign,
        pair_sign=pair_sign,
        residual_grad_rad_per_nm=(float(residual[0]), float(residual[1])),
        center_pump_nm=lp0,
        center_signal_nm=l10,
        stack=solved,
    )


@dataclass(frozen=True)
class PhaseMap:
    lambda_p_nm: np.ndarray
    lambda_nm: np.ndarray
    phi_rad: np.ndarray              # shape (len(lambda_p), len(lambda))
    window_halfwidths_nm: tuple[float, float]
    peak_to_peak_rad: float          # over the stated window
    center_gradients_rad_per_nm: tuple[float, float]

    def to_csv(self, path: str | Path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lambda_p_nm", "lambda_nm", "phi_rad"])
            for i, lp in enumerate(self.lambda_p_nm):
                for j, lam in enumerate(self.lambda_nm):
                    writer.writerow([f"{lp:.10g}", f"{lam:.10g}", f"{self.phi_rad[i, j]:.12g}"])


def phase_map(stack: OpticalStack, lambda_p_grid, lambda_grid,
              window_halfwidths_nm: tuple[float, float] = DEFAULT_WINDOW_NM) -> PhaseMap:
    """Sampled phase surface with the center value suppressed.

    The peak-to-peak summary is taken over the sub-grid within the stated
    half-widths of the grid center; gradients are evaluated at the center.
    """
    lp = np.asarray(lambda_p_grid, dtype=float)
    lam = np.asarray(lambda_grid, dtype=float)
    lp0 = 0.5 * (lp[0] + lp[-1])
    lam0 = 0.5 * (lam[0] + lam[-1])
    phi = relative_phase(stack, lp[:, None], lam[None, :])
    phi = phi - relative_phase(stack, lp0, lam0)

    wp, wl = window_halfwidths_nm
    sel_p = np.abs(lp - lp0) <= wp + 1e-12
    sel_l = np.abs(lam - lam0) <= wl + 1e-12
    window = phi[np.ix_(sel_p, sel_l)]
    grads = phase_gradients(stack, lp0, lam0)
    return PhaseMap(
        lambda_p_nm=lp,
        lambda_nm=lam,
        phi_rad=phi,
        window_halfwidths_nm=(float(wp), float(wl)),
        peak_to_peak_rad=float(window.max() - window.min()),
        center_gradients_rad_per_nm=(float(grads[0]), float(grads[1])),
    )


def default_map_grids(stack: OpticalStack,
                      window_halfwidths_nm: tuple[float, float] = DEFAULT_WINDOW_NM,
                      points: int = 101) -> tuple[np.ndarray, np.ndarray]:
    """Odd symmetric grids spanning the metric window around the operating point."""
    pair = solve_signal_idler(stack.config)
    wp, wl = window_halfwidths_nm
    lp0 = stack.config.pump_nm
    l10 = pair.lambda_signal_nm
    return (np.linspace(lp0 - wp, lp0 + wp, points),
            np.linspace(l10 - wl, l10 + wl, points))


def predict_visibility(stack: OpticalStack,
                       window_halfwidths_nm: tuple[float, float] = DEFAULT_WINDOW_NM,
                       points: int = 121, phase_offset_rad: float = 0.0) -> float:
    """Spectrally averaged two-photon visibility over the metric window.

    V = | integral S e^{i phi} | / integral S with the joint weight
    S(lam_p, lam1) = g(lam_p) sinc^2(dk L / 2), integrated by composite
    Simpson on the window around the solved operating point.
    ``phase_offset_rad`` adds a constant bias to the phase surface; the
    result is invariant under it (global phase).
    """
    cfg = stack.config
    pair = solve_signal_idler(cfg)
    lp0, l10 = cfg.pump_nm, pair.lambda_signal_nm
    wp, wl = window_halfwidths_nm
    if points % 2 == 0:
        points += 1

    lam = np.linspace(l10 - wl, l10 + wl, points)
    w_simp = np.ones(points)
    w_simp[1:-1:2] = 4.0
    w_simp[2:-1:2] = 2.0

    length_nm = cfg.length_mm * 1.0e6
    if cfg.pump_fwhm_nm == 0.0:
        dk = delta_k(cfg, lp0, lam)
        weight = np.sinc(dk * 1.0e-6 * length_nm / 2.0 / np.pi) ** 2 * w_simp
        phi = relative_phase(stack, lp0, lam) + phase_offset_rad
    else:
        sigma = cfg.pump_fwhm_nm / _FWHM_TO_SIGMA
        lp = np.linspace(lp0 - wp, lp0 + wp, points)
        gauss = np.exp(-0.5 * ((lp - lp0) / sigma) ** 2)
        dk = delta_k(cfg, lp[:, None], lam[None, :])
        weight = (np.sinc(dk * 1.0e-6 * length_nm / 2.0 / np.pi) ** 2
                  * gauss[:, None] * np.outer(w_simp, w_simp))
        phi = relative_phase(stack, lp[:, None], lam[None, :]) + phase_offset_rad

    total = weight.sum()
    if total <= 0.0 or not np.isfinite(total):
        raise ZeroWeightError("spectral weight vanishes over the requested window")
    return float(np.abs((weight * np.exp(1j * phi)).sum()) / total)
