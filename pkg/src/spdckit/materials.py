"""Dispersion engine for uniaxial crystals.

Principal refractive indices come from Sellmeier fits of the form

    n^2(lam) = A + sum_i B_i / (lam^2 - C_i) - D * lam^2      (lam in um)

stored in a versioned JSON data file (see ``data/materials.json``). External
interfaces use nanometers; the micrometer convention of the fit is internal.

The extraordinary index at angle ``theta`` between wave vector and optic axis
follows the uniaxial index ellipsoid:

    1 / n(theta)^2 = cos(theta)^2 / n_o^2 + sin(theta)^2 / n_e^2

Derivatives use a central difference whose ``step`` is the separation of the
two sample points (evaluations at lam +/- step/2); an analytic derivative of
the Sellmeier form is provided alongside as an independent cross-check.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, WavelengthRangeError

DEFAULT_DERIVATIVE_STEP_NM = 0.1


@dataclass(frozen=True)
class SellmeierForm:
    """One principal index: n^2 = A + sum B_i/(lam_um^2 - C_i) - D lam_um^2."""

    a: float
    resonances: tuple[tuple[float, float], ...]  # (B_i, C_i) pairs
    d: float
    range_nm: tuple[float, float]

    def check_range(self, lam_nm, material_name: str):
        lo, hi = self.range_nm
        lam = np.asarray(lam_nm, dtype=float)
        if np.any(lam < lo) or np.any(lam > hi):
            bad = float(np.atleast_1d(lam)[(np.atleast_1d(lam) < lo) | (np.atleast_1d(lam) > hi)][0])
            raise WavelengthRangeError(
                f"{bad:g} nm outside validity range [{lo:g}, {hi:g}] nm of {material_name}"
            )

    def index(self, lam_nm):
        u = (np.asarray(lam_nm, dtype=float) / 1000.0) ** 2
        n2 = self.a - self.d * u
        for b, c in self.resonances:
            n2 = n2 + b / (u - c)
        return np.sqrt(n2)

    def index_derivative(self, lam_nm):
        """Analytic dn/dlam in 1/nm."""
        lam_um = np.asarray(lam_nm, dtype=float) / 1000.0
        u = lam_um**2
        dn2_du = -self.d + 0.0 * u
        for b, c in self.resonances:
            dn2_du = dn2_du - b / (u - c) ** 2
        # dn/dlam_um = lam_um * (dn2/du) / n ; convert to 1/nm
        return lam_um * dn2_du / self.index(lam_nm) / 1000.0


@dataclass(frozen=True)
class Material:
    """Named uniaxial crystal with both principal Sellmeier fits."""

    name: str
    sign: str  # "negative" (n_e < n_o) or "positive" (n_e > n_o)
    ordinary: SellmeierForm
    extraordinary: SellmeierForm
    source: str = ""

    def __post_init__(self):
        if self.sign not in ("negative", "positive"):
            raise ConfigError(f"uniaxial sign must be 'negative' or 'positive', got {self.sign!r}")


@dataclass(frozen=True)
class Polarization:
    """Ordinary wave, or extraordinary wave at an angle to the optic axis."""

    kind: str  # "ordinary" | "extraordinary"
    theta_deg: float | None = None

    def __post_init__(self):
        if self.kind not in ("ordinary", "extraordinary"):
            raise ConfigError(f"unknown polarization kind {self.kind!r}")
        if self.kind == "extraordinary":
            if self.theta_deg is None or not 0.0 <= self.theta_deg <= 90.0:
                raise ConfigError("extraordinary polarization needs theta in [0, 90] degrees")


ORDINARY = Polarization("ordinary")


def extraordinary_at(theta_deg: float) -> Polarization:
    return Polarization("extraordinary", theta_deg)


def refractive_index(material: Material, pol: Polarization, lam_nm):
    """Phase index for the given polarization at ``lam_nm``."""
    if pol.kind == "ordinary":
        material.ordinary.check_range(lam_nm, material.name)
        return material.ordinary.index(lam_nm)
    material.ordinary.check_range(lam_nm, material.name)
    material.extraordinary.check_range(lam_nm, material.name)
    n_o = material.ordinary.index(lam_nm)
    n_e = material.extraordinary.index(lam_nm)
    theta = np.radians(pol.theta_deg)
    return 1.0 / np.sqrt((np.cos(theta) / n_o) ** 2 + (np.sin(theta) / n_e) ** 2)


def index_derivative(material: Material, pol: Polarization, lam_nm,
                     step_nm: float = DEFAULT_DERIVATIVE_STEP_NM):
    """dn/dlam in 1/nm by central difference over ``step_nm``.

    The two samples sit at lam +/- step/2, so both must lie inside the
    material's validity range.
    """
    h = 0.5 * step_nm
    return (refractive_index(material, pol, np.asarray(lam_nm) + h)
            - refractive_index(material, pol, np.asarray(lam_nm) - h)) / step_nm


def analytic_index_derivative(material: Material, pol: Polarization, lam_nm):
    """Closed-form dn/dlam in 1/nm from the Sellmeier fit."""
    if pol.kind == "ordinary":
        material.ordinary.check_range(lam_nm, material.name)
        return material.ordinary.index_derivative(lam_nm)
    material.ordinary.check_range(lam_nm, material.name)
    material.extraordinary.check_range(lam_nm, material.name)
    n_o = material.ordinary.index(lam_nm)
    n_e = material.extraordinary.index(lam_nm)
    do = material.ordinary.index_derivative(lam_nm)
    de = material.extraordinary.index_derivative(lam_nm)
    theta = np.radians(pol.theta_deg)
    n = 1.0 / np.sqrt((np.cos(theta) / n_o) ** 2 + (np.sin(theta) / n_e) ** 2)
    return n**3 * (np.cos(theta) ** 2 * do / n_o**3 + np.sin(theta) ** 2 * de / n_e**3)


def group_index(material: Material, pol: Polarization, lam_nm,
                step_nm: float = DEFAULT_DERIVATIVE_STEP_NM):
    """n_g = n - lam * dn/dlam."""
    lam = np.asarray(lam_nm, dtype=float)
    return refractive_index(material, pol, lam) - lam * index_derivative(
        material, pol, lam, step_nm=step_nm)


def walkoff_angle(material: Material, theta_deg: float, lam_nm) -> float:
    """Walk-off angle rho in radians between Poynting vector and wave vector.

    rho(theta) = arctan[(n_o/n_e)^2 tan(theta)] - theta. Positive for a
    negative uniaxial crystal (energy walks away from the optic axis);
    negative for a positive uniaxial one.
    """
    if not 0.0 <= theta_deg <= 90.0:
        raise ConfigError("walk-off angle requires theta in [0, 90] degrees")
    material.ordinary.check_range(lam_nm, material.name)
    material.extraordinary.check_range(lam_nm, material.name)
    n_o = material.ordinary.index(lam_nm)
    n_e = material.extraordinary.index(lam_nm)
    theta = np.radians(theta_deg)
    return np.arctan((n_o / n_e) ** 2 * np.tan(theta)) - theta


def lateral_displacement(material: Material, theta_deg: float, lam_nm,
                         length_mm: float) -> float:
    """Transverse displacement L*tan(rho) of the extraordinary beam, in mm."""
    return length_mm * np.tan(walkoff_angle(material, theta_deg, lam_nm))


# ---------------------------------------------------------------------------
# materials data file

def _parse_form(entry: dict) -> SellmeierForm:
    b = entry["B"]
    c = entry["C"]
    bs = b if isinstance(b, list) else [b]
    cs = c if isinstance(c, list) else [c]
    if len(bs) != len(cs):
        raise ConfigError("Sellmeier B and C lists must have equal length")
    lo, hi = entry["range_nm"]
    return SellmeierForm(
        a=float(entry["A"]),
        resonances=tuple((float(bi), float(ci)) for bi, ci in zip(bs, cs)),
        d=float(entry["D"]),
        range_nm=(float(lo), float(hi)),
    )


def _parse_material(entry: dict) -> Material:
    return Material(
        name=entry["name"],
        sign=entry["sign"],
        ordinary=_parse_form(entry["o"]),
        extraordinary=_parse_form(entry["e"]),
        source=entry.get("source", ""),
    )


@dataclass(frozen=True)
class MaterialLibrary:
    version: str
    materials: dict = field(default_factory=dict)

    def get(self, name: str) -> Material:
        try:
            return self.materials[name]
        except KeyError:
            raise ConfigError(
                f"unknown material {name!r}; available: {sorted(self.materials)}") from None


def load_library(path: str | Path | None = None) -> MaterialLibrary:
    """Load a materials data file; ``None`` loads the packaged defaults."""
    if path is None:
        raw = resources.files("spdckit").joinpath("data/materials.json").read_text()
    else:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"materials file not found: {p}")
        raw = p.read_text()
    try:
        doc = json.loads(raw)
        lib = MaterialLibrary(
            version=str(doc["version"]),
            materials={m["name"]: _parse_material(m) for m in doc["materials"]},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed materials file: {exc}") from exc
    return lib


_default_library: MaterialLibrary | None = None


def default_library() -> MaterialLibrary:
    global _default_library
    if _default_library is None:
        _default_library = load_library(None)
    return _default_library
