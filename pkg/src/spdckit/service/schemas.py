"""Pydantic request/response models for the compute service.

Materials may be referenced by name (resolved against the packaged library)
or supplied inline with full Sellmeier coefficients. All models reject
unknown fields so typos fail loudly.
"""

from __future__ import annotations

from typing import Any, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from ..errors import ConfigError
from ..materials import Material, MaterialLibrary, SellmeierForm
from ..phasematch import PhaseMatchConfig
from ..expsim import MeasurementSetting, SourceParams


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SellmeierSpec(StrictModel):
    A: float
    B: Union[float, list[float]]
    C: Union[float, list[float]]
    D: float
    range_nm: tuple[float, float]

    def to_form(self) -> SellmeierForm:
        bs = self.B if isinstance(self.B, list) else [self.B]
        cs = self.C if isinstance(self.C, list) else [self.C]
        if len(bs) != len(cs):
            raise ConfigError("Sellmeier B and C lists must have equal length")
        return SellmeierForm(a=self.A, resonances=tuple(zip(bs, cs)), d=self.D,
                             range_nm=self.range_nm)


class MaterialSpec(StrictModel):
    name: str
    sign: str
    o: SellmeierSpec
    e: SellmeierSpec
    source: str = ""

    def to_material(self) -> Material:
        return Material(name=self.name, sign=self.sign, ordinary=self.o.to_form(),
                        extraordinary=self.e.to_form(), source=self.source)


MaterialRef = Union[str, MaterialSpec]


def resolve_material(ref: MaterialRef, library: MaterialLibrary) -> Material:
    if isinstance(ref, str):
        return library.get(ref)
    return ref.to_material()


class PhaseMatchSpec(StrictModel):
    material: MaterialRef = "BBO"
    theta_p_deg: float
    length_mm: float
    pump_nm: float
    pump_fwhm_nm: float = 0.0

    def to_config(self, library: MaterialLibrary) -> PhaseMatchConfig:
        return PhaseMatchConfig(
            material=resolve_material(self.material, library),
            theta_p_deg=self.theta_p_deg,
            length_mm=self.length_mm,
            pump_nm=self.pump_nm,
            pump_fwhm_nm=self.pump_fwhm_nm,
        )


class StackSpec(StrictModel):
    compensator_material: MaterialRef = "YVO4"
    pump_comp_mm: float = 0.0
    pair_comp_mm: float = 0.0
    pump_sign: int = 1
    pair_sign: int = 1


class WindowSpec(StrictModel):
    pump_halfwidth_nm: float = 0.5
    signal_halfwidth_nm: float = 7.5


class SourceSpec(StrictModel):
    pair_rate_per_mw_hz: float
    pump_power_mw: float = 1.0
    state_phase_rad: float = 0.0
    state_visibility: float = 1.0
    wdm_routing_prob: float = 0.99
    arm1_efficiency: float = 1.0
    arm2_efficiency: float = 1.0
    coincidence_window_ns: float = 5.8
    background_fraction: float = 0.0
    depolarization_mode: str = "dephasing"

    def to_params(self) -> SourceParams:
        return SourceParams(
            pair_rate_per_mw=self.pair_rate_per_mw_hz,
            pump_power_mw=self.pump_power_mw,
            state_phase_rad=self.state_phase_rad,
            state_visibility=self.state_visibility,
            wdm_routing_prob=self.wdm_routing_prob,
            arm1_efficiency=self.arm1_efficiency,
            arm2_efficiency=self.arm2_efficiency,
            coincidence_window_ns=self.coincidence_window_ns,
            background_fraction=self.background_fraction,
            depolarization_mode=self.depolarization_mode,
        )


class SettingSpec(StrictModel):
    alpha_deg: Optional[float] = None
    beta_deg: Optional[float] = None
    duration_s: float = 1.0

    def to_setting(self) -> MeasurementSetting:
        return MeasurementSetting(self.alpha_deg, self.beta_deg, self.duration_s)


# ----------------------------------------------------------------- requests

class IndexRequest(StrictModel):
    material: MaterialRef = "BBO"
    wavelengths_nm: list[float]
    theta_deg: Optional[float] = None


class PmRequest(StrictModel):
    phase_match: PhaseMatchSpec


class SpectrumRequest(StrictModel):
    phase_match: PhaseMatchSpec
    arm: str = "signal"
    step_nm: float = 0.05
    halfspan_nm: Optional[float] = None


class OptimizeRequest(StrictModel):
    phase_match: PhaseMatchSpec
    stack: StackSpec = Field(default_factory=StackSpec)


class PhaseMapRequest(StrictModel):
    phase_match: PhaseMatchSpec
    stack: StackSpec = Field(default_factory=StackSpec)
    window: WindowSpec = Field(default_factory=WindowSpec)
    points: int = 101
    include_matrix: bool = True


class VisibilityRequest(StrictModel):
    phase_match: PhaseMatchSpec
    stack: StackSpec = Field(default_factory=StackSpec)
    window: WindowSpec = Field(default_factory=WindowSpec)
    points: int = 121


class ScanLengthRequest(StrictModel):
    phase_match: PhaseMatchSpec
    lengths_mm: list[float]
    arm: str = "signal"
    step_nm: float = 0.05


class SimulateRequest(StrictModel):
    source: SourceSpec
    settings: dict[str, SettingSpec] = Field(default_factory=dict)
    powers_mw: list[float] = Field(default_factory=list)
    power_duration_s: float = 1.0
    seed: int = 0


class RecordSpec(StrictModel):
    label: str
    singles1: int
    singles2: int
    coincidences: int
    duration_s: float
    alpha_deg: Optional[float] = None
    beta_deg: Optional[float] = None
    seed: int = 0


class AnalyzeRequest(StrictModel):
    records: list[RecordSpec]
    tau_ns: float
    detector_efficiency: Optional[float] = None
    losses: list[float] = Field(default_factory=list)


# ---------------------------------------------------------------- responses

class Envelope(StrictModel):
    materials_version: str
    seed: Optional[int] = None


class HealthResponse(StrictModel):
    status: str
    package_version: str
    materials_version: str


class MaterialInfo(StrictModel):
    name: str
    sign: str
    source: str
    range_nm: tuple[float, float]


class MaterialsResponse(Envelope):
    materials: list[MaterialInfo]


class IndexRow(StrictModel):
    lambda_nm: float
    n_o: float
    n_e: float
    n_theta: Optional[float] = None
    group_o: float
    group_e: float
    walkoff_rad: Optional[float] = None


class IndexResponse(Envelope):
    material: str
    theta_deg: Optional[float]
    rows: list[IndexRow]


class PmResponse(Envelope):
    lambda_signal_nm: float
    lambda_idler_nm: float
    residual_delta_k_per_mm: float
    energy_residual_per_nm: float
    degenerate: bool


class SpectrumResponse(Envelope):
    arm: str
    lambda_nm: list[float]
    density: list[float]
    fwhm_nm: float
    center_nm: float


class OptimizeResponse(Envelope):
    d_p_mm: float
    d_c_mm: float
    s_p: int
    s_c: int
    residual_grad: tuple[float, float]
    center_pump_nm: float
    center_signal_nm: float


class PhaseMapResponse(Envelope):
    lambda_p_nm: list[float]
    lambda_nm: list[float]
    phi_rad: Optional[list[list[float]]]
    peak_to_peak_rad: float
    center_gradients_rad_per_nm: tuple[float, float]
    window_halfwidths_nm: tuple[float, float]


class VisibilityResponse(Envelope):
    visibility: float
    window_halfwidths_nm: tuple[float, float]


class ScanPoint(StrictModel):
    length_mm: float
    fwhm_nm: float


class ScanLengthResponse(Envelope):
    points: list[ScanPoint]
    exponent: float
    residual: float


class SimRecord(StrictModel):
    label: str
    singles1: int
    singles2: int
    coincidences: int
    duration_s: float
    alpha_deg: Optional[float]
    beta_deg: Optional[float]
    seed: int


class PowerRow(StrictModel):
    power_mw: float
    s1: int
    s2: int
    c_raw: int
    c_corrected: float


class SimulateResponse(Envelope):
    records: list[SimRecord]
    power_scan: list[PowerRow]


class VisibilityOut(StrictModel):
    visibility: float
    stderr: float


class AnalyzeResponse(Envelope):
    corrected_rates_per_s: dict[str, float]
    visibilities: dict[str, VisibilityOut]
    fidelity: Optional[float]
    c_over_s: Optional[float]
    coupling_efficiency: Optional[float]


class ErrorBody(StrictModel):
    error: str
    detail: str


class SpectrumOptions(StrictModel):
    step_nm: float = 0.05
    halfspan_nm: Optional[float] = None


class SimulateOptions(StrictModel):
    scan_duration_s: float = 55.0
    power_duration_s: float = 1.0
    powers_mw: list[float] = Field(default_factory=lambda: [1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 60.0])


class IndexOptions(StrictModel):
    start_nm: float = 400.0
    stop_nm: float = 1000.0
    step_nm: float = 25.0
    theta_deg: Optional[float] = None


class ConfigFileSpec(StrictModel):
    """On-disk scenario configuration (the CLI's --config payload).

    ``metadata`` is the only free-form section; unknown fields anywhere else
    are refused so typos fail loudly.
    """

    schema_version: int = 1
    description: str = ""
    materials_file: Optional[str] = None
    phase_match: PhaseMatchSpec
    stack: StackSpec = Field(default_factory=StackSpec)
    window: WindowSpec = Field(default_factory=WindowSpec)
    spectrum: SpectrumOptions = Field(default_factory=SpectrumOptions)
    scan_lengths_mm: list[float] = Field(default_factory=lambda: [3.94, 7.88, 15.76])
    source: Optional[SourceSpec] = None
    simulate: SimulateOptions = Field(default_factory=SimulateOptions)
    index: IndexOptions = Field(default_factory=IndexOptions)
    seed: int = 0
    metadata: dict[str, Any] = Field(default_factory=dict)
