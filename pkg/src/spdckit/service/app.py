"""FastAPI compute service wrapping the core package.

Every endpoint is a pure function of its request payload: identical requests
produce identical responses (fixed quadrature orders, seeded generators).
Domain errors map to HTTP 400 with a machine-readable error code; malformed
payloads are rejected by schema validation with 422.
"""

from __future__ import annotations

from importlib.metadata import PackageNotFoundError, version as pkg_version

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import compensation, expsim, spectrum
from ..errors import ConfigError, DomainError
from ..materials import (MaterialLibrary, ORDINARY, analytic_index_derivative,
                         default_library, extraordinary_at, group_index,
                         load_library, refractive_index, walkoff_angle)
from ..phasematch import solve_signal_idler
from . import schemas as sch


def _package_version() -> str:
    try:
        return pkg_version("spdckit")
    except PackageNotFoundError:
        return "0.0.0"


def _build_stack(req_pm: sch.PhaseMatchSpec, req_stack: sch.StackSpec,
                 library: MaterialLibrary) -> compensation.OpticalStack:
    cfg = req_pm.to_config(library)
    comp = sch.resolve_material(req_stack.compensator_material, library)
    return compensation.two_crystal_stack(
        cfg, comp,
        pump_comp_mm=req_stack.pump_comp_mm,
        pair_comp_mm=req_stack.pair_comp_mm,
        pump_sign=req_stack.pump_sign,
        pair_sign=req_stack.pair_sign,
    )


def create_app(materials_path: str | None = None) -> FastAPI:
    library = load_library(materials_path) if materials_path else default_library()
    app = FastAPI(title="spdckit service", version=_package_version())
    app.state.library = library

    @app.exception_handler(DomainError)
    async def domain_error_handler(_: Request, exc: DomainError):
        return JSONResponse(status_code=400,
                            content={"error": exc.code, "detail": str(exc)})

    @app.exception_handler(ConfigError)
    async def config_error_handler(_: Request, exc: ConfigError):
        return JSONResponse(status_code=422,
                            content={"error": exc.code, "detail": str(exc)})

    @app.get("/health", response_model=sch.HealthResponse)
    def health():
        return sch.HealthResponse(status="ok", package_version=_package_version(),
                                  materials_version=library.version)

    @app.get("/materials", response_model=sch.MaterialsResponse)
    def materials():
        infos = [
            sch.MaterialInfo(name=m.name, sign=m.sign, source=m.source,
                             range_nm=m.ordinary.range_nm)
            for m in library.materials.values()
        ]
        return sch.MaterialsResponse(materials=infos, materials_version=library.version)

    @app.post("/index", response_model=sch.IndexResponse)
    def index(req: sch.IndexRequest):
        mat = sch.resolve_material(req.material, library)
        rows = []
        for lam in req.wavelengths_nm:
            row = sch.IndexRow(
                lambda_nm=lam,
                n_o=float(refractive_index(mat, ORDINARY, lam)),
                n_e=float(refractive_index(mat, extraordinary_at(90.0), lam)),
                group_o=float(group_index(mat, ORDINARY, lam)),
                group_e=float(group_index(mat, extraordinary_at(90.0), lam)),
            )
            if req.theta_deg is not None:
                row.n_theta = float(refractive_index(
                    mat, extraordinary_at(req.theta_deg), lam))
                row.walkoff_rad = float(walkoff_angle(mat, req.theta_deg, lam))
            rows.append(row)
        return sch.IndexResponse(material=mat.name, theta_deg=req.theta_deg, rows=rows,
                                 materials_version=library.version)

    @app.post("/pm", response_model=sch.PmResponse)
    def pm(req: sch.PmRequest):
        cfg = req.phase_match.to_config(library)
        pair = solve_signal_idler(cfg)
        return sch.PmResponse(
            lambda_signal_nm=pair.lambda_signal_nm,
            lambda_idler_nm=pair.lambda_idler_nm,
            residual_delta_k_per_mm=pair.residual_per_mm,
            energy_residual_per_nm=pair.energy_residual_per_nm,
            degenerate=pair.degenerate,
            materials_version=library.version,
        )

    @app.post("/spectrum", response_model=sch.SpectrumResponse)
    def spectrum_endpoint(req: sch.SpectrumRequest):
        cfg = req.phase_match.to_config(library)
        grid = spectrum.default_grid(cfg, arm=req.arm, step_nm=req.step_nm,
                                     halfspan_nm=req.halfspan_nm)
        spec = spectrum.spectral_density(cfg, grid, arm=req.arm)
        return sch.SpectrumResponse(
            arm=spec.arm,
            lambda_nm=[float(x) for x in spec.wavelengths_nm],
            density=[float(x) for x in spec.density],
            fwhm_nm=spec.fwhm_nm,
            center_nm=spec.center_nm,
            materials_version=library.version,
        )

    @app.post("/optimize", response_model=sch.OptimizeResponse)
    def optimize(req: sch.OptimizeRequest):
        stack = _build_stack(req.phase_match, req.stack, library)
        sol = compensation.optimize_compensators(stack)
        return sch.OptimizeResponse(
            d_p_mm=sol.pump_thickness_mm,
            d_c_mm=sol.pair_thickness_mm,
            s_p=sol.pump_sign,
            s_c=sol.pair_sign,
            residual_grad=sol.residual_grad_rad_per_nm,
            center_pump_nm=sol.center_pump_nm,
            center_signal_nm=sol.center_signal_nm,
            materials_version=library.version,
        )

    @app.post("/phasemap", response_model=sch.PhaseMapResponse)
    def phasemap(req: sch.PhaseMapRequest):
        stack = _build_stack(req.phase_match, req.stack, library)
        window = (req.window.pump_halfwidth_nm, req.window.signal_halfwidth_nm)
        lp_grid, lam_grid = compensation.default_map_grids(stack, window, req.points)
        result = compensation.phase_map(stack, lp_grid, lam_grid, window)
        return sch.PhaseMapResponse(
            lambda_p_nm=[float(x) for x in result.lambda_p_nm],
            lambda_nm=[float(x) for x in result.lambda_nm],
            phi_rad=[[float(v) for v in row] for row in result.phi_rad]
            if req.include_matrix else None,
            peak_to_peak_rad=result.peak_to_peak_rad,
            center_gradients_rad_per_nm=result.center_gradients_rad_per_nm,
            window_halfwidths_nm=result.window_halfwidths_nm,
            materials_version=library.version,
        )

    @app.post("/visibility", response_model=sch.VisibilityResponse)
    def visibility(req: sch.VisibilityRequest):
        stack = _build_stack(req.phase_match, req.stack, library)
        window = (req.window.pump_halfwidth_nm, req.window.signal_halfwidth_nm)
        v = compensation.predict_visibility(stack, window, req.points)
        return sch.VisibilityResponse(visibility=v, window_halfwidths_nm=window,
                                      materials_version=library.version)

    @app.post("/scan-length", response_model=sch.ScanLengthResponse)
    def scan_length(req: sch.ScanLengthRequest):
        cfg = req.phase_match.to_config(library)
        result = spectrum.bandwidth_scan(cfg, req.lengths_mm, arm=req.arm,
                                         step_nm=req.step_nm)
        return sch.ScanLengthResponse(
            points=[sch.ScanPoint(length_mm=p.length_mm, fwhm_nm=p.fwhm_nm)
                    for p in result.points],
            exponent=result.exponent,
            residual=result.residual,
            materials_version=library.version,
        )

    @app.post("/simulate", response_model=sch.SimulateResponse)
    def simulate(req: sch.SimulateRequest):
        params = req.source.to_params()
        labels = sorted(req.settings)
        children = np.random.SeedSequence(req.seed).spawn(len(labels) + 1)
        records = []
        for label, child in zip(labels, children):
            child_seed = int(child.generate_state(1, dtype=np.uint64)[0])
            setting = req.settings[label].to_setting()
            rec = expsim.simulate_run(params, setting, child_seed)
            records.append(sch.SimRecord(
                label=label, singles1=rec.singles1, singles2=rec.singles2,
                coincidences=rec.coincidences, duration_s=rec.duration_s,
                alpha_deg=setting.alpha_deg, beta_deg=setting.beta_deg,
                seed=child_seed))
        power_rows = []
        if req.powers_mw:
            scan_seed = int(children[-1].generate_state(1, dtype=np.uint64)[0])
            open_setting = expsim.MeasurementSetting(None, None, req.power_duration_s)
            for row in expsim.rates_vs_power(params, req.powers_mw, open_setting,
                                             scan_seed):
                power_rows.append(sch.PowerRow(
                    power_mw=row.power_mw, s1=row.singles1, s2=row.singles2,
                    c_raw=row.coincidences_raw,
                    c_corrected=row.coincidences_corrected_per_s))
        return sch.SimulateResponse(records=records, power_scan=power_rows,
                                    materials_version=library.version, seed=req.seed)

    @app.post("/analyze", response_model=sch.AnalyzeResponse)
    def analyze(req: sch.AnalyzeRequest):
        by_label = {}
        for r in req.records:
            setting = expsim.MeasurementSetting(r.alpha_deg, r.beta_deg, r.duration_s)
            by_label[r.label] = expsim.CountRecord(
                r.singles1, r.singles2, r.coincidences, r.duration_s, setting, r.seed)

        corrected = {
            label: expsim.accidental_correction(rec, req.tau_ns).rate_per_s
            for label, rec in by_label.items()
        }
        visib = {}
        for basis in ("hv", "diag"):
            hi, lo = f"{basis}_max", f"{basis}_min"
            if hi in by_label and lo in by_label:
                est = expsim.visibility_from_scan(by_label[hi], by_label[lo], req.tau_ns)
                visib[basis] = sch.VisibilityOut(visibility=est.visibility,
                                                 stderr=est.stderr)
        fidelity = None
        if "hv" in visib and "diag" in visib:
            fidelity = expsim.fidelity_estimate(visib["hv"].visibility,
                                                visib["diag"].visibility)
        c_over_s = None
        coupling = None
        if "open" in by_label:
            rec = by_label["open"]
            mean_singles = 0.5 * (rec.singles1 + rec.singles2) / rec.duration_s
            if mean_singles > 0:
                c_over_s = corrected["open"] / mean_singles
                if req.detector_efficiency is not None:
                    coupling = expsim.coupling_efficiency_estimate(
                        c_over_s, req.detector_efficiency, req.losses)
        return sch.AnalyzeResponse(
            corrected_rates_per_s=corrected,
            visibilities=visib,
            fidelity=fidelity,
            c_over_s=c_over_s,
            coupling_efficiency=coupling,
            materials_version=library.version,
        )

    return app
