"""Command-line front end.

Thin client over the compute service: each subcommand loads a scenario
config, posts the corresponding request (in-process by default, or to
``--server URL``), and writes CSV/JSON artifacts into ``--out``. JSON
artifacts embed the materials version and the seed; writes are atomic
(write-then-rename). Exit codes: 0 success, 1 domain error, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from pydantic import ValidationError

from .client import ServiceClient
from .errors import ConfigError, DomainError
from .materials import load_library
from .service.schemas import ConfigFileSpec, MaterialSpec, SellmeierSpec


def load_config(path: str) -> ConfigFileSpec:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        cfg = ConfigFileSpec.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(f"config rejected: {exc}") from exc
    if cfg.schema_version != 1:
        raise ConfigError(f"unsupported config schema_version {cfg.schema_version}")
    return cfg


def _material_payload(ref, library_path: str | None):
    """Inline the material coefficients when a custom materials file is used."""
    if library_path is None or not isinstance(ref, str):
        return ref if isinstance(ref, str) else ref.model_dump()
    mat = load_library(library_path).get(ref)
    spec = MaterialSpec(
        name=mat.name, sign=mat.sign, source=mat.source,
        o=SellmeierSpec(A=mat.ordinary.a, B=[b for b, _ in mat.ordinary.resonances],
                        C=[c for _, c in mat.ordinary.resonances], D=mat.ordinary.d,
                        range_nm=mat.ordinary.range_nm),
        e=SellmeierSpec(A=mat.extraordinary.a, B=[b for b, _ in mat.extraordinary.resonances],
                        C=[c for _, c in mat.extraordinary.resonances], D=mat.extraordinary.d,
                        range_nm=mat.extraordinary.range_nm),
    )
    return spec.model_dump()


class RunContext:
    def __init__(self, args):
        self.args = args
        self.config = load_config(args.config)
        self.seed = args.seed if args.seed is not None else self.config.seed
        self.out_dir = Path(args.out)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        materials_file = self.config.materials_file
        if materials_file is not None:
            base = Path(args.config).parent
            materials_file = str((base / materials_file).resolve())
        self.materials_file = materials_file
        self.client = ServiceClient(base_url=args.server,
                                    materials_path=materials_file)

    def close(self):
        self.client.close()

    def phase_match_payload(self) -> dict:
        payload = self.config.phase_match.model_dump()
        payload["material"] = _material_payload(self.config.phase_match.material,
                                                self.materials_file)
        return payload

    def stack_payload(self) -> dict:
        payload = self.config.stack.model_dump()
        payload["compensator_material"] = _material_payload(
            self.config.stack.compensator_material, self.materials_file)
        return payload

    def window_payload(self) -> dict:
        return self.config.window.model_dump()

    def write_json(self, name: str, payload: dict):
        payload = dict(payload)
        if payload.get("seed") is None:
            payload["seed"] = self.seed
        atomic_write(self.out_dir / name,
                     json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def write_csv(self, name: str, header: list[str], rows):
        buf = []
        buf.append(",".join(header))
        for row in rows:
            buf.append(",".join(_fmt(v) for v in row))
        atomic_write(self.out_dir / name, "\n".join(buf) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def atomic_write(path: Path, text: str):
    tmp = path.with_name(f".{path.name}.tmp-{os.getpid()}")
    tmp.write_text(text)
    os.replace(tmp, path)


# ------------------------------------------------------------- subcommands

def cmd_index(ctx: RunContext) -> int:
    opts = ctx.config.index
    n = max(2, int(round((opts.stop_nm - opts.start_nm) / opts.step_nm)) + 1)
    wavelengths = [opts.start_nm + i * opts.step_nm for i in range(n)
                   if opts.start_nm + i * opts.step_nm <= opts.stop_nm + 1e-9]
    resp = ctx.client.index({
        "material": ctx.phase_match_payload()["material"],
        "wavelengths_nm": wavelengths,
        "theta_deg": opts.theta_deg if opts.theta_deg is not None
        else ctx.config.phase_match.theta_p_deg,
    })
    header = ["lambda_nm", "n_o", "n_e", "n_theta", "group_o", "group_e", "walkoff_rad"]
    rows = [[r["lambda_nm"], r["n_o"], r["n_e"], r.get("n_theta", ""),
             r["group_o"], r["group_e"], r.get("walkoff_rad", "")]
            for r in resp["rows"]]
    ctx.write_csv("index.csv", header, rows)
    ctx.write_json("index.json", {k: v for k, v in resp.items() if k != "rows"})
    print(f"wrote {ctx.out_dir / 'index.csv'} ({len(rows)} rows)")
    return 0


def cmd_pm(ctx: RunContext) -> int:
    resp = ctx.client.pm({"phase_match": ctx.phase_match_payload()})
    ctx.write_json("pm.json", resp)
    print(f"lambda_signal = {resp['lambda_signal_nm']:.3f} nm, "
          f"lambda_idler = {resp['lambda_idler_nm']:.3f} nm"
          + (" (degenerate)" if resp["degenerate"] else ""))
    return 0


def cmd_spectrum(ctx: RunContext) -> int:
    summary = {}
    for arm in ("signal", "idler"):
        resp = ctx.client.spectrum({
            "phase_match": ctx.phase_match_payload(),
            "arm": arm,
            "step_nm": ctx.config.spectrum.step_nm,
            "halfspan_nm": ctx.config.spectrum.halfspan_nm,
        })
        ctx.write_csv(f"spectrum_{arm}.csv", ["lambda_nm", "density"],
                      zip(resp["lambda_nm"], resp["density"]))
        summary[arm] = {"fwhm_nm": resp["fwhm_nm"], "center_nm": resp["center_nm"]}
        print(f"{arm}: FWHM = {resp['fwhm_nm']:.3f} nm at {resp['center_nm']:.2f} nm")
    summary["materials_version"] = resp["materials_version"]
    ctx.write_json("spectrum.json", summary)
    return 0


def cmd_optimize(ctx: RunContext) -> int:
    resp = ctx.client.optimize({
        "phase_match": ctx.phase_match_payload(),
        "stack": ctx.stack_payload(),
    })
    ctx.write_json("optimize.json", resp)
    print(f"d_p = {resp['d_p_mm']:.4f} mm (s_p={resp['s_p']:+d}), "
          f"d_c = {resp['d_c_mm']:.4f} mm (s_c={resp['s_c']:+d})")
    return 0


def _phasemap_request(ctx: RunContext, stack_payload: dict) -> dict:
    return {
        "phase_match": ctx.phase_match_payload(),
        "stack": stack_payload,
        "window": ctx.window_payload(),
        "points": 101,
        "include_matrix": True,
    }


def cmd_phasemap(ctx: RunContext) -> int:
    stack_payload = ctx.stack_payload()
    if ctx.args.optimized:
        opt = ctx.client.optimize({"phase_match": ctx.phase_match_payload(),
                                   "stack": stack_payload})
        stack_payload.update(pump_comp_mm=opt["d_p_mm"], pair_comp_mm=opt["d_c_mm"],
                             pump_sign=opt["s_p"], pair_sign=opt["s_c"])
    resp = ctx.client.phasemap(_phasemap_request(ctx, stack_payload))
    rows = []
    for i, lp in enumerate(resp["lambda_p_nm"]):
        for j, lam in enumerate(resp["lambda_nm"]):
            rows.append([lp, lam, resp["phi_rad"][i][j]])
    ctx.write_csv("phasemap.csv", ["lambda_p_nm", "lambda_nm", "phi_rad"], rows)
    ctx.write_json("phasemap.json", {k: v for k, v in resp.items() if k != "phi_rad"})
    print(f"peak-to-peak over window = {resp['peak_to_peak_rad']:.4g} rad")
    return 0


def cmd_visibility(ctx: RunContext) -> int:
    stack_payload = ctx.stack_payload()
    if ctx.args.optimized:
        opt = ctx.client.optimize({"phase_match": ctx.phase_match_payload(),
                                   "stack": stack_payload})
        stack_payload.update(pump_comp_mm=opt["d_p_mm"], pair_comp_mm=opt["d_c_mm"],
                             pump_sign=opt["s_p"], pair_sign=opt["s_c"])
    resp = ctx.client.visibility({
        "phase_match": ctx.phase_match_payload(),
        "stack": stack_payload,
        "window": ctx.window_payload(),
    })
    ctx.write_json("visibility.json", resp)
    print(f"predicted visibility = {resp['visibility']:.5f}")
    return 0


def cmd_scan_length(ctx: RunContext) -> int:
    resp = ctx.client.scan_length({
        "phase_match": ctx.phase_match_payload(),
        "lengths_mm": ctx.config.scan_lengths_mm,
        "step_nm": ctx.config.spectrum.step_nm,
    })
    ctx.write_csv("scan.csv", ["L_mm", "fwhm_nm"],
                  [[p["length_mm"], p["fwhm_nm"]] for p in resp["points"]])
    ctx.write_json("scan.json", {k: v for k, v in resp.items() if k != "points"})
    print(f"fitted exponent = {resp['exponent']:.4f} (residual {resp['residual']:.4f})")
    return 0


def _scan_settings(duration_s: float) -> dict:
    return {
        "hv_max": {"alpha_deg": 0.0, "beta_deg": 0.0, "duration_s": duration_s},
        "hv_min": {"alpha_deg": 0.0, "beta_deg": 90.0, "duration_s": duration_s},
        "diag_max": {"alpha_deg": 45.0, "beta_deg": 45.0, "duration_s": duration_s},
        "diag_min": {"alpha_deg": 45.0, "beta_deg": 135.0, "duration_s": duration_s},
        "open": {"alpha_deg": None, "beta_deg": None, "duration_s": duration_s},
    }


def cmd_simulate(ctx: RunContext) -> int:
    if ctx.config.source is None:
        raise ConfigError("config lacks the source section required by simulate")
    opts = ctx.config.simulate
    resp = ctx.client.simulate({
        "source": ctx.config.source.model_dump(),
        "settings": _scan_settings(opts.scan_duration_s),
        "powers_mw": opts.powers_mw,
        "power_duration_s": opts.power_duration_s,
        "seed": ctx.seed,
    })
    ctx.write_csv("rates.csv", ["power_mw", "s1", "s2", "c_raw", "c_corrected"],
                  [[r["power_mw"], r["s1"], r["s2"], r["c_raw"], r["c_corrected"]]
                   for r in resp["power_scan"]])
    ctx.write_json("records.json", {
        "records": resp["records"],
        "materials_version": resp["materials_version"],
        "tau_ns": ctx.config.source.coincidence_window_ns,
    })
    print(f"wrote {ctx.out_dir / 'rates.csv'} ({len(resp['power_scan'])} powers) "
          f"and records.json ({len(resp['records'])} records)")
    return 0


def cmd_analyze(ctx: RunContext) -> int:
    records_path = Path(ctx.args.records) if ctx.args.records \
        else ctx.out_dir / "records.json"
    if not records_path.is_file():
        raise ConfigError(f"records file not found: {records_path} (run simulate first)")
    doc = json.loads(records_path.read_text())
    meta = ctx.config.metadata
    losses = list(meta.get("loss_budget", {}).values())
    detector = meta.get("detector_efficiency")
    resp = ctx.client.analyze({
        "records": doc["records"],
        "tau_ns": doc.get("tau_ns", ctx.config.source.coincidence_window_ns
                          if ctx.config.source else 5.8),
        "detector_efficiency": detector,
        "losses": losses,
    })
    ctx.write_json("summary.json", resp)
    for basis, v in resp["visibilities"].items():
        print(f"V_{basis} = {v['visibility']:.4f} +- {v['stderr']:.4f}")
    if resp.get("fidelity") is not None:
        print(f"fidelity estimate = {resp['fidelity']:.4f}")
    if resp.get("coupling_efficiency") is not None:
        print(f"coupling efficiency = {resp['coupling_efficiency']:.4f}")
    return 0


def cmd_repro_all(ctx: RunContext) -> int:
    from .acceptance import run_all
    results = run_all(ctx.config, materials_path=ctx.materials_file)
    rows = []
    all_passed = True
    for r in results:
        all_passed &= r.passed
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] criterion {r.number} ({r.name}): {r.computed}  "
              f"[target: {r.target}]  ({r.elapsed_s:.2f}s)")
        rows.append(dataclasses.asdict(r))
    resp = ctx.client.health()
    ctx.write_json("report.json", {
        "criteria": rows,
        "all_passed": all_passed,
        "materials_version": resp["materials_version"],
    })
    print(f"report written to {ctx.out_dir / 'report.json'}; "
          + ("all criteria passed" if all_passed else "some criteria FAILED"))
    return 0 if all_passed else 1


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(args.materials), host=args.host, port=args.port)
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spdckit",
        description="Design and analysis toolkit for collinear two-crystal "
                    "entangled-photon-pair sources.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, optimized_flag=False, records_flag=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="scenario config JSON")
        p.add_argument("--out", default="out", help="artifact output directory")
        p.add_argument("--seed", type=int, default=None, help="seed override (u64)")
        p.add_argument("--server", default=None,
                       help="base URL of a running service (default: in-process)")
        if optimized_flag:
            p.add_argument("--optimized", action="store_true",
                           help="apply optimized compensator thicknesses first")
        if records_flag:
            p.add_argument("--records", default=None,
                           help="records JSON from a simulate run")
        p.set_defaults(handler=fn)
        return p

    add("index", cmd_index, "tabulate refractive indices and walk-off")
    add("pm", cmd_pm, "solve collinear signal/idler wavelengths")
    add("spectrum", cmd_spectrum, "simulate both arm spectra")
    add("phasemap", cmd_phasemap, "sample the relative-phase map", optimized_flag=True)
    add("optimize", cmd_optimize, "solve compensator thicknesses")
    add("visibility", cmd_visibility, "predict spectrally averaged visibility",
        optimized_flag=True)
    add("simulate", cmd_simulate, "Monte Carlo counting simulation")
    add("analyze", cmd_analyze, "analyze counting records", records_flag=True)
    add("scan-length", cmd_scan_length, "bandwidth-vs-length power-law fit")
    add("repro-all", cmd_repro_all, "run the full reference acceptance suite")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--materials", default=None, help="materials JSON override")
    serve.set_defaults(handler=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0

    if args.command == "serve":
        return cmd_serve(args)

    ctx = None
    try:
        ctx = RunContext(args)
        return args.handler(ctx)
    except DomainError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    finally:
        if ctx is not None:
            ctx.close()


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
