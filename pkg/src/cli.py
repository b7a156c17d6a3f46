"""Command-line front end: simulate, extract, theory and fullrun.

Exit codes:
    0  success, including degenerate-but-valid outcomes
    2  usage, parse or settings errors
    3  inconsistent data or an ambiguous geodesic
    4  fullrun discrepancy above tolerance
"""

import argparse
import logging
import math
import sys
from collections.abc import Callable, Sequence
from datetime import UTC, datetime
from typing import Any, NotRequired, TypedDict

import numpy as np

from config import Settings, __version__, load_settings
from errors import (
    AmbiguousGeodesicError,
    ConfigError,
    DomainError,
    InconsistentDataError,
    TraceFormatError,
    ValidationError,
)
from extraction import ExtractionResult, Status, blind_estimate, estimate_from_traces
from polarimeter import (
    CountTrace,
    HardwareConfig,
    IntensityTrace,
    SweepConfig,
    analyzer_sweep,
    analyzer_unitary,
    find_extrema,
    simulate_analyzer_counts,
    simulate_counts,
    sweep_eta,
    sweep_translation,
)
from spinops import SU2Params, check_polarization, su2_from_params
from theory import (
    geodesic_unitary,
    geometric_phase_prediction,
    mixed_extrema,
    mixed_phase_visibility,
    pure_extrema,
    pure_phase_visibility,
    solid_angle,
    solid_angle_fan,
)
from trace_io import read_path_file, read_trace_csv, write_json, write_trace_csv

logger = logging.getLogger("polarimetry")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INCONSISTENT = 3
EXIT_REGRESSION = 4

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


class UsageError(Exception):
    """Flag values that parse but make no sense together."""


class TheoryBlock(TypedDict):
    phi: float | None
    nu: float
    cos2_phi: float | None
    Phi: float | None
    V: float
    cos2_Phi: float | None
    i_min: float
    i_max: float


class MeasuredBlock(TypedDict):
    i_min_rho: float
    i_max_rho: float
    i_min_analyzer: float
    i_max_analyzer: float
    r_hat: float
    cos2_Phi: float | None
    V: float | None
    status: str
    clamped: list[str]


class Metadata(TypedDict):
    version: str
    command: str
    timestamp: NotRequired[str]


class RunReport(TypedDict):
    inputs: dict[str, Any]
    theory: TheoryBlock
    measured: MeasuredBlock
    discrepancy: dict[str, float | None]
    within_tolerance: bool
    metadata: Metadata


def _metadata(command: str, with_timestamp: bool) -> Metadata:
    meta: Metadata = {"version": __version__, "command": command}
    if with_timestamp:
        meta["timestamp"] = datetime.now(UTC).isoformat(timespec="seconds")
    return meta


def _angle(args: argparse.Namespace, name: str) -> float:
    value = getattr(args, name)
    return math.radians(value) if args.degrees else value


def _params(args: argparse.Namespace) -> SU2Params:
    """SU(2) angles from the flags; delta and zeta are reduced into (-pi, pi]."""
    try:
        return SU2Params.wrapped(_angle(args, "xi"), _angle(args, "delta"), _angle(args, "zeta"))
    except DomainError as e:
        raise UsageError(str(e)) from e


def _polarization(args: argparse.Namespace) -> float:
    try:
        return check_polarization(args.r)
    except DomainError as e:
        raise UsageError(str(e)) from e


def _sweep_config(args: argparse.Namespace, settings: Settings) -> SweepConfig:
    samples = args.samples if args.samples is not None else settings.sweep.samples
    try:
        return SweepConfig(samples=samples, refine_tol=settings.sweep.refine_tol)
    except DomainError as e:
        raise UsageError(str(e)) from e


def _check_counts(args: argparse.Namespace) -> None:
    if args.shots is not None and args.shots < 1:
        raise UsageError(f"--shots must be >= 1, got {args.shots}")


def _theory_block(r: float, p: SU2Params) -> TheoryBlock:
    u = su2_from_params(p)
    pure = pure_phase_visibility(u)
    mixed = mixed_phase_visibility(r, u)
    i_min, i_max = mixed_extrema(r, p)
    return {
        "phi": pure.phi,
        "nu": pure.nu,
        "cos2_phi": pure.cos2_phi,
        "Phi": mixed.Phi,
        "V": mixed.V,
        "cos2_Phi": mixed.cos2_Phi,
        "i_min": i_min,
        "i_max": i_max,
    }


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    """Write an eta sweep, or an analyser rotation with --analyzer, to CSV.

    Analyser traces keep the rotation angle in the eta column.
    """
    p, r = _params(args), _polarization(args)
    cfg = _sweep_config(args, settings)
    _check_counts(args)

    trace: IntensityTrace | CountTrace
    if args.analyzer:
        u_total = analyzer_unitary(p)
        if args.shots is not None:
            trace = simulate_analyzer_counts(r, u_total, cfg.samples, args.shots, args.seed)
        else:
            rotation = analyzer_sweep(r, u_total, cfg.samples, cfg.refine_tol)
            trace = IntensityTrace(rotation.angles, rotation.intensities)
    elif args.shots is not None:
        trace = simulate_counts(r, p, cfg, args.shots, args.seed)
    elif args.by_translation:
        hw = HardwareConfig.from_settings(settings.hardware)
        displacements = np.arange(cfg.samples) * hw.precession_wavelength / cfg.samples
        logger.info("Translating flippers over %.6g m (L0 = %.6g m)", hw.precession_wavelength, hw.l0)
        trace = sweep_translation(r, p, displacements, hw, cfg.refine_tol)
    else:
        trace = sweep_eta(r, p, cfg)
    write_trace_csv(trace, args.out)
    return EXIT_OK


def _extraction_payload(result: ExtractionResult) -> dict[str, Any]:
    payload: dict[str, Any] = {
        "mode": result.mode,
        "extrema": {
            "i_min": result.extrema.i_min,
            "i_max": result.extrema.i_max,
            "eta_min": result.extrema.eta_min,
            "eta_max": result.extrema.eta_max,
        },
        "r": result.r,
        **result.estimate.as_dict(),
    }
    if result.analyzer_extrema is not None:
        payload["analyzer_extrema"] = list(result.analyzer_extrema)
    if result.deltas is not None:
        payload["deltas"] = {
            "d_min": result.deltas.d_min,
            "d_max": result.deltas.d_max,
            "d_tilde": result.deltas.d_tilde,
        }
    return payload


def _load_intensity_trace(path: str, settings: Settings) -> IntensityTrace:
    trace = read_trace_csv(path, refine_tol=settings.sweep.refine_tol)
    if isinstance(trace, CountTrace):
        return trace.to_intensity_trace(settings.sweep.refine_tol)
    return trace


def cmd_extract(args: argparse.Namespace, settings: Settings) -> int:
    """Extract phase and visibility from a trace file and print the JSON result."""
    trace = _load_intensity_trace(args.trace, settings)
    tol = settings.tolerances.extraction
    if args.analyzer_trace is not None:
        analyzer = _load_intensity_trace(args.analyzer_trace, settings)
        result = estimate_from_traces(trace, analyzer=analyzer, tol=tol)
    elif args.pure:
        result = estimate_from_traces(trace, pure=True)
    else:
        result = estimate_from_traces(trace, r=_polarization(args), tol=tol)

    payload = _extraction_payload(result)
    payload["metadata"] = _metadata("extract", not args.no_timestamp)
    write_json(payload, args.out)
    return EXIT_OK


def cmd_theory(args: argparse.Namespace, settings: Settings) -> int:
    """Closed-form phase and visibility for given angles or a geodesic path."""
    r = _polarization(args)
    angles = (args.xi, args.delta, args.zeta)
    if args.path is None and any(a is None for a in angles):
        raise UsageError("theory needs --xi, --delta and --zeta, or --path")
    if args.path is not None and any(a is not None for a in angles):
        raise UsageError("--path cannot be combined with --xi/--delta/--zeta")

    payload: dict[str, Any] = {"r": r}
    if args.path is None:
        p = _params(args)
        payload["params"] = {"xi": p.xi, "delta": p.delta, "zeta": p.zeta}
        payload["theory"] = dict(_theory_block(r, p))
        payload["theory"]["pure_extrema"] = list(pure_extrema(p))
    else:
        path = read_path_file(args.path)
        u = geodesic_unitary(path)
        pure = pure_phase_visibility(u)
        mixed = mixed_phase_visibility(r, u)
        prediction = geometric_phase_prediction(path, r)
        payload["vertices"] = [v.tolist() for v in path.vertices]
        payload["omega"] = solid_angle(path).omega
        payload["omega_fan"] = solid_angle_fan(path).omega
        payload["geometric"] = {
            "phi": prediction.phi,
            "cos2_phi": prediction.cos2_phi,
            "nu": prediction.nu,
            "Phi": prediction.Phi,
            "cos2_Phi": prediction.cos2_Phi,
            "V": prediction.V,
        }
        payload["transported"] = {
            "phi": pure.phi,
            "cos2_phi": pure.cos2_phi,
            "nu": pure.nu,
            "Phi": mixed.Phi,
            "cos2_Phi": mixed.cos2_Phi,
            "V": mixed.V,
        }
    payload["metadata"] = _metadata("theory", not args.no_timestamp)
    write_json(payload, args.out)
    return EXIT_OK


def _difference(theory: float | None, measured: float | None) -> float | None:
    if theory is None or measured is None:
        return None
    return abs(theory - measured)


def build_run_report(
    inputs: dict[str, Any],
    theory: TheoryBlock,
    measured: MeasuredBlock,
    r: float,
    tol: float,
    metadata: Metadata,
) -> RunReport:
    """Assemble a fullrun report; discrepancies are recomputed from the stored blocks.

    When both sides agree the phase is undefined, V is compared through V^2:
    the measured V is the square root of rounding residue there.
    """
    v_hat = measured["V"]
    v_discrepancy = _difference(theory["V"], v_hat)
    if v_hat is not None and theory["Phi"] is None and measured["status"] == Status.PHASE_UNDEFINED:
        v_discrepancy = abs(theory["V"] ** 2 - v_hat**2)
    discrepancy = {
        "r": abs(r - measured["r_hat"]),
        "cos2_Phi": _difference(theory["cos2_Phi"], measured["cos2_Phi"]),
        "V": v_discrepancy,
        "i_min": abs(theory["i_min"] - measured["i_min_rho"]),
        "i_max": abs(theory["i_max"] - measured["i_max_rho"]),
    }
    within = all(d is None or d <= tol for d in discrepancy.values())
    return {
        "inputs": inputs,
        "theory": theory,
        "measured": measured,
        "discrepancy": discrepancy,
        "within_tolerance": within,
        "metadata": metadata,
    }


def cmd_fullrun(args: argparse.Namespace, settings: Settings) -> int:
    """Simulate both sweeps, extract blind, compare with theory."""
    p, r = _params(args), _polarization(args)
    cfg = _sweep_config(args, settings)
    _check_counts(args)
    analyzer_samples = args.analyzer_samples if args.analyzer_samples is not None else settings.analyzer.samples
    if analyzer_samples < 16:
        raise UsageError("--analyzer-samples must be at least 16")
    tol = args.tol if args.tol is not None else settings.tolerances.fullrun
    u_total = analyzer_unitary(p)

    if args.shots is None:
        sweep = find_extrema(sweep_eta(r, p, cfg))
        analyzer = analyzer_sweep(r, u_total, analyzer_samples, cfg.refine_tol)
        analyzer_pair = (analyzer.i_min, analyzer.i_max)
    else:
        counts = simulate_counts(r, p, cfg, args.shots, args.seed)
        sweep = find_extrema(counts.to_intensity_trace(cfg.refine_tol))
        analyzer_counts = simulate_analyzer_counts(r, u_total, analyzer_samples, args.shots, args.seed)
        found = find_extrema(analyzer_counts.to_intensity_trace(cfg.refine_tol))
        analyzer_pair = (found.i_min, found.i_max)

    estimate, r_hat = blind_estimate(sweep.i_min, sweep.i_max, *analyzer_pair, tol=settings.tolerances.extraction)
    hw = HardwareConfig.from_settings(settings.hardware)
    inputs = {
        "r": r,
        "xi": p.xi,
        "delta": p.delta,
        "zeta": p.zeta,
        "samples": cfg.samples,
        "analyzer_samples": analyzer_samples,
        "shots": args.shots,
        "seed": args.seed,
        "tol": tol,
        "flipper_separation_m": hw.l0,
    }
    measured: MeasuredBlock = {
        "i_min_rho": sweep.i_min,
        "i_max_rho": sweep.i_max,
        "i_min_analyzer": analyzer_pair[0],
        "i_max_analyzer": analyzer_pair[1],
        "r_hat": r_hat,
        "cos2_Phi": estimate.cos2_phi,
        "V": estimate.visibility,
        "status": str(estimate.status),
        "clamped": list(estimate.clamped),
    }
    report = build_run_report(
        inputs, _theory_block(r, p), measured, r, tol, _metadata("fullrun", not args.no_timestamp)
    )
    write_json(dict(report), args.out)
    if not report["within_tolerance"]:
        worst = max((d for d in report["discrepancy"].values() if d is not None), default=0.0)
        logger.error("Discrepancy %.3e exceeds tolerance %.3e", worst, tol)
        return EXIT_REGRESSION
    return EXIT_OK


def _add_params(parser: argparse.ArgumentParser, required: bool) -> None:
    parser.add_argument("--xi", type=float, required=required, help="Mixing angle in [0, pi/2]")
    parser.add_argument("--delta", type=float, required=required, help="Phase on |+z>")
    parser.add_argument("--zeta", type=float, required=required, help="Phase on the |+z> -> |-z> amplitude")
    parser.add_argument("--degrees", action="store_true", help="Read --xi/--delta/--zeta in degrees")


def _add_counting(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--samples", type=int, default=None, help="Points on the eta grid (settings default)")
    parser.add_argument("--shots", type=int, default=None, help="Particles per setting; noiseless when omitted")
    parser.add_argument("--seed", type=int, default=0, help="Seed for counting noise")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="Settings YAML (default: polarimetry_config.yaml)")
    common.add_argument(
        "--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], default=None, help="Logging level"
    )
    common.add_argument("--no-timestamp", action="store_true", help="Leave the timestamp out of JSON reports")

    parser = argparse.ArgumentParser(prog="polarimetry", description="Mixed-state SU(2) polarimetry simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", parents=[common], help="Write an eta sweep to CSV")
    _add_params(simulate, required=True)
    simulate.add_argument("--r", type=float, required=True, help="Degree of polarisation in [0, 1]")
    _add_counting(simulate)
    simulate.add_argument("--by-translation", action="store_true", help="Drive eta by flipper displacement")
    simulate.add_argument("--analyzer", action="store_true", help="Sweep the analyser angle instead of eta")
    simulate.add_argument("--out", required=True, help="Output CSV")
    simulate.set_defaults(handler=cmd_simulate)

    extract = sub.add_parser("extract", parents=[common], help="Extract phase and visibility from a trace")
    extract.add_argument("--trace", required=True, help="Flipper-sweep CSV")
    how = extract.add_mutually_exclusive_group(required=True)
    how.add_argument("--r", type=float, help="Known degree of polarisation")
    how.add_argument("--analyzer-trace", help="Analyser-rotation CSV for blind extraction")
    how.add_argument("--pure", action="store_true", help="Treat the beam as pure")
    extract.add_argument("--out", default=None, help="Write JSON here instead of stdout")
    extract.set_defaults(handler=cmd_extract)

    theory = sub.add_parser("theory", parents=[common], help="Closed-form phase and visibility")
    _add_params(theory, required=False)
    theory.add_argument("--path", default=None, help="Geodesic path file (YAML/JSON with 'vertices')")
    theory.add_argument("--r", type=float, required=True, help="Degree of polarisation in [0, 1]")
    theory.add_argument("--out", default=None, help="Write JSON here instead of stdout")
    theory.set_defaults(handler=cmd_theory)

    fullrun = sub.add_parser("fullrun", parents=[common], help="Simulate, extract blind and compare with theory")
    _add_params(fullrun, required=True)
    fullrun.add_argument("--r", type=float, required=True, help="Degree of polarisation in [0, 1]")
    _add_counting(fullrun)
    fullrun.add_argument("--analyzer-samples", type=int, default=None, help="Analyser rotation steps")
    fullrun.add_argument("--tol", type=float, default=None, help="Discrepancy tolerance (settings default)")
    fullrun.add_argument("--out", default=None, help="Write JSON here instead of stdout")
    fullrun.set_defaults(handler=cmd_fullrun)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(level=args.log_level or "INFO", format=LOG_FORMAT, stream=sys.stderr, force=True)
    handler: Callable[[argparse.Namespace, Settings], int] = args.handler
    try:
        settings = load_settings(args.config)
        if args.log_level is None:
            logging.getLogger().setLevel(settings.log_level)
        return handler(args, settings)
    except (UsageError, ConfigError, TraceFormatError) as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except InconsistentDataError as e:
        logger.error("Inconsistent data in %s: %s", e.quantity, e)
        return EXIT_INCONSISTENT
    except (AmbiguousGeodesicError, DomainError, ValidationError) as e:
        logger.error("%s", e)
        return EXIT_INCONSISTENT


if __name__ == "__main__":
    sys.exit(main())
