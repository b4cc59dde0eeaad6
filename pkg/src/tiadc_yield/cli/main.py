# src/tiadc_yield/cli/main.py
"""Command-line front end: tiadc-yield <predict|simulate|cdf|ccdf-compare|yield|sweep>"""

import argparse
import logging
import math
import sys
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from tiadc_yield import __version__
from tiadc_yield.cli.run_config import RunConfig
from tiadc_yield.core.analytic import (
    predict_gain_replicas,
    predict_offset_spurs,
    predict_skew_replicas,
)
from tiadc_yield.core.errors import InvalidInputError, NonConvergenceError
from tiadc_yield.core.simulator import CaptureConfig, run_capture
from tiadc_yield.core.types import DistributionSpec, MismatchKind, YieldQuery
from tiadc_yield.core.units import to_db, undb
from tiadc_yield.evaluation.montecarlo import (
    POOLED,
    default_thresholds,
    empirical_ccdf,
    gaussian_gap_db,
    max_spur_samples,
)
from tiadc_yield.monitoring.export import ResultCollector, atomic_write, render_csv, resolve_path
from tiadc_yield.optimizer.calibration import (
    DISPLAY_UNITS,
    invert_yield,
    quantile_vs_step,
    raw_step,
    sweep_step_vs_target,
)
from tiadc_yield.statistics.combined import (
    SpurInclusion,
    bin_cdfs,
    combined_cdf,
    combined_quantile,
)
from tiadc_yield.utils.config import Settings, load_settings
from tiadc_yield.utils.logging_setup import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGENCE = 0, 1, 2

# fewer expected exceedances than this makes a tail estimate too noisy to trust
MIN_TAIL_EXCEEDANCES = 1_000

MISMATCH_UNITS = {"offset": "FS", "gain": "fraction", "skew": "s"}

_PREDICTORS = {
    MismatchKind.OFFSET: lambda m, tones, cfg: predict_offset_spurs(m.offsets, cfg),
    MismatchKind.GAIN: lambda m, tones, cfg: predict_gain_replicas(m.gains, tones, cfg),
    MismatchKind.SKEW: lambda m, tones, cfg: predict_skew_replicas(m.skews, tones, cfg),
}


def _inclusion(run: RunConfig, kind: MismatchKind) -> SpurInclusion:
    return SpurInclusion.default(
        kind, run.n, include_dc=not run.exclude_dc, include_nyquist=not run.exclude_nyquist
    )


def _collector(run: RunConfig, **units: str) -> ResultCollector:
    return ResultCollector(
        command=run.command, parameters=run.parameters(), seed=run.seed, units=units
    )


def cmd_predict(run: RunConfig, settings: Settings) -> ResultCollector:
    """Analytic spur / replica table of one device"""
    config = run.adc_config()
    mismatch = run.mismatch_set()
    mismatch.check_against(config)
    tones = run.tone_specs()
    kinds = [run.mismatch_kind] if run.mismatch_kind else list(MismatchKind)

    out = _collector(run, frequency="Hz", offset="dBFS", gain="dBc", skew="dBc")
    frames: List[pd.DataFrame] = []
    for kind in kinds:
        active = bool(np.any(mismatch.values(kind) != 0.0))
        if kind is not MismatchKind.OFFSET and not tones:
            if active:
                raise InvalidInputError(f"{kind.value} prediction needs --tone or --fsig")
            continue
        report = _PREDICTORS[kind](mismatch, tones, config)
        for message in report.warnings:
            out.warn(message)
        frames.append(report.to_frame())
        worst = report.worst
        out.record(
            **{
                f"{kind.value}_worst_db": worst.power_db if worst else float("-inf"),
                f"{kind.value}_total_power": report.total_power,
            }
        )

    table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
    if not table.empty:
        # zero-power bins are not spurs
        table = table[np.isfinite(table["power_db"])].reset_index(drop=True)
    out.table = table
    return out


def cmd_simulate(run: RunConfig, settings: Settings) -> ResultCollector:
    """Time-domain capture compared against the analytic prediction"""
    config = run.adc_config()
    mismatch = run.mismatch_set()
    tones = run.tone_specs()
    if not tones:
        raise InvalidInputError("simulate needs at least one --tone (or --fsig)")
    samples = run.samples or settings.simulation.capture_multiplier * run.n
    result = run_capture(config, mismatch, tones, CaptureConfig(samples))

    out = _collector(run, frequency="Hz", power="dB")
    for message in result.warnings:
        out.warn(message)
    out.record(
        samples=samples,
        tones=[
            {"requested_hz": t.requested, "frequency_hz": t.frequency, "cycles": t.cycles}
            for t in result.tones
        ],
        sfdr_db=result.sfdr_db,
        max_abs_delta_db=result.max_abs_delta_db,
    )
    if result.residual_dbfs is not None:
        out.record(residual_dbfs=result.residual_dbfs)
        logger.info("recombination residual %.1f dBFS", result.residual_dbfs)
    out.table = result.comparison_frame()

    if run.spectrum_output:
        path = atomic_write(
            resolve_path(run.spectrum_output, settings.output.output_dir),
            render_csv(result.spectrum.to_frame(), out.metadata(), settings.output.float_format),
        )
        logger.info("spectrum written to %s", path)
    return out


def cmd_cdf(run: RunConfig, settings: Settings) -> ResultCollector:
    """Per-bin and combined strongest-spur CDFs on a dB grid"""
    kind = run.mismatch_kind
    sigma = run.sigma if run.sigma is not None else run.step / math.sqrt(12.0)
    inclusion = _inclusion(run, kind)
    f_sig = run.signal_frequency

    grid_db = np.linspace(run.pmin_db, run.pmax_db, run.points)
    p = undb(grid_db)
    real_cdf, circ_cdf = bin_cdfs(kind, sigma, run.n, f_sig)

    out = _collector(run, power=kind.reference.value, sigma=MISMATCH_UNITS[kind.value])
    out.table = pd.DataFrame(
        {
            "power_db": grid_db,
            "cdf_real": real_cdf(p),
            "cdf_circ": circ_cdf(p),
            "cdf_combined": combined_cdf(kind, p, sigma, run.n, inclusion, f_sig),
        }
    )
    quantile = combined_quantile(kind, run.yield_target, sigma, run.n, inclusion, f_sig)
    out.record(
        sigma=sigma,
        inclusion=inclusion.describe(),
        yield_target=run.yield_target,
        quantile_db=to_db(quantile),
    )
    return out


def _tail_warning(out: ResultCollector, level: float, trials: int) -> None:
    if level * trials < MIN_TAIL_EXCEEDANCES:
        message = (
            f"only {level * trials:.0f} expected exceedances at {level:g} "
            f"({trials} trials); tail estimate is noisy"
        )
        logger.warning(message)
        out.warn(message)


def cmd_ccdf_compare(run: RunConfig, settings: Settings) -> ResultCollector:
    """Uniform vs Gaussian CCDF of a normalized DFT bin power"""
    bin_selector: Any = run.bin
    if run.bin != POOLED:
        try:
            bin_selector = int(run.bin)
        except ValueError:
            raise InvalidInputError(f"--bin must be an index or '{POOLED}', got {run.bin!r}")
    mc = settings.montecarlo
    thresholds = default_thresholds(mc.ccdf_min, mc.ccdf_max, mc.ccdf_points)

    out = _collector(run, threshold="dB (unit mean)", gap="dB")
    _tail_warning(out, run.level, run.trials)

    uniform = empirical_ccdf(
        DistributionSpec.uniform(math.sqrt(12.0)),
        run.n,
        bin_selector,
        run.trials,
        run.seed,
        thresholds,
        run.workers,
        run.chunk_size,
        run.algorithm,
    )
    gap = gaussian_gap_db(
        run.n, run.level, run.trials, run.seed, run.workers, run.chunk_size, run.algorithm
    )

    uniform_frame = uniform.to_frame().assign(distribution="uniform")
    gaussian_frame = pd.DataFrame(
        {
            "threshold_db": to_db(thresholds),
            "probability": np.exp(-thresholds),
            "distribution": "gaussian",
        }
    )
    out.table = pd.concat([gaussian_frame, uniform_frame], ignore_index=True)
    out.record(
        n=run.n,
        level=run.level,
        trials=run.trials,
        gap_db=gap,
        gaussian_worst_case=gap > 0.0,
        uniform_mean_power=uniform.mean_power,
        algorithm=uniform.metadata["algorithm"],
    )
    return out


def cmd_yield(run: RunConfig, settings: Settings) -> ResultCollector:
    """Calibration step meeting the yield at the target level"""
    kind = run.mismatch_kind
    config = run.adc_config()
    query = YieldQuery(
        kind=kind,
        target_power=run.target,
        yield_target=run.yield_target,
        include_dc=not run.exclude_dc,
        include_nyquist=not run.exclude_nyquist,
        signal_frequency=run.signal_frequency,
    )
    cal = settings.calibration
    result = invert_yield(
        query,
        config,
        rtol=cal.rtol,
        bracket_factor=cal.bracket_factor,
        max_expansions=cal.max_expansions,
        verbose=run.variants,
    )

    out = _collector(run, step=result.unit, sigma=MISMATCH_UNITS[kind.value])
    out.record(**result.to_dict())

    if run.validate_trials:
        samples = max_spur_samples(
            kind,
            DistributionSpec.gaussian(result.sigma),
            config,
            result.inclusion,
            run.signal_frequency,
            run.validate_trials,
            run.seed,
            run.workers,
            run.chunk_size,
            run.algorithm,
        )
        empirical = float(np.mean(samples <= undb(run.target)))
        stderr = math.sqrt(run.yield_target * (1.0 - run.yield_target) / samples.size)
        out.record(empirical_yield=empirical, empirical_yield_stderr=stderr)
        if abs(empirical - run.yield_target) > 3.0 * stderr:
            out.warn(
                f"Monte-Carlo yield {empirical:.5f} deviates from {run.yield_target} "
                f"by more than 3 standard errors"
            )
    return out


def cmd_sweep(run: RunConfig, settings: Settings) -> ResultCollector:
    """Step size versus target, or strongest-spur quantile versus step"""
    kind = run.mismatch_kind
    config = run.adc_config()
    inclusion = _inclusion(run, kind)
    out = _collector(run, target=kind.reference.value, step=DISPLAY_UNITS[kind])

    if run.mode == "quantile":
        if not run.steps:
            raise InvalidInputError(f"quantile sweep needs --steps in {DISPLAY_UNITS[kind]}")
        steps = [raw_step(kind, s, config) for s in run.steps]
        out.table = quantile_vs_step(
            kind, config, steps, run.yield_target, inclusion, run.signal_frequency
        )
        return out

    if run.target_to < run.target_from:
        raise InvalidInputError("--target-to must not be below --target-from")
    targets = np.arange(run.target_from, run.target_to + run.target_step / 2, run.target_step)
    curve = sweep_step_vs_target(
        kind, config, targets, run.yield_target, inclusion, run.signal_frequency
    )
    out.table = curve.to_frame()
    out.record(unit=curve.unit, inclusion=inclusion.describe(), points=len(curve.points))
    return out


COMMANDS: Dict[str, Callable[[RunConfig, Settings], ResultCollector]] = {
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "cdf": cmd_cdf,
    "ccdf-compare": cmd_ccdf_compare,
    "yield": cmd_yield,
    "sweep": cmd_sweep,
}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--settings", help="YAML settings file (default: config/default.yaml)")
    common.add_argument("--config", help="JSON run config mirroring these flags")
    common.add_argument("--kind", choices=["offset", "gain", "skew", "all"])
    common.add_argument("--n", type=int, help="interleave factor N")
    common.add_argument("--fs", type=float, help="sample rate in Hz")
    common.add_argument("--bits", type=int, help="resolution in bits")
    common.add_argument("--fsig", type=float, help="signal frequency in Hz")
    common.add_argument("--fmax", type=float, help="band edge in Hz (worst-case skew input)")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--chunk-size", type=int)
    common.add_argument("--yield", dest="yield_target", type=float, help="e.g. 0.99")
    common.add_argument("--exclude-dc", action="store_true", default=None)
    common.add_argument("--exclude-nyquist", action="store_true", default=None)
    common.add_argument("--format", choices=["json", "csv"])
    common.add_argument("--output", help="write here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tiadc-yield",
        description="Spur prediction and calibration sizing for time-interleaved ADCs.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()

    def mismatch_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--offsets", help="comma-separated offsets (FS units)")
        p.add_argument("--gains", help="comma-separated relative gains (0.01 = 1 %%)")
        p.add_argument("--skews", help="comma-separated skews in seconds")
        p.add_argument("--mismatch-file", help="one sub-ADC per line: value or 'o g s'")
        p.add_argument("--dist", choices=["gaussian", "uniform"])
        p.add_argument("--width", type=float, help="sigma (gaussian) or step (uniform)")
        p.add_argument(
            "--tone", dest="tones", action="append", help="f[:amplitude[:phase]], repeatable"
        )

    p = sub.add_parser("predict", parents=[common], help="analytic spur table")
    mismatch_args(p)

    p = sub.add_parser("simulate", parents=[common], help="time-domain oracle")
    mismatch_args(p)
    p.add_argument("--samples", type=int, help="capture length M (multiple of N)")
    p.add_argument("--spectrum-output", help="CSV path for the measured spectrum")

    p = sub.add_parser("cdf", parents=[common], help="closed-form spur CDFs")
    p.add_argument("--sigma", type=float, help="mismatch standard deviation")
    p.add_argument("--step", type=float, help="calibration step (sigma = step/sqrt(12))")
    p.add_argument("--pmin-db", type=float)
    p.add_argument("--pmax-db", type=float)
    p.add_argument("--points", type=int)

    p = sub.add_parser("ccdf-compare", parents=[common], help="uniform vs Gaussian CCDF")
    p.add_argument("--trials", type=float, help="accepts 1e7")
    p.add_argument("--level", type=float, help="CCDF level for the gap, e.g. 1e-4")
    p.add_argument("--bin", help="circ bin index or 'pooled'")

    p = sub.add_parser("yield", parents=[common], help="calibration step for a yield target")
    p.add_argument("--target", type=float, help="dBFS (offset) or dBc (gain/skew)")
    p.add_argument("--variants", action="store_true", default=None,
                   help="also report Nyquist-included/excluded steps")
    p.add_argument("--validate-trials", type=float, help="Monte-Carlo check at the result")

    p = sub.add_parser("sweep", parents=[common], help="step vs target curve")
    p.add_argument("--mode", choices=["step", "quantile"])
    p.add_argument("--target-from", type=float)
    p.add_argument("--target-to", type=float)
    p.add_argument("--target-step", type=float)
    p.add_argument("--steps", help="comma-separated steps in LSB / %% / fs (quantile mode)")
    return parser


def _defaults(settings: Settings) -> Dict[str, Any]:
    return {
        "n": settings.adc.interleave_factor,
        "fs": settings.adc.sample_rate,
        "bits": settings.adc.resolution_bits,
        "trials": settings.montecarlo.trials,
        "workers": settings.montecarlo.workers,
        "chunk_size": settings.montecarlo.chunk_size,
        "algorithm": settings.montecarlo.algorithm,
        "yield_target": settings.calibration.yield_target,
    }


def _flags(args: argparse.Namespace) -> Dict[str, Any]:
    flags = {
        k: v for k, v in vars(args).items() if k not in ("settings", "config", "verbose")
    }
    for key in ("trials", "validate_trials"):
        if flags.get(key) is not None:
            value = flags[key]
            if value != int(value):
                raise InvalidInputError(f"--{key.replace('_', '-')} must be an integer")
            flags[key] = int(value)
    return flags


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = load_settings(args.settings)
        configure_logging(settings.logging, verbose=args.verbose)
        run = RunConfig.from_sources(_defaults(settings), args.config, _flags(args))
        logger.debug("running %s with %s", run.command, run.parameters())

        out = COMMANDS[run.command](run, settings)
        text = out.render(run.format, settings.output.float_format)
        if run.output:
            path = atomic_write(resolve_path(run.output, settings.output.output_dir), text)
            logger.info("%s written to %s", run.command, path)
        else:
            sys.stdout.write(text)
        if out.warnings:
            logger.info("%d warning(s)", len(out.warnings))
        return EXIT_OK
    except (InvalidInputError, ValidationError) as exc:
        logger.error("invalid input: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NonConvergenceError as exc:
        logger.error("no convergence: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
