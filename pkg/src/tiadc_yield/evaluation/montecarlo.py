# src/tiadc_yield/evaluation/montecarlo.py
"""
Empirical distribution engine for mismatch DFT statistics.

Trials are split into fixed-size chunks. Chunk i draws from the i-th child of
SeedSequence(seed) through the configured bit generator (PCG64 unless told
otherwise), so results only depend on (seed, algorithm, parameters), never on how
many worker processes evaluated the chunks.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from tiadc_yield.core.dft import dft_rows
from tiadc_yield.core.errors import InvalidInputError
from tiadc_yield.core.types import AdcConfig, DistributionKind, DistributionSpec, MismatchKind
from tiadc_yield.core.units import to_db
from tiadc_yield.statistics.combined import SpurInclusion, max_circ_bins, mean_bin_power

logger = logging.getLogger(__name__)

ALGORITHM = "PCG64"
BIT_GENERATORS = ("PCG64", "PCG64DXSM", "Philox", "SFC64", "MT19937")
POOLED = "pooled"
MIN_TRIALS = 10_000
DEFAULT_CHUNK_SIZE = 100_000
CCDF_MIN, CCDF_MAX, CCDF_POINTS = 1e-2, 1e2, 400

BinSelector = Union[int, str]


@dataclass
class CcdfTable:
    """
    P(power > threshold) on an ascending threshold grid.

    Per-bin tables hold thresholds normalized to unit bin mean. Strongest-spur tables
    hold absolute linear powers; their unit bin mean is `metadata["reference_power"]`.
    """

    thresholds: np.ndarray
    probabilities: np.ndarray
    trials: int
    seed: int
    samples: int
    mean_power: float = float("nan")
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.trials <= 0:
            raise InvalidInputError("a CCDF table needs at least one trial")

    @property
    def cdf(self) -> np.ndarray:
        return 1.0 - self.probabilities

    def threshold_at(self, probability: float) -> float:
        """Smallest tabulated threshold whose exceedance probability is <= `probability`"""
        idx = np.flatnonzero(self.probabilities <= probability)
        return float(self.thresholds[idx[0]]) if idx.size else float("inf")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"threshold_db": to_db(self.thresholds), "probability": self.probabilities}
        )


def check_algorithm(algorithm: str) -> str:
    if algorithm not in BIT_GENERATORS:
        raise InvalidInputError(
            f"unknown bit generator {algorithm!r}; choose one of {', '.join(BIT_GENERATORS)}"
        )
    return algorithm


def generator(
    seed: Union[int, np.random.SeedSequence], algorithm: str = ALGORITHM
) -> np.random.Generator:
    bit_generator = getattr(np.random, check_algorithm(algorithm))
    return np.random.Generator(bit_generator(seed))


def _draw(dist: DistributionSpec, rng: np.random.Generator, size) -> np.ndarray:
    if dist.kind is DistributionKind.UNIFORM:
        half = dist.width / 2.0
        return rng.uniform(-half, half, size)
    return rng.normal(0.0, dist.width, size)


def sample_mismatch(
    dist: DistributionSpec, n: int, seed: int, algorithm: str = ALGORITHM
) -> np.ndarray:
    """One length-N mismatch draw, reproducible per seed"""
    if n < 1:
        raise InvalidInputError(f"N must be >= 1, got {n}")
    return _draw(dist, generator(seed, algorithm), n)


def dft_ensemble(
    dist: DistributionSpec, n: int, trials: int, seed: int, algorithm: str = ALGORITHM
) -> np.ndarray:
    """(trials, N) normalized DFTs of independent mismatch draws"""
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    return dft_rows(_draw(dist, generator(seed, algorithm), (trials, n)))


def _chunk_plan(
    trials: int, seed: int, chunk_size: int
) -> List[Tuple[np.random.SeedSequence, int]]:
    if trials < 1 or chunk_size < 1:
        raise InvalidInputError("trials and chunk_size must be >= 1")
    n_chunks = math.ceil(trials / chunk_size)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [chunk_size] * (n_chunks - 1) + [trials - chunk_size * (n_chunks - 1)]
    return list(zip(children, sizes))


def _map_chunks(fn: Callable, plan: Sequence, workers: int) -> list:
    if workers <= 1 or len(plan) <= 1:
        return [fn(task) for task in plan]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, plan))


def _selected_bins(n: int, bin_selector: BinSelector) -> List[int]:
    if bin_selector == POOLED:
        bins = list(range(1, max_circ_bins(n) + 1))
        if not bins:
            raise InvalidInputError(f"N={n} has no circularly-symmetric bins to pool")
        return bins
    if isinstance(bin_selector, str):
        raise InvalidInputError(f"unknown bin selector {bin_selector!r}")
    k = int(bin_selector)
    if not 0 <= k < n:
        raise InvalidInputError(f"bin index {k} out of range [0, {n})")
    if k == 0 or 2 * k == n:
        raise InvalidInputError("DC and Nyquist bins are real-valued; pick a circ bin")
    return [min(k, n - k)]


def _normalized_powers(
    task, dist: DistributionSpec, n: int, bins: Tuple[int, ...], algorithm: str
) -> np.ndarray:
    child, size = task
    x = _draw(dist, generator(child, algorithm), (size, n))
    x_t = dft_rows(x)[:, list(bins)]
    return (np.abs(x_t) ** 2 / (dist.variance / n)).ravel()


def _ccdf_chunk(task, dist, n, bins, thresholds, algorithm) -> Tuple[np.ndarray, int, float]:
    values = np.sort(_normalized_powers(task, dist, n, bins, algorithm))
    exceed = values.size - np.searchsorted(values, thresholds, side="right")
    return exceed, values.size, float(values.sum())


def _top_chunk(task, dist, n, bins, keep, algorithm) -> np.ndarray:
    values = _normalized_powers(task, dist, n, bins, algorithm)
    if values.size <= keep:
        return values
    return np.partition(values, values.size - keep)[values.size - keep :]


def default_thresholds(
    lo: float = CCDF_MIN, hi: float = CCDF_MAX, points: int = CCDF_POINTS
) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), points)


def empirical_ccdf(
    dist: DistributionSpec,
    n: int,
    bin_selector: BinSelector,
    trials: int,
    seed: int,
    thresholds: Optional[np.ndarray] = None,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    algorithm: str = ALGORITHM,
) -> CcdfTable:
    """CCDF of |x~_k|^2 normalized to unit mean (divided by var/N)"""
    if trials < MIN_TRIALS:
        raise InvalidInputError(f"empirical CCDF needs >= {MIN_TRIALS} trials, got {trials}")
    check_algorithm(algorithm)
    bins = tuple(_selected_bins(n, bin_selector))
    grid = default_thresholds() if thresholds is None else np.asarray(thresholds, float)

    plan = _chunk_plan(trials, seed, chunk_size)
    parts = _map_chunks(
        partial(
            _ccdf_chunk, dist=dist, n=n, bins=bins, thresholds=grid, algorithm=algorithm
        ),
        plan,
        workers,
    )
    exceed = np.sum([p[0] for p in parts], axis=0)
    total = sum(p[1] for p in parts)
    mean_power = sum(p[2] for p in parts) / total

    logger.debug("empirical_ccdf N=%d bins=%s samples=%d", n, bins, total)
    return CcdfTable(
        thresholds=grid,
        probabilities=exceed / total,
        trials=trials,
        seed=seed,
        samples=total,
        mean_power=mean_power,
        metadata={
            "n": n,
            "distribution": dist.describe(),
            "bins": list(bins),
            "algorithm": algorithm,
        },
    )


def empirical_quantile(
    dist: DistributionSpec,
    n: int,
    bin_selector: BinSelector,
    prob_level: float,
    trials: int,
    seed: int,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    algorithm: str = ALGORITHM,
) -> float:
    """Normalized threshold t with empirical P(power > t) = prob_level (exact order statistic)"""
    if not 0.0 < prob_level < 1.0:
        raise InvalidInputError(f"probability level must be in (0, 1), got {prob_level}")
    check_algorithm(algorithm)
    bins = tuple(_selected_bins(n, bin_selector))
    total = trials * len(bins)
    rank = max(1, math.ceil(prob_level * total))

    plan = _chunk_plan(trials, seed, chunk_size)
    tops = _map_chunks(
        partial(_top_chunk, dist=dist, n=n, bins=bins, keep=rank, algorithm=algorithm),
        plan,
        workers,
    )
    merged = np.sort(np.concatenate(tops))[::-1]
    return float(merged[rank - 1])


def gaussian_gap_db(
    n: int,
    prob_level: float,
    trials: int,
    seed: int,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    algorithm: str = ALGORITHM,
) -> float:
    """
    10*log10(t_gauss / t_unif) at CCDF level `prob_level` for pooled circ bins.

    The Gaussian side is exact (normalized bin power is Exp(1), t = ln(1/q));
    positive values mean the Gaussian model is the pessimistic one.
    """
    if prob_level * trials < 100:
        raise InvalidInputError(
            f"{trials} trials leave fewer than 100 exceedances at {prob_level:g}"
        )
    unit_uniform = DistributionSpec.uniform(math.sqrt(12.0))
    t_unif = empirical_quantile(
        unit_uniform, n, POOLED, prob_level, trials, seed, workers, chunk_size, algorithm
    )
    t_gauss = -math.log(prob_level)
    return 10.0 * math.log10(t_gauss / t_unif)


def _spur_powers(
    x_t: np.ndarray,
    kind: MismatchKind,
    n: int,
    inclusion: SpurInclusion,
    f_sig: Optional[float],
) -> np.ndarray:
    """Per-device powers of the included spurs, same scaling as the analytic module"""
    columns = []
    real_scale = 2.0 if kind is MismatchKind.OFFSET else 1.0
    circ_scale = 4.0 if kind is MismatchKind.OFFSET else 1.0
    if inclusion.include_dc:
        columns.append(real_scale * np.abs(x_t[:, 0]) ** 2)
    if inclusion.include_nyquist:
        columns.append(real_scale * np.abs(x_t[:, n // 2]) ** 2)
    if inclusion.n_circ:
        columns.append(circ_scale * np.abs(x_t[:, 1 : inclusion.n_circ + 1]) ** 2)
    if not columns:
        return np.zeros((x_t.shape[0], 1))
    powers = np.column_stack(columns)
    if kind is MismatchKind.SKEW:
        powers = powers * (2.0 * math.pi * f_sig) ** 2
    return powers


def _max_spur_chunk(task, kind, dist, n, inclusion, f_sig, algorithm) -> np.ndarray:
    child, size = task
    x_t = dft_rows(_draw(dist, generator(child, algorithm), (size, n)))
    return _spur_powers(x_t, kind, n, inclusion, f_sig).max(axis=1)


def max_spur_samples(
    kind: MismatchKind,
    dist: DistributionSpec,
    config: AdcConfig,
    inclusion: Optional[SpurInclusion] = None,
    f_sig: Optional[float] = None,
    trials: int = MIN_TRIALS,
    seed: int = 0,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    algorithm: str = ALGORITHM,
) -> np.ndarray:
    """Strongest included spur power (linear) of each simulated device"""
    n = config.interleave_factor
    inclusion = inclusion or SpurInclusion.default(kind, n)
    inclusion.check(kind, n)
    if kind is MismatchKind.SKEW and not (f_sig and f_sig > 0):
        raise InvalidInputError("skew statistics need f_sig > 0")
    check_algorithm(algorithm)

    plan = _chunk_plan(trials, seed, chunk_size)
    parts = _map_chunks(
        partial(
            _max_spur_chunk,
            kind=kind,
            dist=dist,
            n=n,
            inclusion=inclusion,
            f_sig=f_sig,
            algorithm=algorithm,
        ),
        plan,
        workers,
    )
    return np.concatenate(parts)


def empirical_max_spur_cdf(
    kind: MismatchKind,
    dist: DistributionSpec,
    config: AdcConfig,
    inclusion: Optional[SpurInclusion] = None,
    f_sig: Optional[float] = None,
    trials: int = MIN_TRIALS,
    seed: int = 0,
    thresholds: Optional[np.ndarray] = None,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    algorithm: str = ALGORITHM,
) -> CcdfTable:
    """
    Tabulated distribution of the strongest spur per device; `cdf` converges to combined_cdf.

    Thresholds are absolute linear powers. The default grid spans 1e-2..1e2 times the
    mean power of one included bin, recorded as `metadata["reference_power"]`.
    """
    n = config.interleave_factor
    inclusion = inclusion or SpurInclusion.default(kind, n)
    values = np.sort(
        max_spur_samples(
            kind, dist, config, inclusion, f_sig, trials, seed, workers, chunk_size, algorithm
        )
    )
    ref = mean_bin_power(kind, dist.sigma, n, f_sig)
    if thresholds is None:
        thresholds = ref * default_thresholds()
    grid = np.asarray(thresholds, dtype=float)
    exceed = values.size - np.searchsorted(values, grid, side="right")
    return CcdfTable(
        thresholds=grid,
        probabilities=exceed / values.size,
        trials=trials,
        seed=seed,
        samples=values.size,
        mean_power=float(values.mean()),
        metadata={
            "kind": kind.value,
            "n": n,
            "distribution": dist.describe(),
            "inclusion": inclusion.describe(),
            "f_sig": f_sig,
            "reference_power": ref,
            "algorithm": algorithm,
        },
    )


def ks_distance(table: CcdfTable, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Largest gap between the tabulated empirical CDF and a closed form on the table grid"""
    return float(np.max(np.abs(table.cdf - np.asarray(cdf(table.thresholds)))))
