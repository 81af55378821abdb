"""Monte Carlo trial engine.

Trials are split into fixed-size chunks. Each trial draws its unit currents
from its own counter-based substream, so the samples do not depend on how
the chunks are distributed over worker processes; results are merged in
chunk order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import binary, thermo
from .mismatch import DacSpec, unit_normals
from .stats import ks_2samp, wilson_interval
from .transfer import Architecture, bits_for, centered_deviation

CHUNK_TRIALS = 256
_BATCH_ELEMENTS = 1 << 21
QUANTILE_LEVELS = (0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99)
ENDPOINT_TOL = 1e-9

STREAM_CHIPS = 0
STREAM_CHIPS_B = 1
STREAM_BRIDGE = 2
STREAM_DYADIC = 3


@dataclass(frozen=True)
class TrialConfig:
    spec: DacSpec
    architecture: Architecture
    trials: int
    seed: int = 0
    workers: int = 1
    stream: int = STREAM_CHIPS

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.spec.sigma_u <= 0:
            raise ValueError("Monte Carlo trials need sigma_u > 0")
        self.architecture.check_bits(self.spec.bits)


@dataclass(frozen=True)
class TrialSamples:
    normalized: np.ndarray  # (I_lsb / (sigma_u sqrt n)) * INL_max per trial
    inl_max: np.ndarray  # INL_max in LSB per trial


@dataclass
class EmpiricalSummary:
    count: int
    mean: float
    variance: float  # nan when count == 1
    standard_error_mean: float
    variance_se: float
    quantiles: dict[float, float]
    ecdf: np.ndarray = field(repr=False)

    @property
    def variance_defined(self) -> bool:
        return self.count > 1

    def to_dict(self, include_ecdf: bool = False) -> dict:
        d = {
            "count": self.count,
            "mean": self.mean,
            "variance": None if not self.variance_defined else self.variance,
            "standard_error_mean": None if not self.variance_defined else self.standard_error_mean,
            "variance_se": None if not self.variance_defined else self.variance_se,
            "quantiles": {f"{p:g}": v for p, v in self.quantiles.items()},
        }
        if include_ecdf:
            d["ecdf"] = self.ecdf.tolist()
        return d


@dataclass(frozen=True)
class YieldEstimate:
    threshold_lsb: float
    yield_: float
    ci_low: float
    ci_high: float
    trials: int

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.yield_ * (1.0 - self.yield_) / self.trials)


@dataclass
class ComparisonReport:
    label_a: str
    label_b: str
    summary_a: EmpiricalSummary
    summary_b: EmpiricalSummary
    mean_difference: float
    combined_se: float
    ks_distance: float
    ks_pvalue: float


@dataclass
class ConvergenceReport:
    kind: str
    rows: list[dict]
    notes: str = ""
    fitted_slope: float | None = None


def summarize(samples) -> EmpiricalSummary:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("no samples to summarize")
    ecdf = np.sort(x)
    mean = float(np.mean(x))
    if x.size > 1:
        var = float(np.var(x, ddof=1))
        se = math.sqrt(var / x.size)
        m4 = float(np.mean((x - mean) ** 4))
        var_se = math.sqrt(max(m4 - var * var, 0.0) / x.size)
    else:
        var = se = var_se = math.nan
    quantiles = {p: float(np.quantile(ecdf, p)) for p in QUANTILE_LEVELS}
    return EmpiricalSummary(x.size, mean, var, se, var_se, quantiles, ecdf)


def _chunks(trials: int) -> list[tuple[int, int]]:
    return [(s, min(s + CHUNK_TRIALS, trials)) for s in range(0, trials, CHUNK_TRIALS)]


def _map_chunks(fn, args: list[tuple], workers: int) -> list:
    if workers == 1 or len(args) == 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*args)))


def _chip_chunk(spec: DacSpec, arch: Architecture, seed: int, stream: int, start: int, stop: int):
    n = spec.unit_count
    rows = max(1, _BATCH_ELEMENTS // n)
    norm = np.empty(stop - start)
    lsb_max = np.empty(stop - start)
    scale = spec.sigma_u * math.sqrt(n)
    for b0 in range(start, stop, rows):
        b1 = min(b0 + rows, stop)
        eps = np.stack([unit_normals(seed, t, n, stream=stream) for t in range(b0, b1)])
        currents = spec.mean_current + spec.sigma_u * eps
        dev, lsb = centered_deviation(arch, currents)
        inl_end = np.abs(dev[:, [0, -1]]).max(axis=1) / lsb
        if np.any(inl_end > ENDPOINT_TOL):
            raise ArithmeticError(f"INL_0/INL_n not zero (max {inl_end.max():.3e})")
        peak = np.abs(dev).max(axis=1)
        norm[b0 - start : b1 - start] = peak / scale
        lsb_max[b0 - start : b1 - start] = peak / lsb
    return norm, lsb_max


def simulate(config: TrialConfig) -> TrialSamples:
    args = [
        (config.spec, config.architecture, config.seed, config.stream, s, e) for s, e in _chunks(config.trials)
    ]
    parts = _map_chunks(_chip_chunk, args, config.workers)
    return TrialSamples(
        normalized=np.concatenate([p[0] for p in parts]),
        inl_max=np.concatenate([p[1] for p in parts]),
    )


def run_trials(config: TrialConfig) -> EmpiricalSummary:
    """Empirical distribution of the normalized INL_max."""
    return summarize(simulate(config).normalized)


def yield_from_samples(inl_max_lsb: np.ndarray, threshold_lsb: float) -> YieldEstimate:
    if math.isnan(threshold_lsb):
        raise ValueError("threshold must be a number")
    hits = int(np.count_nonzero(inl_max_lsb <= threshold_lsb))
    lo, hi = wilson_interval(hits, inl_max_lsb.size)
    return YieldEstimate(threshold_lsb, hits / inl_max_lsb.size, lo, hi, inl_max_lsb.size)


def yield_mc(config: TrialConfig, threshold_lsb: float) -> YieldEstimate:
    """Fraction of simulated chips with INL_max <= threshold (LSB), 95% Wilson CI."""
    return yield_from_samples(simulate(config).inl_max, threshold_lsb)


def compare_architectures(config_a: TrialConfig, config_b: TrialConfig) -> ComparisonReport:
    """Contrast two architectures on independent chip populations of equal resolution."""
    if config_a.spec.bits != config_b.spec.bits:
        raise ValueError("architectures must be compared at the same resolution")
    a = simulate(_with_stream(config_a, STREAM_CHIPS)).normalized
    b = simulate(_with_stream(config_b, STREAM_CHIPS_B)).normalized
    sa, sb = summarize(a), summarize(b)
    d, p = ks_2samp(a, b)
    combined = math.sqrt(sa.standard_error_mean**2 + sb.standard_error_mean**2)
    return ComparisonReport(
        config_a.architecture.label(), config_b.architecture.label(), sa, sb, sa.mean - sb.mean, combined, d, p
    )


def _with_stream(config: TrialConfig, stream: int) -> TrialConfig:
    return TrialConfig(config.spec, config.architecture, config.trials, config.seed, config.workers, stream)


def _log_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def thermo_discrete_bound(n: int, c: float) -> float:
    """Tail bound 4 n^(1-C^2/8) + 2 n^(-C^2 n/8) on the discrete/continuous max gap."""
    return 4.0 * n ** (1.0 - c * c / 8.0) + 2.0 * n ** (-c * c * n / 8.0)


def _thermo_chunk(n_grid: tuple, n_fine: int, seed: int, start: int, stop: int):
    out = np.empty((stop - start, len(n_grid)))
    for row, t in enumerate(range(start, stop)):
        w = np.cumsum(unit_normals(seed, t, n_fine, stream=STREAM_BRIDGE)) / math.sqrt(n_fine)
        bridge = np.abs(w - np.arange(1, n_fine + 1) / n_fine * w[-1])
        x_fine = bridge.max()
        for col, n in enumerate(n_grid):
            stride = n_fine // n
            out[row, col] = abs(bridge[stride - 1 :: stride].max() - x_fine)
    return out


def convergence_thermo(
    n_grid, trials: int, seed: int = 0, n_fine: int = 2**20, c: float = 4.5, workers: int = 1
) -> ConvergenceReport:
    """Gap between the max of |B| over k/n, k=1..n, and over a much finer grid.

    The continuous maximum is replaced by the maximum over ``n_fine``
    points on the same bridge path; every n must divide ``n_fine``.
    """
    n_grid = tuple(int(n) for n in n_grid)
    if list(n_grid) != sorted(set(n_grid)):
        raise ValueError("n_grid must be strictly increasing")
    if any(n < 2 or n_fine % n for n in n_grid):
        raise ValueError("every grid size must be >= 2 and divide n_fine")
    args = [(n_grid, n_fine, seed, s, e) for s, e in _chunks(trials)]
    dev = np.concatenate(_map_chunks(_thermo_chunk, args, workers))
    rows = []
    for col, n in enumerate(n_grid):
        d = dev[:, col]
        level = c * math.sqrt(math.log(n) / n)
        rows.append({
            "n": n,
            "mean_deviation": float(d.mean()),
            "se_deviation": float(d.std(ddof=1) / math.sqrt(d.size)) if d.size > 1 else math.nan,
            "envelope_sqrt_logn_over_n": math.sqrt(math.log(n) / n),
            "exceed_level": level,
            "exceed_probability": float(np.mean(d >= level)),
            "exceed_bound": thermo_discrete_bound(n, c),
        })
    usable = [(r["n"], r["mean_deviation"]) for r in rows if r["n"] < n_fine and r["mean_deviation"] > 0]
    slope = _log_slope(*zip(*usable)) if len(usable) >= 2 else None
    note = f"continuous maximum approximated by a {n_fine}-point grid on the same path"
    return ConvergenceReport("thermometer", rows, note, slope)


BINARY_BOUND_CONSTANT = 8.0 + 4.0 / (math.sqrt(2.0 * math.pi) - math.sqrt(math.pi))


def binary_bound(bits: int, eps: float, c: float = BINARY_BOUND_CONSTANT) -> float:
    """C N^2 2^(-N/2) / eps, the bound on P(|M_N - M| > eps)."""
    return c * bits * bits * 2.0 ** (-bits / 2.0) / eps


def coupled_binary(eps_units: np.ndarray, dyadic_normals: np.ndarray) -> tuple[float, float, float]:
    """(M_N from the DAC, M_N from bridge increments, truncated M) on one bridge path.

    ``eps_units`` are the n standardized unit errors; they fix the bridge at
    t = j/n. The bridge is then sampled at t = 2^-l by conditioning on the
    neighbouring values, consuming one entry of ``dyadic_normals`` per level.
    """
    n = eps_units.size
    bits = bits_for(n)
    dev, _ = centered_deviation(Architecture.binary(), eps_units + 0.0)
    m_dac = float(np.abs(dev).max() / math.sqrt(n))

    grid = np.concatenate([[0.0], np.cumsum(eps_units - eps_units.mean())]) / math.sqrt(n)
    m_blocks = 0.5 * sum(abs(grid[2**m - 1] - grid[2 ** (m - 1) - 1]) for m in range(1, bits + 1))

    depth = dyadic_normals.size
    values = np.empty(depth)
    right_t, right_b = 1.0 / n, grid[1]
    for l in range(1, depth + 1):
        t = 2.0**-l
        cell = int(t * n)
        if cell >= 1:
            a, b = cell / n, (cell + 1) / n
            ba, bb = grid[cell], grid[cell + 1]
        else:
            a, ba = 0.0, 0.0
            b, bb = right_t, right_b
        mean = ba + (t - a) / (b - a) * (bb - ba)
        sd = math.sqrt((t - a) * (b - t) / (b - a))
        values[l - 1] = mean + sd * dyadic_normals[l - 1]
        if cell < 1:
            right_t, right_b = t, values[l - 1]
    prev = np.concatenate([[0.0], values[:-1]])
    m_tilde = 0.5 * float(np.abs(prev - values).sum())
    return m_dac, m_blocks, m_tilde


def _binary_chunk(bits: int, depth: int, seed: int, start: int, stop: int):
    n = 2**bits - 1
    out = np.empty((stop - start, 3))
    for row, t in enumerate(range(start, stop)):
        eps = unit_normals(seed, t, n, stream=STREAM_BRIDGE)
        extra = unit_normals(seed, t, depth, stream=STREAM_DYADIC)
        out[row] = coupled_binary(eps, extra)
    return out


def convergence_binary(
    bits_grid, trials: int, seed: int = 0, eps: float = 0.1, extra_depth: int = 40, workers: int = 1
) -> ConvergenceReport:
    """Coupled estimate of |M_N - M| against the C N^2 2^(-N/2)/eps envelope."""
    bits_grid = tuple(int(b) for b in bits_grid)
    if list(bits_grid) != sorted(set(bits_grid)):
        raise ValueError("bits_grid must be strictly increasing")
    if not eps > 0:
        raise ValueError("eps must be positive")
    rows = []
    for bits in bits_grid:
        # one seed per resolution keeps the rows independent of each other
        sub_seed = (seed * 1_000_003 + bits) % (2**64)
        args = [(bits, bits + extra_depth, sub_seed, s, e) for s, e in _chunks(trials)]
        res = np.concatenate(_map_chunks(_binary_chunk, args, workers))
        diff = np.abs(res[:, 0] - res[:, 2])
        rows.append({
            "N": bits,
            "mean_abs_difference": float(diff.mean()),
            "se_abs_difference": float(diff.std(ddof=1) / math.sqrt(diff.size)) if diff.size > 1 else math.nan,
            "eps": eps,
            "exceed_probability": float(np.mean(diff > eps)),
            "exceed_bound": binary_bound(bits, eps),
            "mean_M_N": float(res[:, 0].mean()),
            "exact_mean_M_N": binary.mean_M_finite(bits),
            "max_identity_gap": float(np.max(np.abs(res[:, 0] - res[:, 1]))),
        })
    usable = [(r["N"], r["mean_abs_difference"]) for r in rows]
    slope = float(np.polyfit([u[0] for u in usable], np.log2([u[1] for u in usable]), 1)[0]) if len(rows) >= 2 else None
    note = "M_N and the truncated series share one bridge path; slope is d log2(mean gap)/dN"
    return ConvergenceReport("binary", rows, note, slope)


def analytic_mean(arch: Architecture) -> float | None:
    if arch.kind.value == "thermo":
        return thermo.mean_X()
    if arch.kind.value == "binary":
        return binary.mean_M()
    return None
