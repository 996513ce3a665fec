"""Monte Carlo side: source models, the experiment runner, estimators for
the coverage probabilities feeding the analytic bounds, and statistical
validation of those bounds and of the robustness claim.

Seeding is splittable and documented: every random object derives from
SeedSequence([seed, stream, index]) with stream 1 for design matrices,
2 for source draws and 3 for probability estimators, so trials are
order-independent and reports are reproducible bit for bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import lfilter
from scipy.stats import beta as beta_dist
from scipy.stats import ncx2, norm

from . import theory
from .core import SparcParams, build_design_matrix
from .encoder import (
    STATUS_OK,
    STATUS_TRIVIAL_ZERO,
    STATUS_VARIANCE_OVERFLOW,
    all_distortions,
    encode_min_distance,
    sample_power,
)

__all__ = [
    "SourceModel",
    "TrialRecord",
    "ExperimentReport",
    "ProbabilityEstimate",
    "BoundCheck",
    "RobustnessResult",
    "ExponentTrend",
    "draw_source",
    "run_experiment",
    "estimate_pU1",
    "exact_pU1",
    "estimate_pair_prob",
    "validate_bounds",
    "robustness_suite",
    "exponent_trend",
    "wilson_interval",
    "clopper_pearson_upper",
]

MATRIX_STREAM = 1
SOURCE_STREAM = 2
ESTIMATOR_STREAM = 3

SOURCE_KINDS = ("gaussian_iid", "gauss_markov", "laplace_iid", "uniform_iid")


def _seed_seq(seed: int, stream: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(stream), int(index)])


def _derive_u64(seed: int, stream: int, index: int) -> int:
    return int(_seed_seq(seed, stream, index).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# sources
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SourceModel:
    """Zero-mean ergodic source scaled to per-sample variance sigma2.

    kinds: gaussian_iid, gauss_markov (stationary AR(1) with coefficient
    phi), laplace_iid, uniform_iid.
    """

    kind: str
    sigma2: float
    phi: float = 0.0

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}; "
                             f"expected one of {SOURCE_KINDS}")
        if self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if self.kind == "gauss_markov" and not -1.0 < self.phi < 1.0:
            raise ValueError(f"AR(1) coefficient must lie in (-1,1), got {self.phi}")

    @property
    def label(self) -> str:
        if self.kind == "gauss_markov":
            return f"gauss_markov({self.phi:g})"
        return self.kind


def draw_source(model: SourceModel, n: int, trial_seed) -> np.ndarray:
    """One length-n block, deterministic in (model, trial_seed)."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    rng = np.random.default_rng(trial_seed)
    sig = math.sqrt(model.sigma2)
    if model.kind == "gaussian_iid":
        return sig * rng.standard_normal(n)
    if model.kind == "gauss_markov":
        phi = model.phi
        e = rng.standard_normal(n)
        # stationary start: x[0] ~ N(0, sigma2), innovations sigma2*(1-phi^2)
        v = e * (sig * math.sqrt(1.0 - phi * phi))
        v[0] = sig * e[0]
        return lfilter([1.0], [1.0, -phi], v)
    if model.kind == "laplace_iid":
        return rng.laplace(0.0, sig / math.sqrt(2.0), n)
    # uniform_iid
    half = math.sqrt(3.0) * sig
    return rng.uniform(-half, half, n)


# ---------------------------------------------------------------------------
# intervals
# ---------------------------------------------------------------------------

def wilson_interval(k: int, n: int, conf: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion k/n."""
    if not 0 <= k <= n or n < 1:
        raise ValueError(f"need 0 <= k <= n, n >= 1; got k={k}, n={n}")
    z = norm.ppf(0.5 + conf / 2.0)
    phat = k / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def clopper_pearson_upper(k: int, n: int, conf: float = 0.95) -> float:
    """One-sided exact upper confidence limit for a binomial proportion."""
    if not 0 <= k <= n or n < 1:
        raise ValueError(f"need 0 <= k <= n, n >= 1; got k={k}, n={n}")
    if k == n:
        return 1.0
    return float(beta_dist.ppf(conf, k + 1, n - k))


# ---------------------------------------------------------------------------
# experiment runner
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialRecord:
    trial: int
    source_kind: str
    z2: float
    status: str
    distortion: Optional[float]
    success: bool


@dataclass(frozen=True)
class ExperimentReport:
    """Aggregated outcome of one Monte Carlo run. Timing fields are
    excluded from serialized output so identical configs produce
    byte-identical files."""

    params: SparcParams
    model: SourceModel
    seed: int
    fresh_matrix: bool
    n_trials: int
    status_counts: Dict[str, int]
    n_success: int
    p_error: float
    p_error_ci: Tuple[float, float]
    mean_distortion: Optional[float]
    distortion_quantiles: Dict[str, float]
    distortion_hist: Tuple[Tuple[float, ...], Tuple[int, ...]]
    trials: Tuple[TrialRecord, ...]
    wall_clock_s: float
    candidates_per_s: float

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "params": {k: getattr(self.params, k) for k in
                       ("n", "L", "M", "b", "R", "sigma2", "D", "rho2",
                        "gamma2", "c", "seed")},
            "model": {"kind": self.model.kind, "sigma2": self.model.sigma2,
                      "phi": self.model.phi},
            "seed": self.seed,
            "fresh_matrix": self.fresh_matrix,
            "n_trials": self.n_trials,
            "status_counts": dict(self.status_counts),
            "n_success": self.n_success,
            "p_error": self.p_error,
            "p_error_ci": list(self.p_error_ci),
            "mean_distortion": self.mean_distortion,
            "distortion_quantiles": dict(self.distortion_quantiles),
            "distortion_hist": {
                "edges": list(self.distortion_hist[0]),
                "counts": list(self.distortion_hist[1]),
            },
        }
        if include_timing:
            out["wall_clock_s"] = self.wall_clock_s
            out["candidates_per_s"] = self.candidates_per_s
        return out


def run_experiment(params: SparcParams, model: SourceModel, n_trials: int,
                   seed: Optional[int] = None, fresh_matrix: bool = True,
                   n_threads: Optional[int] = None) -> ExperimentReport:
    """Encode n_trials independent source blocks and tally errors.

    fresh_matrix=True redraws the dictionary each trial (ensemble
    average); False reuses the single matrix seeded by params.seed
    (codebook-specific study). An error is any trial whose status is
    variance_overflow or whose distortion exceeds D.
    """
    if n_trials < 1:
        raise ValueError(f"need n_trials >= 1, got {n_trials}")
    if seed is None:
        seed = params.seed
    fixed = None if fresh_matrix else build_design_matrix(params)

    t_start = time.perf_counter()
    records: List[TrialRecord] = []
    status_counts = {STATUS_OK: 0, STATUS_VARIANCE_OVERFLOW: 0, STATUS_TRIVIAL_ZERO: 0}
    searched = 0
    for trial in range(n_trials):
        source = draw_source(model, params.n, _seed_seq(seed, SOURCE_STREAM, trial))
        if fresh_matrix:
            matrix = build_design_matrix(
                replace(params, seed=_derive_u64(seed, MATRIX_STREAM, trial)))
        else:
            matrix = fixed
        result = encode_min_distance(matrix, source, n_threads=n_threads)
        if result.status == STATUS_OK:
            searched += 1
        success = (result.status != STATUS_VARIANCE_OVERFLOW
                   and result.distortion is not None
                   and result.distortion <= params.D)
        status_counts[result.status] += 1
        records.append(TrialRecord(
            trial=trial, source_kind=model.label,
            z2=sample_power(source), status=result.status,
            distortion=result.distortion, success=success))
    wall = time.perf_counter() - t_start

    n_success = sum(r.success for r in records)
    n_err = n_trials - n_success
    dists = np.array([r.distortion for r in records if r.distortion is not None])
    if dists.size:
        mean_d = float(dists.mean())
        quants = {f"q{int(100 * q)}": float(np.quantile(dists, q))
                  for q in (0.1, 0.5, 0.9)}
        counts, edges = np.histogram(dists, bins=20, range=(0.0, float(dists.max())))
        hist = (tuple(float(e) for e in edges), tuple(int(c) for c in counts))
    else:
        mean_d, quants, hist = None, {}, ((), ())

    return ExperimentReport(
        params=params, model=model, seed=seed, fresh_matrix=fresh_matrix,
        n_trials=n_trials, status_counts=status_counts, n_success=n_success,
        p_error=n_err / n_trials, p_error_ci=wilson_interval(n_err, n_trials),
        mean_distortion=mean_d, distortion_quantiles=quants,
        distortion_hist=hist, trials=tuple(records),
        wall_clock_s=wall,
        candidates_per_s=searched * params.n_codewords / wall if wall > 0 else 0.0,
    )


# ---------------------------------------------------------------------------
# coverage-probability estimators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProbabilityEstimate:
    p: float
    se: float
    n_samples: int
    method: str


def exact_pU1(params: SparcParams, z2: float) -> float:
    """Closed form for the single-codeword coverage probability: with
    coordinates of the codeword i.i.d N(0, gamma2) against the fixed
    vector (z, ..., z), n |s - shat|^2 / gamma2 is noncentral chi-square
    with n degrees of freedom and noncentrality n z2 / gamma2."""
    if z2 <= 0:
        raise ValueError(f"z2 must be positive, got {z2}")
    n, g2 = params.n, params.gamma2
    return float(ncx2.cdf(n * params.D / g2, df=n, nc=n * z2 / g2))


def estimate_pU1(params: SparcParams, z2: float, n_samples: int,
                 seed: int = 0, tilted: bool = False,
                 chunk: int = 200_000) -> ProbabilityEstimate:
    """Monte Carlo estimate of P(one codeword lands within distortion D of
    a power-z2 source). By rotational invariance the codeword coordinates
    are sampled i.i.d N(0, gamma2) against the constant vector (z,...,z);
    no design matrix is built. tilted=True applies importance sampling
    with the optimal exponential tilt t0 for rare events."""
    if z2 <= 0:
        raise ValueError(f"z2 must be positive, got {z2}")
    if n_samples < 1:
        raise ValueError(f"need n_samples >= 1, got {n_samples}")
    n, g2, D = params.n, params.gamma2, params.D
    z = math.sqrt(z2)
    rng = np.random.default_rng(_seed_seq(seed, ESTIMATOR_STREAM, 0))

    if not tilted:
        hits = 0
        done = 0
        while done < n_samples:
            m = min(chunk, n_samples - done)
            x = math.sqrt(g2) * rng.standard_normal((m, n))
            v = np.einsum("ij,ij->i", x - z, x - z)
            hits += int(np.count_nonzero(v <= n * D))
            done += m
        p = hits / n_samples
        se = math.sqrt(p * (1.0 - p) / n_samples)
        return ProbabilityEstimate(p, se, n_samples, "untilted")

    t0 = theory.t0_tilt(z2, g2, D)
    shrink = 1.0 - 2.0 * g2 * t0  # > 1 for t0 < 0
    var_t = g2 / shrink
    mean_t = -2.0 * t0 * z * var_t
    psi = t0 * z2 / shrink - 0.5 * math.log(shrink)  # per-coordinate ln MGF
    sum_w = 0.0
    sum_w2 = 0.0
    hits = 0
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        x = mean_t + math.sqrt(var_t) * rng.standard_normal((m, n))
        v = np.einsum("ij,ij->i", x - z, x - z)
        w = np.where(v <= n * D, np.exp(n * psi - t0 * v), 0.0)
        hits += int(np.count_nonzero(w))
        sum_w += float(w.sum())
        sum_w2 += float((w * w).sum())
        done += m
    if hits == 0:
        raise RuntimeError(
            "zero effective sample size under tilting: no sample hit the "
            "coverage region; increase n_samples")
    p = sum_w / n_samples
    var = max(sum_w2 / n_samples - p * p, 0.0)
    return ProbabilityEstimate(p, math.sqrt(var / n_samples), n_samples, "tilted")


def estimate_pair_prob(params: SparcParams, z2: float, r: int, n_samples: int,
                       seed: int = 0, chunk: int = 100_000) -> ProbabilityEstimate:
    """Monte Carlo estimate of P(two codewords sharing r sections both land
    within D of a power-z2 source). Coordinate pairs are jointly Gaussian
    with covariance gamma2 [[1, a], [a, 1]], a = r/L, sampled against the
    fixed vector (z, ..., z)."""
    if z2 <= 0:
        raise ValueError(f"z2 must be positive, got {z2}")
    if not 0 <= r <= params.L - 1:
        raise ValueError(f"overlap r must lie in [0, L-1], got r={r}, L={params.L}")
    if n_samples < 1:
        raise ValueError(f"need n_samples >= 1, got {n_samples}")
    n, g2, D = params.n, params.gamma2, params.D
    alpha = r / params.L
    g = math.sqrt(g2)
    z = math.sqrt(z2)
    root = math.sqrt(1.0 - alpha * alpha)
    rng = np.random.default_rng(_seed_seq(seed, ESTIMATOR_STREAM, 1 + r))
    hits = 0
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        x = rng.standard_normal((m, n))
        y = rng.standard_normal((m, n))
        s1 = g * x
        s2 = g * (alpha * x + root * y)
        v1 = np.einsum("ij,ij->i", s1 - z, s1 - z)
        v2 = np.einsum("ij,ij->i", s2 - z, s2 - z)
        hits += int(np.count_nonzero((v1 <= n * D) & (v2 <= n * D)))
        done += m
    p = hits / n_samples
    se = math.sqrt(p * (1.0 - p) / n_samples)
    return ProbabilityEstimate(p, se, n_samples, "untilted")


# ---------------------------------------------------------------------------
# bound validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundCheck:
    """Empirical zero-coverage probability vs the two analytic bounds at
    one (params, z2) cell."""

    z2: float
    n_matrices: int
    empirical_p: float
    empirical_se: float
    pU1: ProbabilityEstimate
    pPair: Tuple[ProbabilityEstimate, ...]
    second_moment: float
    suen: theory.SuenTerms
    within_second_moment: bool
    within_suen: bool

    @property
    def second_moment_slack(self) -> float:
        return self.second_moment - self.empirical_p

    @property
    def suen_slack(self) -> float:
        return self.suen.bound - self.empirical_p


def validate_bounds(params: SparcParams, z2: float, n_matrices: int,
                    n_prob_samples: int = 200_000,
                    seed: Optional[int] = None) -> BoundCheck:
    """Draw n_matrices dictionaries against the fixed source (z, ..., z),
    measure how often no codeword lands within D, and compare with the
    second-moment and correlation-inequality bounds fed by Monte Carlo
    estimates of the coverage probabilities. Within-bound flags use a
    3-standard-error allowance on the empirical side."""
    if params.n_codewords > 10 ** 5:
        raise ValueError(
            f"codebook holds {params.n_codewords} candidates; bound validation "
            "is capped at 1e5")
    if n_matrices < 1:
        raise ValueError(f"need n_matrices >= 1, got {n_matrices}")
    if not 0 < z2:
        raise ValueError(f"z2 must be positive, got {z2}")
    if seed is None:
        seed = params.seed

    source = np.full(params.n, math.sqrt(z2))
    events = 0
    for i in range(n_matrices):
        matrix = build_design_matrix(
            replace(params, seed=_derive_u64(seed, MATRIX_STREAM, i)))
        dists = all_distortions(matrix, source)
        if not np.any(dists < params.D):
            events += 1
    p_emp = events / n_matrices
    se_emp = math.sqrt(p_emp * (1.0 - p_emp) / n_matrices)

    pU1 = estimate_pU1(params, z2, n_prob_samples, seed=seed)
    pPair = tuple(estimate_pair_prob(params, z2, r, n_prob_samples, seed=seed)
                  for r in range(1, params.L))
    pair_vals = [est.p for est in pPair]
    sm = theory.second_moment_bound(params, z2, pU1.p, pair_vals)
    su = theory.suen_bound(params, z2, pU1.p, pair_vals)
    return BoundCheck(
        z2=z2, n_matrices=n_matrices, empirical_p=p_emp, empirical_se=se_emp,
        pU1=pU1, pPair=pPair, second_moment=sm, suen=su,
        within_second_moment=p_emp <= sm + 3.0 * se_emp,
        within_suen=p_emp <= su.bound + 3.0 * se_emp,
    )


# ---------------------------------------------------------------------------
# robustness and exponent trends
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionalRate:
    n_conditioned: int
    rate: float
    se: float


@dataclass(frozen=True)
class RobustnessResult:
    """Per-model reports on a shared matrix seed, plus success rates
    conditioned on the empirical power not exceeding sigma2."""

    baseline: str
    reports: Dict[str, ExperimentReport]
    conditional: Dict[str, ConditionalRate]
    within_band: Dict[str, bool]


def robustness_suite(params: SparcParams, models: Sequence[SourceModel],
                     n_trials: int, seed: Optional[int] = None,
                     n_threads: Optional[int] = None) -> RobustnessResult:
    """Run the same experiment (same seeds, hence same matrices) for each
    source model and compare conditional success rates given
    |s|^2 <= sigma2 against the first model, with a joint 3-SE band."""
    if not models:
        raise ValueError("need at least one source model")
    for model in models:
        if model.sigma2 > params.sigma2:
            raise ValueError(
                f"model {model.label} has variance {model.sigma2} > "
                f"codebook design variance {params.sigma2}")
    if seed is None:
        seed = params.seed

    reports: Dict[str, ExperimentReport] = {}
    conditional: Dict[str, ConditionalRate] = {}
    for model in models:
        report = run_experiment(params, model, n_trials, seed=seed,
                                n_threads=n_threads)
        key = model.label
        reports[key] = report
        cond = [r for r in report.trials if r.z2 <= params.sigma2]
        k = sum(r.success for r in cond)
        m = len(cond)
        rate = k / m if m else math.nan
        se = math.sqrt(rate * (1.0 - rate) / m) if m else math.nan
        conditional[key] = ConditionalRate(m, rate, se)

    baseline = models[0].label
    base = conditional[baseline]
    within = {}
    for key, cond in conditional.items():
        band = 3.0 * math.sqrt(base.se ** 2 + cond.se ** 2)
        within[key] = abs(cond.rate - base.rate) <= band
    return RobustnessResult(baseline, reports, conditional, within)


@dataclass(frozen=True)
class TrendEntry:
    n: int
    L: int
    M: int
    n_trials: int
    n_errors: int
    p_error: float
    p_error_ci: Tuple[float, float]
    exponent: Optional[float]        # -ln(p)/n, None when p == 0
    exponent_upper_only: Optional[float]  # -ln(CP upper bound)/n when censored


@dataclass(frozen=True)
class ExponentTrend:
    entries: Tuple[TrendEntry, ...]
    slope: Optional[float]
    intercept: Optional[float]
    r_squared: Optional[float]


def exponent_trend(params_family: Sequence[SparcParams], model: SourceModel,
                   n_trials: int, seed: Optional[int] = None,
                   n_threads: Optional[int] = None) -> ExponentTrend:
    """Empirical error exponents -ln(P_e)/n across a family of sizes at
    common (R, D), with a linear fit of the exponent against n. Sizes
    with zero observed errors report a one-sided upper bound instead of a
    point estimate and are excluded from the fit."""
    if len(params_family) < 3:
        raise ValueError("need at least 3 sizes for a trend")
    R0, D0 = params_family[0].R, params_family[0].D
    for p in params_family[1:]:
        if abs(p.R - R0) > 1e-9 * max(1.0, abs(R0)) or p.D != D0:
            raise ValueError(
                f"family must share (R, D); got R={p.R} vs {R0}, D={p.D} vs {D0}")

    entries: List[TrendEntry] = []
    for p in params_family:
        report = run_experiment(p, model, n_trials,
                                seed=p.seed if seed is None else seed,
                                n_threads=n_threads)
        k_err = report.n_trials - report.n_success
        if k_err == 0:
            upper = clopper_pearson_upper(0, n_trials)
            exponent, upper_only = None, -math.log(upper) / p.n
        else:
            exponent, upper_only = -math.log(report.p_error) / p.n, None
        entries.append(TrendEntry(
            n=p.n, L=p.L, M=p.M, n_trials=n_trials, n_errors=k_err,
            p_error=report.p_error, p_error_ci=report.p_error_ci,
            exponent=exponent, exponent_upper_only=upper_only))

    fitted = [(e.n, e.exponent) for e in entries if e.exponent is not None]
    if len(fitted) >= 2:
        xs = np.array([f[0] for f in fitted], dtype=float)
        ys = np.array([f[1] for f in fitted], dtype=float)
        slope, intercept = np.polyfit(xs, ys, 1)
        resid = ys - (slope * xs + intercept)
        total = ys - ys.mean()
        ss_tot = float(total @ total)
        r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
        return ExponentTrend(tuple(entries), float(slope), float(intercept), r2)
    return ExponentTrend(tuple(entries), None, None, None)
