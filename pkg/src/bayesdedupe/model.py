"""Likelihood model for comparison data under a coreference labeling.

Comparison levels for coreferent pairs follow a per-field sequential
parametrization: m[f][0] is the probability of level 0, and m[f][l] for
l >= 1 is the probability of level l given the level exceeds l-1, so a
field with levels 0..L carries L free parameters. The induced level
probabilities (star form) are m[0], m[l]*prod(1-m[:l]), and the top
level gets prod(1-m) - a proper multinomial. Noncoreferent pairs follow
the same construction with parameters u. Missing values simply drop out
of the likelihood (missingness is assumed ignorable).

Priors: each m[f][l] gets a Beta(alpha, beta) truncated to [lambda, 1),
encoding that coreferent records agree at least this often; each u[f][l]
gets an untruncated Beta. Defaults are uniform (alpha = beta = 1).

The prior over coreference structures is flat over the partitions the
candidate set permits. On labelings it appears as (r - n)!/r! for a
labeling with n cells, which marginalizes back to the flat partition
prior; since log_posterior_unnormalized is a function of the partition,
that term is a constant and contributes 0 below.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, betaln

from .candidates import CandidateGraph
from .comparison import PairComparisons
from .errors import ConfigError


@dataclass
class ModelParams:
    """Sequential-conditional level parameters, one vector per field.

    m[f] and u[f] each have length L_f (one entry per level except the
    last, which is implied).
    """

    m: list
    u: list

    def __post_init__(self):
        self.m = [np.asarray(v, dtype=np.float64) for v in self.m]
        self.u = [np.asarray(v, dtype=np.float64) for v in self.u]
        if len(self.m) != len(self.u):
            raise ConfigError("m and u must cover the same fields")
        for mf, uf in zip(self.m, self.u):
            if mf.shape != uf.shape:
                raise ConfigError("m and u shapes differ for some field")

    def copy(self) -> "ModelParams":
        return ModelParams([v.copy() for v in self.m], [v.copy() for v in self.u])


@dataclass
class PriorSpec:
    """Per-parameter truncation points and Beta hyperparameters."""

    lam: list
    alpha1: list
    beta1: list
    alpha0: list
    beta0: list

    def __post_init__(self):
        self.lam = [np.asarray(v, dtype=np.float64) for v in self.lam]
        self.alpha1 = [np.asarray(v, dtype=np.float64) for v in self.alpha1]
        self.beta1 = [np.asarray(v, dtype=np.float64) for v in self.beta1]
        self.alpha0 = [np.asarray(v, dtype=np.float64) for v in self.alpha0]
        self.beta0 = [np.asarray(v, dtype=np.float64) for v in self.beta0]
        for name in ("alpha1", "beta1", "alpha0", "beta0"):
            arrs = getattr(self, name)
            if len(arrs) != len(self.lam):
                raise ConfigError("prior hyperparameter field counts differ")
            for a, l in zip(arrs, self.lam):
                if a.shape != l.shape:
                    raise ConfigError("prior hyperparameter shapes differ")
                if np.any(a <= 0):
                    raise ConfigError("Beta hyperparameters must be positive")
        for l in self.lam:
            if np.any((l < 0) | (l > 1 - 1e-6)):
                raise ConfigError("truncation points must lie in [0, 1 - 1e-6]")

    @property
    def n_fields(self) -> int:
        return len(self.lam)

    @staticmethod
    def from_lambdas(lambdas, alpha1=1.0, beta1=1.0,
                     alpha0=1.0, beta0=1.0) -> "PriorSpec":
        """Uniform-Beta priors with the given per-field truncation vectors."""
        lam = [np.asarray(v, dtype=np.float64) for v in lambdas]
        like = lambda c: [np.full(v.shape, float(c)) for v in lam]
        return PriorSpec(lam=lam, alpha1=like(alpha1), beta1=like(beta1),
                         alpha0=like(alpha0), beta0=like(beta0))

    @staticmethod
    def flat(n_levels, lam=0.0, **hyper) -> "PriorSpec":
        """One shared truncation value per field, given level counts."""
        lams = [np.full(n - 1, float(lam)) for n in n_levels]
        return PriorSpec.from_lambdas(lams, **hyper)


def star_probs(m_f: np.ndarray) -> np.ndarray:
    """Level probabilities induced by one field's sequential parameters.

    Length is len(m_f) + 1 and the result sums to 1 exactly as a
    telescoping product.
    """
    m_f = np.asarray(m_f, dtype=np.float64)
    rest = np.cumprod(1.0 - m_f)
    out = np.empty(len(m_f) + 1)
    out[0] = m_f[0] if len(m_f) else 1.0
    if len(m_f) > 1:
        out[1:-1] = m_f[1:] * rest[:-1]
    out[-1] = rest[-1] if len(m_f) else 1.0
    return out


def _log_level_prob(level: int, params_f: np.ndarray) -> float:
    """Sequential-form log probability of one observed level."""
    L = len(params_f)
    total = 0.0
    if level < L:
        total += float(np.log(params_f[level]))
    for h in range(min(level, L)):
        total += float(np.log1p(-params_f[h]))
    return total


def log_p1_obs(vec, params: ModelParams) -> float:
    """Log probability of a pair's observed levels if coreferent."""
    total = 0.0
    for f, lv in enumerate(vec.levels):
        if lv is not None:
            total += _log_level_prob(lv, params.m[f])
    return total


def log_p0_obs(vec, params: ModelParams) -> float:
    """Log probability of a pair's observed levels if not coreferent."""
    total = 0.0
    for f, lv in enumerate(vec.levels):
        if lv is not None:
            total += _log_level_prob(lv, params.u[f])
    return total


def log_likelihood_ratio(vec, params: ModelParams) -> float:
    return log_p1_obs(vec, params) - log_p0_obs(vec, params)


def log_level_tables(params: ModelParams) -> tuple[list, list]:
    """Log star-probability lookup tables (per field, indexed by level)."""
    lm = [np.log(star_probs(v)) for v in params.m]
    lu = [np.log(star_probs(v)) for v in params.u]
    return lm, lu


@dataclass
class SufficientStats:
    """Observed-level counts split by coreference status.

    a1[f][l] counts candidate pairs currently coreferent with observed
    level l in field f; a0[f][l] counts the rest of the compared pairs
    (noncoreferent candidates plus all fixed pairs) the same way. The
    fixed-pair share of a0 never depends on the labeling.
    """

    a1: list
    a0: list

    @staticmethod
    def zeros(n_levels) -> "SufficientStats":
        return SufficientStats(
            a1=[np.zeros(n, dtype=np.int64) for n in n_levels],
            a0=[np.zeros(n, dtype=np.int64) for n in n_levels])

    def copy(self) -> "SufficientStats":
        return SufficientStats([v.copy() for v in self.a1],
                               [v.copy() for v in self.a0])

    def equals(self, other: "SufficientStats") -> bool:
        return (len(self.a1) == len(other.a1)
                and all(np.array_equal(np.asarray(x), np.asarray(y))
                        for x, y in zip(self.a1, other.a1))
                and all(np.array_equal(np.asarray(x), np.asarray(y))
                        for x, y in zip(self.a0, other.a0)))


def check_valid_labeling(z, graph: CandidateGraph) -> None:
    """Raise if the labeling merges any pair outside the candidate set."""
    cells: dict = {}
    for i, lab in enumerate(z):
        cells.setdefault(lab, []).append(i)
    cand = None
    for cell in cells.values():
        if len(cell) > 1:
            if cand is None:
                cand = graph.candidate_pair_set()
            for a in range(len(cell)):
                for b in range(a + 1, len(cell)):
                    if (cell[a], cell[b]) not in cand:
                        raise ValueError(
                            f"labeling merges non-candidate pair "
                            f"({cell[a]}, {cell[b]})")


def sufficient_stats(z, graph: CandidateGraph,
                     comps: PairComparisons) -> SufficientStats:
    """Count observed levels by coreference status under labeling z."""
    check_valid_labeling(z, graph)
    z_arr = np.asarray(z)
    i_arr, j_arr = comps.pairs[:, 0], comps.pairs[:, 1]
    coref = (z_arr[i_arr] == z_arr[j_arr]) & graph.candidate_mask
    stats = SufficientStats.zeros(comps.n_levels)
    for f in range(len(comps.fields)):
        col = comps.levels[:, f]
        obs = col >= 0
        stats.a1[f] = np.bincount(col[obs & coref],
                                  minlength=comps.n_levels[f]).astype(np.int64)
        stats.a0[f] = np.bincount(col[obs & ~coref],
                                  minlength=comps.n_levels[f]).astype(np.int64)
    return stats


def fixed_pair_stats(graph: CandidateGraph, comps: PairComparisons) -> list:
    """Per-field observed-level counts over the fixed pairs only.

    This is the labeling-independent share of a0, precomputed once.
    """
    fixed = ~graph.candidate_mask
    out = []
    for f in range(len(comps.fields)):
        col = comps.levels[:, f]
        obs = (col >= 0) & fixed
        out.append(np.bincount(col[obs], minlength=comps.n_levels[f]).astype(np.int64))
    return out


def _log_beta_tail(a: float, b: float, lam: float) -> float:
    """log(1 - I_lam(a, b)), switching to high precision on underflow."""
    if lam <= 0.0:
        return 0.0
    tail = 1.0 - float(betainc(a, b, lam))
    if tail > 1e-280:
        return float(np.log(tail))
    import mpmath
    with mpmath.workdps(60):
        t = mpmath.betainc(b, a, 0, 1.0 - lam, regularized=True)
        return float(mpmath.log(t))


def truncated_beta_logpdf(x: float, a: float, b: float, lam: float) -> float:
    if not (lam <= x < 1.0) or x <= 0.0:
        return -np.inf
    return ((a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x)
            - betaln(a, b) - _log_beta_tail(a, b, lam))


def in_support(params: ModelParams, prior: PriorSpec) -> bool:
    for mf, lamf in zip(params.m, prior.lam):
        if np.any(mf < lamf) or np.any(mf >= 1.0) or np.any(mf <= 0.0):
            return False
    for uf in params.u:
        if np.any(uf <= 0.0) or np.any(uf >= 1.0):
            return False
    return True


def log_likelihood(stats: SufficientStats, params: ModelParams) -> float:
    """Observed-data log likelihood given level counts."""
    lm, lu = log_level_tables(params)
    total = 0.0
    for f in range(len(lm)):
        total += float(np.asarray(stats.a1[f]) @ lm[f])
        total += float(np.asarray(stats.a0[f]) @ lu[f])
    return total


def log_posterior_unnormalized(z, params: ModelParams, prior: PriorSpec,
                               graph: CandidateGraph,
                               comps: PairComparisons) -> float:
    """Joint log density of (partition, parameters) up to a constant.

    The flat partition prior contributes 0; two labelings of the same
    partition therefore score identically. Parameters outside the prior
    support give -inf.
    """
    if not in_support(params, prior):
        return -np.inf
    stats = sufficient_stats(z, graph, comps)
    total = log_likelihood(stats, params)
    for f in range(prior.n_fields):
        for l in range(len(prior.lam[f])):
            total += truncated_beta_logpdf(
                float(params.m[f][l]), float(prior.alpha1[f][l]),
                float(prior.beta1[f][l]), float(prior.lam[f][l]))
            x = float(params.u[f][l])
            if not 0.0 < x < 1.0:
                return -np.inf
            a0 = float(prior.alpha0[f][l])
            b0 = float(prior.beta0[f][l])
            total += (a0 - 1.0) * np.log(x) + (b0 - 1.0) * np.log1p(-x) - betaln(a0, b0)
    return float(total)


def marginal_log_likelihood(z, prior: PriorSpec, graph: CandidateGraph,
                            comps: PairComparisons) -> float:
    """Log P(observed levels | partition) with parameters integrated out.

    Conjugacy makes each (field, level) factor an incomplete-Beta ratio:
    for m, log of B(a+c, b+t) * (1 - I_lam(a+c, b+t)) minus the same at
    zero counts; for u, the untruncated version. Used by exact small-r
    checks against the sampler.
    """
    stats = sufficient_stats(z, graph, comps)
    total = 0.0
    for f in range(prior.n_fields):
        c1 = np.asarray(stats.a1[f], dtype=np.float64)
        c0 = np.asarray(stats.a0[f], dtype=np.float64)
        L = len(prior.lam[f])
        tails1 = np.concatenate([np.cumsum(c1[::-1])[::-1][1:], [0.0]])
        tails0 = np.concatenate([np.cumsum(c0[::-1])[::-1][1:], [0.0]])
        for l in range(L):
            a, b = float(prior.alpha1[f][l]), float(prior.beta1[f][l])
            lam = float(prior.lam[f][l])
            total += (betaln(a + c1[l], b + tails1[l]) + _log_beta_tail(
                a + c1[l], b + tails1[l], lam))
            total -= betaln(a, b) + _log_beta_tail(a, b, lam)
            a0, b0 = float(prior.alpha0[f][l]), float(prior.beta0[f][l])
            total += betaln(a0 + c0[l], b0 + tails0[l]) - betaln(a0, b0)
    return float(total)
