"""Independent-pairs mixture baseline.

Each candidate pair carries its own latent match flag, iid Bernoulli(p)
given a uniform mixing weight, with the same leveled likelihood for
matches and non-matches as the partition model. Because the flags are
independent, posterior draws can assert A matches B and B matches C
while A does not match C; the per-draw count of such triplets is
recorded so the effect is measurable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .candidates import CandidateGraph
from .comparison import PairComparisons
from .gibbs import SamplerConfig, SamplerContext, draw_params, flatten_prior
from .model import ModelParams, PriorSpec, SufficientStats


def count_nontransitive_triplets(r: int, pos_pairs) -> int:
    """Triples of records with exactly two positive links among them.

    Pairs never compared count as negative. Each such triple has a
    unique center record incident to both links; the count is
    center-paths minus three per triangle.
    """
    adj: dict = {}
    for i, j in pos_pairs:
        adj.setdefault(i, set()).add(j)
        adj.setdefault(j, set()).add(i)
    paths = sum(len(s) * (len(s) - 1) // 2 for s in adj.values())
    closed = 0
    for i, j in pos_pairs:
        closed += len(adj[i] & adj[j])
    return paths - closed


def delta_from_labeling(z, pairs: np.ndarray) -> np.ndarray:
    """Pairwise link indicators implied by a partition labeling."""
    z = np.asarray(z)
    return (z[pairs[:, 0]] == z[pairs[:, 1]]).astype(np.int8)


@dataclass
class MixtureSample:
    delta_mean: np.ndarray        # per candidate pair
    nontransitive: np.ndarray     # per retained draw
    p_trace: np.ndarray
    m_trace: np.ndarray
    u_trace: np.ndarray
    kept_iterations: np.ndarray
    fields: tuple
    n_levels: tuple
    seed: int
    config: SamplerConfig
    runtime_s: float

    @property
    def n_kept(self) -> int:
        return len(self.kept_iterations)


def _delta_stats(ctx: SamplerContext, delta: np.ndarray) -> SufficientStats:
    a1, a0 = [], []
    for f in range(len(ctx.comps.fields)):
        o, lv = ctx.obs_idx[f], ctx.obs_lv[f]
        n = ctx.comps.n_levels[f]
        pos = delta[o] == 1
        a1.append(np.bincount(lv[pos], minlength=n).astype(np.int64))
        a0.append(np.bincount(lv[~pos], minlength=n).astype(np.int64)
                  + ctx.fixed_a0[f])
    return SufficientStats(a1=a1, a0=a0)


def run_mixture(comps: PairComparisons, graph: CandidateGraph,
                prior: PriorSpec, config: SamplerConfig) -> MixtureSample:
    """Gibbs over (match flags, mixing weight, level parameters).

    Sweep order: flags given p and the level parameters, then p, then
    the level parameters; retention follows the partition sampler.
    """
    start = time.perf_counter()
    ctx = SamplerContext(comps, graph)
    flat = flatten_prior(prior)
    rng = np.random.default_rng(config.seed)

    n_cand = ctx.n_candidates
    cand_pairs = graph.candidate_pairs()
    delta = np.zeros(n_cand, dtype=np.int8)
    m_list, u_list, m_flat, u_flat = draw_params(
        rng, flat, _delta_stats(ctx, delta))
    p = rng.beta(1.0, 1.0 + n_cand)

    kept_z, kept_iter, p_tr, m_tr, u_tr, nontr = [], [], [], [], [], []
    for t in range(1, config.iterations + 1):
        loglr = np.asarray(ctx.log_ratios(ModelParams(m=m_list, u=u_list)))
        logit = np.log(p) - np.log1p(-p) + loglr
        prob = 1.0 / (1.0 + np.exp(-logit))
        delta = (rng.random(n_cand) < prob).astype(np.int8)
        n_pos = int(delta.sum())
        p = rng.beta(1.0 + n_pos, 1.0 + n_cand - n_pos)
        m_list, u_list, m_flat, u_flat = draw_params(
            rng, flat, _delta_stats(ctx, delta))
        if t > config.burn_in and (t - config.burn_in - 1) % config.thinning == 0:
            kept_iter.append(t)
            p_tr.append(p)
            m_tr.append(m_flat.copy())
            u_tr.append(u_flat.copy())
            kept_z.append(delta.copy())
            nontr.append(count_nontransitive_triplets(
                comps.r, cand_pairs[delta == 1]))

    kept = np.asarray(kept_z, dtype=np.int8)
    return MixtureSample(
        delta_mean=kept.mean(axis=0) if len(kept) else np.zeros(n_cand),
        nontransitive=np.asarray(nontr, dtype=np.int64),
        p_trace=np.asarray(p_tr),
        m_trace=np.asarray(m_tr) if m_tr else np.empty((0, len(flat.lam))),
        u_trace=np.asarray(u_tr) if u_tr else np.empty((0, len(flat.lam))),
        kept_iterations=np.asarray(kept_iter, dtype=np.int64),
        fields=tuple(comps.fields), n_levels=tuple(comps.n_levels),
        seed=config.seed, config=config,
        runtime_s=time.perf_counter() - start)
