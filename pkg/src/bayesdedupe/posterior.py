"""Summaries of retained partition samples, and their serialization.

Pairwise metrics against a reference partition follow the usual
confusion counts over record pairs: b11 pairs coreferent in both, b10
only in the estimate, b01 only in the reference. Recall is
b11/(b11+b01), precision b11/(b11+b10), and an empty denominator scores
1 (nothing to miss, or nothing asserted falsely).
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .errors import DataError


def pairwise_probabilities(sample, graph) -> np.ndarray:
    """Posterior coreference probability for every candidate pair."""
    pairs = graph.candidate_pairs()
    if sample.n_kept == 0:
        return np.zeros(len(pairs))
    L = sample.labelings
    eq = L[:, pairs[:, 0]] == L[:, pairs[:, 1]]
    return eq.mean(axis=0)


def write_pairwise_csv(path, graph, probs: np.ndarray) -> None:
    pairs = graph.candidate_pairs()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("i,j,probability\n")
        for (i, j), p in zip(pairs, probs):
            fh.write(f"{i},{j},{p:.6f}\n")


def duplicate_distribution(sample, interval: float = 0.90) -> dict:
    """Posterior summary of the duplicate count r - n(Z).

    The central interval at the given level uses integer-conservative
    endpoints (lower interpolation below, higher above). Percentages are
    relative to the file's record count.
    """
    r = sample.r
    dups = r - sample.n_cells_per_sample()
    lo_q, hi_q = (1.0 - interval) / 2.0, (1.0 + interval) / 2.0
    lo = float(np.quantile(dups, lo_q, method="lower"))
    hi = float(np.quantile(dups, hi_q, method="higher"))
    pct = 100.0 / r if r else 0.0
    return {
        "records": r,
        "mean": float(dups.mean()),
        "median": float(np.median(dups)),
        "min": int(dups.min()),
        "max": int(dups.max()),
        "interval_level": interval,
        "interval": [int(lo), int(hi)],
        "percent_mean": float(dups.mean() * pct),
        "percent_median": float(np.median(dups) * pct),
        "percent_interval": [lo * pct, hi * pct],
    }


def duplicate_percentage(r: int, n_unique: int) -> float:
    """Share of records that are duplicates when n_unique cells remain."""
    if r <= 0:
        raise ValueError("r must be positive")
    return 100.0 * (r - n_unique) / r


def confusion_counts(est, ref) -> tuple[int, int, int]:
    """(b11, b10, b01) pair counts between two labelings."""
    est = np.asarray(est)
    ref = np.asarray(ref)
    if est.shape != ref.shape:
        raise DataError("labelings cover different record counts")

    def within_pairs(labels) -> int:
        _, counts = np.unique(labels, return_counts=True)
        return int((counts * (counts - 1) // 2).sum())

    # pairs coreferent in both = within-pairs of the joint refinement
    _, est_codes = np.unique(est, return_inverse=True)
    _, ref_codes = np.unique(ref, return_inverse=True)
    width = int(ref_codes.max()) + 1 if len(ref_codes) else 1
    joint = est_codes.astype(np.int64) * width + ref_codes
    b11 = within_pairs(joint)
    b10 = within_pairs(est) - b11
    b01 = within_pairs(ref) - b11
    return b11, b10, b01


def precision_recall(est, ref) -> tuple[float, float]:
    """Pairwise (precision, recall) of est against the reference."""
    b11, b10, b01 = confusion_counts(est, ref)
    precision = b11 / (b11 + b10) if b11 + b10 else 1.0
    recall = b11 / (b11 + b01) if b11 + b01 else 1.0
    return precision, recall


def metric_summary(sample, ref) -> dict:
    """Median and 1st/99th percentiles of pairwise metrics across the
    retained samples."""
    ref = np.asarray(ref)
    precs = np.empty(sample.n_kept)
    recs = np.empty(sample.n_kept)
    for k in range(sample.n_kept):
        precs[k], recs[k] = precision_recall(sample.labelings[k], ref)

    def summarize(x: np.ndarray) -> dict:
        return {"median": float(np.median(x)),
                "p01": float(np.percentile(x, 1)),
                "p99": float(np.percentile(x, 99))}

    return {"precision": summarize(precs), "recall": summarize(recs)}


def partition_frequency_table(sample) -> list:
    """Distinct retained partitions with counts, most frequent first.

    Rows of the sample are canonical labelings, so identical rows mean
    identical partitions. Each entry is (labels_tuple, count, frequency).
    """
    if sample.n_kept == 0:
        return []
    uniq, counts = np.unique(sample.labelings, axis=0, return_counts=True)
    order = np.argsort(-counts, kind="stable")
    total = counts.sum()
    return [(tuple(int(v) for v in uniq[k]), int(counts[k]),
             counts[k] / total) for k in order]


def write_frequency_csv(path, table) -> None:
    from .partition import format_partition
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("partition,count,frequency\n")
        for labels, count, freq in table:
            fh.write(f"{format_partition(labels)},{count},{freq:.6f}\n")


def pool_samples(samples: list):
    """Concatenate retained draws from several chains into one sample.

    Iteration numbers repeat per chain; traces are stacked in chain
    order. Chains with fixed parameters pool to a trace-free sample.
    """
    from .gibbs import PosteriorSample

    if not samples:
        raise ValueError("nothing to pool")
    if len(samples) == 1:
        return samples[0]
    if len({s.r for s in samples}) != 1:
        raise ValueError("cannot pool samples over different files")
    has_trace = all(s.m_trace is not None for s in samples)
    return PosteriorSample(
        labelings=np.concatenate([s.labelings for s in samples]),
        kept_iterations=np.concatenate([s.kept_iterations for s in samples]),
        m_trace=np.concatenate([s.m_trace for s in samples]) if has_trace else None,
        u_trace=np.concatenate([s.u_trace for s in samples]) if has_trace else None,
        fields=samples[0].fields, n_levels=samples[0].n_levels,
        seed=samples[0].seed, config=samples[0].config,
        runtime_s=sum(s.runtime_s for s in samples))


# --- serialization ----------------------------------------------------------

def save_labelings(path, sample) -> None:
    """One retained labeling per line: space-separated canonical cell ids."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in sample.labelings:
            fh.write(" ".join(str(int(v)) for v in row))
            fh.write("\n")


def load_labelings(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = [int(tok) for tok in line.split()]
            except ValueError:
                raise DataError(f"{path}:{lineno}: unparseable label") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataError(f"{path}:{lineno}: ragged labeling row")
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no labelings found")
    return np.array(rows, dtype=np.int32)


def save_phi_trace(path, sample) -> None:
    """Parameter trace CSV: iteration, field, level, m, u per row."""
    if sample.m_trace is None:
        raise DataError("this sample was drawn with fixed parameters; no trace")
    cols = []
    for f, name in enumerate(sample.fields):
        for l in range(sample.n_levels[f] - 1):
            cols.append((name, l))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "field", "level", "m", "u"])
        for k in range(sample.n_kept):
            it = int(sample.kept_iterations[k])
            for c, (name, l) in enumerate(cols):
                writer.writerow([it, name, l,
                                 f"{sample.m_trace[k, c]:.8f}",
                                 f"{sample.u_trace[k, c]:.8f}"])


def load_truth(path, r: int | None = None) -> np.ndarray:
    """Ground-truth entity labels from a record_id,entity_id CSV."""
    mapping = {}
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["record_id", "entity_id"]:
            raise DataError(f"{path}: expected header record_id,entity_id")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{lineno}: expected two columns")
            try:
                rid, ent = int(row[0]), int(row[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: unparseable id") from None
            if rid in mapping:
                raise DataError(f"{path}:{lineno}: duplicate record id {rid}")
            mapping[rid] = ent
    if not mapping:
        raise DataError(f"{path}: no rows")
    size = r if r is not None else max(mapping) + 1
    if set(mapping) != set(range(size)):
        raise DataError(f"{path}: record ids do not cover 0..{size - 1}")
    return np.array([mapping[k] for k in range(size)], dtype=np.int64)


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
