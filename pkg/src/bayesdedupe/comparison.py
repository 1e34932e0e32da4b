"""Per-field comparators and their discretization into ordinal levels.

Each compared field yields a disagreement level 0..L_f, where 0 is the
strongest agreement and L_f the strongest disagreement; a pair with a
missing value on either side yields no level for that field. Similarity
values bin into levels through cut points: level 0 is similarity exactly
0 (or the first cut), and each further level is the left-open,
right-closed interval up to the next cut, so a value sitting exactly on
a cut falls on the lower-disagreement side.

Two computation paths exist for string distance: a scalar dynamic
program and a batched numpy version used by compare_pairs. They are
checked against each other (and an independent oracle) in the tests.
"""

from __future__ import annotations

from bisect import bisect_left
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .records import DataFile, FieldSchema, Record

COMPARATOR_KINDS = ("levenshtein", "token_levenshtein", "absolute_difference", "binary")

MISSING_LEVEL = -1  # sentinel in packed level arrays


def levenshtein(a: str, b: str) -> int:
    """Edit distance: minimum insertions, deletions, substitutions."""
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev = list(range(lb + 1))
    for i in range(la):
        ca = a[i]
        cur = [i + 1]
        append = cur.append
        for j in range(lb):
            cost = prev[j] if ca == b[j] else prev[j] + 1
            d = prev[j + 1] + 1
            if d < cost:
                cost = d
            e = cur[j] + 1
            if e < cost:
                cost = e
            append(cost)
        prev = cur
    return prev[lb]


def normalized_levenshtein(a: str, b: str) -> float:
    """Edit distance scaled by the longer length, in [0, 1]."""
    m = max(len(a), len(b))
    if m == 0:
        return 0.0
    return levenshtein(a, b) / m


def token_min_levenshtein(a: str, b: str) -> float:
    """Name comparison tolerant of differing token counts.

    Single-token names compare directly. When token counts are equal,
    tokens compare positionally and the normalized distances average.
    When they differ, every token of the shorter name is matched to its
    best-fitting token of the longer name (minimum normalized distance,
    each candidate pairing normalized by its own max token length), and
    those minima average; with one token against two this is exactly the
    min over the two tokens. An exact token match therefore yields 0.
    """
    ta, tb = a.split(), b.split()
    if not ta or not tb:
        return normalized_levenshtein(a, b)
    if len(ta) == len(tb):
        if len(ta) == 1:
            return normalized_levenshtein(a, b)
        return sum(normalized_levenshtein(x, y) for x, y in zip(ta, tb)) / len(ta)
    short, long_ = (ta, tb) if len(ta) < len(tb) else (tb, ta)
    total = 0.0
    for s in short:
        total += min(normalized_levenshtein(s, t) for t in long_)
    return total / len(short)


def absolute_difference(x: int, y: int) -> int:
    return abs(x - y)


def binary_disagreement(x, y) -> int:
    return 0 if x == y else 1


@dataclass(frozen=True)
class LevelSpec:
    """How one field is compared and discretized.

    cut_points are ascending upper bounds of the disagreement intervals;
    the first must be 0 (exact agreement is its own level). A field with
    cut_points of length L+1 yields levels 0..L.
    """

    field: str
    kind: str
    cut_points: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in COMPARATOR_KINDS:
            raise ConfigError(f"unknown comparator kind {self.kind!r} for {self.field!r}")
        cuts = tuple(float(c) for c in self.cut_points)
        object.__setattr__(self, "cut_points", cuts)
        if len(cuts) < 2:
            raise ConfigError(f"{self.field!r}: need at least two cut points")
        if cuts[0] != 0.0:
            raise ConfigError(f"{self.field!r}: first cut point must be 0")
        if any(p >= q for p, q in zip(cuts, cuts[1:])):
            raise ConfigError(f"{self.field!r}: cut points must be strictly ascending")

    @property
    def n_levels(self) -> int:
        return len(self.cut_points)

    @property
    def top_level(self) -> int:
        return len(self.cut_points) - 1


def binary_spec(field: str) -> LevelSpec:
    return LevelSpec(field, "binary", (0.0, 1.0))


def bin_level(similarity: float, spec: LevelSpec) -> int:
    """Discretize a similarity value: smallest l with s <= cut_points[l]."""
    if similarity < 0:
        raise ConfigError(
            f"{spec.field!r}: similarity {similarity} is negative")
    lv = bisect_left(spec.cut_points, similarity)
    if lv >= spec.n_levels:
        raise ConfigError(
            f"{spec.field!r}: similarity {similarity} exceeds the last cut point "
            f"{spec.cut_points[-1]}")
    return lv


_SIMILARITY_FUNCS = {
    "levenshtein": normalized_levenshtein,
    "token_levenshtein": token_min_levenshtein,
    "absolute_difference": absolute_difference,
    "binary": binary_disagreement,
}


def similarity(spec: LevelSpec, vi, vj) -> float:
    return _SIMILARITY_FUNCS[spec.kind](vi, vj)


@dataclass(frozen=True)
class ComparisonVector:
    """Levels for one record pair; None where a value was missing."""

    i: int
    j: int
    levels: tuple


def compare_pair(rec_i: Record, rec_j: Record, specs: list[LevelSpec],
                 df: DataFile) -> ComparisonVector:
    """Compare one record pair on all spec'd fields."""
    out = []
    for spec in specs:
        k = df.index_of(spec.field)
        vi, vj = rec_i.values[k], rec_j.values[k]
        if vi is None or vj is None:
            out.append(None)
        else:
            out.append(bin_level(similarity(spec, vi, vj), spec))
    return ComparisonVector(i=rec_i.id, j=rec_j.id, levels=tuple(out))


class PairComparisons:
    """Packed comparison levels for a list of record pairs.

    levels is an int8 matrix (n_pairs, n_fields) holding the ordinal
    level per field, with -1 where the value was missing on either side.
    Row order matches the pairs array and is the authoritative pair
    ordering for everything downstream.
    """

    def __init__(self, r: int, fields: tuple[str, ...], n_levels: tuple[int, ...],
                 pairs: np.ndarray, levels: np.ndarray):
        self.r = int(r)
        self.fields = tuple(fields)
        self.n_levels = tuple(int(n) for n in n_levels)
        self.pairs = np.ascontiguousarray(pairs, dtype=np.int32)
        self.levels = np.ascontiguousarray(levels, dtype=np.int8)
        if self.pairs.shape != (len(self.levels), 2):
            raise ValueError("pairs and levels are misaligned")
        if self.levels.shape[1] != len(self.fields):
            raise ValueError("field names and level columns are misaligned")

    def __len__(self) -> int:
        return len(self.pairs)

    def vector(self, k: int) -> ComparisonVector:
        row = self.levels[k]
        return ComparisonVector(
            i=int(self.pairs[k, 0]), j=int(self.pairs[k, 1]),
            levels=tuple(None if v < 0 else int(v) for v in row))

    def field_index(self, name: str) -> int:
        try:
            return self.fields.index(name)
        except ValueError:
            raise ConfigError(f"unknown compared field {name!r}") from None

    def write_csv(self, path) -> None:
        """Export as a delimited matrix: i, j, then one level column per
        field with NA for missing."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("i,j," + ",".join(self.fields) + "\n")
            for (i, j), row in zip(self.pairs, self.levels):
                cells = ["NA" if v < 0 else str(int(v)) for v in row]
                fh.write(f"{i},{j}," + ",".join(cells) + "\n")


def read_comparisons_csv(path, r: int, specs: list[LevelSpec]) -> PairComparisons:
    fields = tuple(s.field for s in specs)
    n_levels = tuple(s.n_levels for s in specs)
    pairs, rows = [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if header != ["i", "j"] + list(fields):
            raise DataError(f"{path}: unexpected comparison header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != 2 + len(fields):
                raise DataError(f"{path}:{lineno}: wrong column count")
            try:
                pairs.append((int(parts[0]), int(parts[1])))
                rows.append([-1 if p == "NA" else int(p) for p in parts[2:]])
            except ValueError:
                raise DataError(f"{path}:{lineno}: unparseable cell") from None
    pairs_arr = np.array(pairs, dtype=np.int32).reshape(-1, 2)
    levels_arr = np.array(rows, dtype=np.int8).reshape(-1, len(fields))
    for k, nl in enumerate(n_levels):
        col = levels_arr[:, k]
        if len(col) and (col.max(initial=-1) >= nl):
            raise DataError(f"{path}: level out of range for field {fields[k]!r}")
    return PairComparisons(r=r, fields=fields, n_levels=n_levels,
                           pairs=pairs_arr, levels=levels_arr)


# --- batched comparison -----------------------------------------------------

def _encode_group(strings: list[str], length: int) -> np.ndarray:
    """Fixed-width code-point matrix for same-length strings."""
    if length == 0:
        return np.zeros((len(strings), 0), dtype=np.uint32)
    joined = "".join(strings)
    codes = np.frombuffer(joined.encode("utf-32-le"), dtype=np.uint32)
    return codes.reshape(len(strings), length)


def _batch_levenshtein(pairs: list[tuple[str, str]]) -> np.ndarray:
    """Edit distances for many string pairs at once.

    Pairs are grouped by their length signature and each group runs one
    vectorized DP, which is what makes whole-file comparison cheap.
    """
    out = np.zeros(len(pairs), dtype=np.int32)
    groups: dict[tuple[int, int], list[int]] = {}
    for k, (a, b) in enumerate(pairs):
        groups.setdefault((len(a), len(b)), []).append(k)
    for (la, lb), idxs in groups.items():
        if la == 0 or lb == 0:
            out[idxs] = max(la, lb)
            continue
        A = _encode_group([pairs[k][0] for k in idxs], la)
        B = _encode_group([pairs[k][1] for k in idxs], lb)
        n = len(idxs)
        prev = np.tile(np.arange(lb + 1, dtype=np.int32), (n, 1))
        cur = np.empty_like(prev)
        for i in range(1, la + 1):
            cur[:, 0] = i
            ai = A[:, i - 1]
            for j in range(1, lb + 1):
                sub = prev[:, j - 1] + (ai != B[:, j - 1])
                np.minimum(sub, prev[:, j] + 1, out=sub)
                np.minimum(sub, cur[:, j - 1] + 1, out=sub)
                cur[:, j] = sub
            prev, cur = cur, prev
        out[idxs] = prev[:, lb]
    return out


def _batch_normalized(pairs: list[tuple[str, str]]) -> np.ndarray:
    dists = _batch_levenshtein(pairs).astype(np.float64)
    maxlen = np.array([max(len(a), len(b)) for a, b in pairs], dtype=np.float64)
    np.maximum(maxlen, 1.0, out=maxlen)
    return dists / maxlen


def _batch_token_min(value_pairs: list[tuple[str, str]]) -> np.ndarray:
    """token_min_levenshtein over many value pairs, deduplicating the
    underlying token comparisons."""
    tasks: dict[tuple[str, str], int] = {}
    # per value pair: list of (combine, payload) where payload holds task ids
    plans = []

    def task_id(x: str, y: str) -> int:
        key = (x, y) if x <= y else (y, x)
        t = tasks.get(key)
        if t is None:
            t = len(tasks)
            tasks[key] = t
        return t

    for a, b in value_pairs:
        ta, tb = a.split(), b.split()
        if not ta or not tb:
            plans.append(("single", task_id(a, b)))
        elif len(ta) == len(tb):
            if len(ta) == 1:
                plans.append(("single", task_id(a, b)))
            else:
                plans.append(("mean", [task_id(x, y) for x, y in zip(ta, tb)]))
        else:
            short, long_ = (ta, tb) if len(ta) < len(tb) else (tb, ta)
            plans.append(("minmean",
                          [[task_id(s, t) for t in long_] for s in short]))
    keys = list(tasks.keys())
    sims = _batch_normalized(keys)
    out = np.empty(len(value_pairs), dtype=np.float64)
    for k, (mode, payload) in enumerate(plans):
        if mode == "single":
            out[k] = sims[payload]
        elif mode == "mean":
            out[k] = sum(sims[t] for t in payload) / len(payload)
        else:
            out[k] = sum(min(sims[t] for t in row) for row in payload) / len(payload)
    return out


def _searchsorted_levels(sim: np.ndarray, spec: LevelSpec, observed: np.ndarray) -> np.ndarray:
    cuts = np.asarray(spec.cut_points, dtype=np.float64)
    vals = sim[observed]
    if len(vals):
        if vals.min() < 0:
            raise ConfigError(f"{spec.field!r}: negative similarity in batch")
        lv = np.searchsorted(cuts, vals, side="left")
        if lv.max(initial=0) >= spec.n_levels:
            raise ConfigError(
                f"{spec.field!r}: similarity exceeds the last cut point")
    else:
        lv = vals.astype(np.int64)
    col = np.full(len(sim), MISSING_LEVEL, dtype=np.int8)
    col[observed] = lv.astype(np.int8)
    return col


def _compare_columns(columns: list[list], pairs: np.ndarray,
                     specs: list[LevelSpec], spec_cols: list[int]) -> np.ndarray:
    """Level matrix for the given pairs; columns holds the data columns
    referenced by spec_cols, in spec order."""
    n = len(pairs)
    i_arr = pairs[:, 0]
    j_arr = pairs[:, 1]
    levels = np.empty((n, len(specs)), dtype=np.int8)
    for s, spec in enumerate(specs):
        col = columns[spec_cols[s]]
        vi = [col[i] for i in i_arr]
        vj = [col[j] for j in j_arr]
        observed = np.array([x is not None and y is not None
                             for x, y in zip(vi, vj)], dtype=bool)
        if spec.kind == "binary":
            sim = np.array([0.0 if x == y else 1.0 for x, y in zip(vi, vj)])
        elif spec.kind == "absolute_difference":
            sim = np.array([abs(x - y) if (x is not None and y is not None) else 0.0
                            for x, y in zip(vi, vj)], dtype=np.float64)
        else:
            # dedupe on the value pair before running any string DP
            uniq: dict[tuple[str, str], int] = {}
            ids = np.zeros(n, dtype=np.int64)
            for k in range(n):
                if not observed[k]:
                    continue
                key = (vi[k], vj[k]) if vi[k] <= vj[k] else (vj[k], vi[k])
                h = uniq.get(key)
                if h is None:
                    h = len(uniq)
                    uniq[key] = h
                ids[k] = h
            value_pairs = list(uniq.keys())
            if spec.kind == "levenshtein":
                sims_u = _batch_normalized(value_pairs)
            else:
                sims_u = _batch_token_min(value_pairs)
            sim = np.zeros(n, dtype=np.float64)
            if value_pairs:
                sim[observed] = sims_u[ids[observed]]
        levels[:, s] = _searchsorted_levels(sim, spec, observed)
    return levels


def _compare_chunk(args) -> np.ndarray:
    columns, pairs, specs, spec_cols = args
    return _compare_columns(columns, pairs, specs, spec_cols)


def compare_pairs(df: DataFile, pairs: np.ndarray, specs: list[LevelSpec],
                  n_workers: int = 1) -> PairComparisons:
    """Compare every listed pair on every spec'd field.

    With n_workers > 1 the pair list is chunked across worker processes;
    chunks are reassembled in order, so the output is identical to the
    single-process run.
    """
    pairs = np.ascontiguousarray(np.asarray(pairs, dtype=np.int32).reshape(-1, 2))
    if len(pairs) and (pairs.min() < 0 or pairs.max() >= df.r):
        raise DataError("pair indices out of range for this file")
    columns = df.columns()
    spec_cols = [df.index_of(s.field) for s in specs]
    if n_workers <= 1 or len(pairs) < 2 * n_workers:
        levels = _compare_columns(columns, pairs, specs, spec_cols)
    else:
        chunks = np.array_split(pairs, n_workers * 4)
        jobs = [(columns, c, specs, spec_cols) for c in chunks if len(c)]
        with ProcessPoolExecutor(max_workers=n_workers) as ex:
            parts = list(ex.map(_compare_chunk, jobs))
        levels = np.concatenate(parts, axis=0)
    return PairComparisons(
        r=df.r, fields=tuple(s.field for s in specs),
        n_levels=tuple(s.n_levels for s in specs), pairs=pairs, levels=levels)
