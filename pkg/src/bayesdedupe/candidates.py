"""Which record pairs get compared, and which stay open as candidates.

Two layers of pruning happen before any sampling. Filter rules decide
the compared set P: a pair is compared only if every rule passes, and a
rule with a missing value on either side always passes, because missing
evidence must never prove two records apart. Fix rules then declare some
compared pairs noncoreferent outright (their comparison data still
informs the noncoreferent distribution); whatever remains is the
candidate set C the sampler is allowed to merge within.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .comparison import PairComparisons
from .errors import ConfigError, DataError
from .records import DataFile

FILTER_KINDS = ("always_compare", "categorical_block", "integer_gap_exceeds",
                "custom_overlap")

# Geographic naming particles ignored when checking place-name overlap.
DEFAULT_STOP_TOKENS = frozenset(
    {"SAN", "SANTA", "SANTO", "LA", "EL", "LAS", "LOS", "DEL", "DE"})


@dataclass(frozen=True)
class FilterRule:
    kind: str
    field: str | None = None
    gap: int | None = None
    neighbors: frozenset = frozenset()
    stop_tokens: frozenset = DEFAULT_STOP_TOKENS

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise ConfigError(f"unknown filter rule kind {self.kind!r}")
        if self.kind != "always_compare" and not self.field:
            raise ConfigError(f"filter rule {self.kind!r} needs a field")
        if self.kind == "integer_gap_exceeds" and (self.gap is None or self.gap < 0):
            raise ConfigError("integer_gap_exceeds needs a nonnegative gap")

    @staticmethod
    def always_compare() -> "FilterRule":
        return FilterRule(kind="always_compare")

    @staticmethod
    def categorical_block(field_name: str) -> "FilterRule":
        return FilterRule(kind="categorical_block", field=field_name)

    @staticmethod
    def integer_gap_exceeds(field_name: str, gap: int) -> "FilterRule":
        return FilterRule(kind="integer_gap_exceeds", field=field_name, gap=gap)

    @staticmethod
    def custom_overlap(field_name: str, neighbors=frozenset(),
                       stop_tokens=DEFAULT_STOP_TOKENS) -> "FilterRule":
        return FilterRule(kind="custom_overlap", field=field_name,
                          neighbors=frozenset(neighbors),
                          stop_tokens=frozenset(stop_tokens))

    def passes(self, vi, vj) -> bool:
        """True when this rule does not exclude the pair."""
        if self.kind == "always_compare":
            return True
        if vi is None or vj is None:
            return True
        if self.kind == "categorical_block":
            return vi == vj
        if self.kind == "integer_gap_exceeds":
            return abs(vi - vj) <= self.gap
        return self._overlap(vi, vj)

    def _overlap(self, vi, vj) -> bool:
        if vi == vj:
            return True
        if (vi, vj) in self.neighbors or (vj, vi) in self.neighbors:
            return True
        ti = set(vi.split()) - self.stop_tokens
        tj = set(vj.split()) - self.stop_tokens
        return bool(ti & tj)


def load_neighbors(path) -> frozenset:
    """Adjacency file: one tab-separated pair of place names per line.

    Names are normalized like record values (uppercase, collapsed
    whitespace). The relation is used symmetrically.
    """
    out = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected two tab-separated names")
            a = " ".join(parts[0].split()).upper()
            b = " ".join(parts[1].split()).upper()
            if not a or not b:
                raise DataError(f"{path}:{lineno}: empty place name")
            out.add((a, b))
    return frozenset(out)


def all_pairs(r: int) -> np.ndarray:
    i_arr, j_arr = np.triu_indices(r, k=1)
    return np.column_stack([i_arr, j_arr]).astype(np.int32)


def build_pairs(df: DataFile, rules: list[FilterRule]) -> np.ndarray:
    """All pairs i < j passing every filter rule, in lexicographic order.

    Cheap rules evaluate vectorized over the full pair grid; the overlap
    rule runs per-pair but only on pairs still alive, so ordering rules
    cheapest-first in the config pays off at scale.
    """
    pairs = all_pairs(df.r)
    keep = np.ones(len(pairs), dtype=bool)
    for rule in rules:
        if rule.kind == "always_compare":
            continue
        col = df.column(rule.field)
        if rule.kind == "categorical_block":
            codes_map: dict = {}
            codes = np.array([-1 if v is None else codes_map.setdefault(v, len(codes_map))
                              for v in col], dtype=np.int64)
            ci, cj = codes[pairs[:, 0]], codes[pairs[:, 1]]
            keep &= (ci == -1) | (cj == -1) | (ci == cj)
        elif rule.kind == "integer_gap_exceeds":
            vals = np.array([np.nan if v is None else float(v) for v in col])
            diff = np.abs(vals[pairs[:, 0]] - vals[pairs[:, 1]])
            keep &= ~(diff > rule.gap)  # NaN compares False, so missing passes
        else:
            alive = np.flatnonzero(keep)
            for k in alive:
                i, j = pairs[k]
                if not rule.passes(col[i], col[j]):
                    keep[k] = False
    return pairs[keep]


@dataclass(frozen=True)
class FixRule:
    """Conjunction of minimum-disagreement conditions.

    A compared pair is fixed noncoreferent when every condition holds;
    a condition on an unobserved field does not hold. Several fix rules
    act as alternatives: matching any one of them fixes the pair.
    """

    conditions: tuple  # of (field_name, min_level)

    def __post_init__(self):
        if not self.conditions:
            raise ConfigError("a fix rule needs at least one condition")
        norm = tuple((str(f), int(lv)) for f, lv in self.conditions)
        object.__setattr__(self, "conditions", norm)
        for f, lv in norm:
            if lv < 1:
                raise ConfigError(
                    f"fix rule on {f!r}: minimum level must be >= 1")

    def matches(self, vec_levels, field_pos: dict) -> bool:
        for f, min_lv in self.conditions:
            lv = vec_levels[field_pos[f]]
            if lv is None or lv < min_lv:
                return False
        return True


@dataclass
class CandidateGraph:
    """Compared pairs plus the candidate/fixed split and C's components."""

    r: int
    pairs: np.ndarray                 # (n, 2) int32, the compared set P
    candidate_mask: np.ndarray        # bool over pairs
    components: list = field(default_factory=list)

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def n_candidates(self) -> int:
        return int(self.candidate_mask.sum())

    @property
    def n_fixed(self) -> int:
        return self.n_pairs - self.n_candidates

    def candidate_pairs(self) -> np.ndarray:
        return self.pairs[self.candidate_mask]

    def candidate_pair_set(self) -> set:
        return {(int(i), int(j)) for i, j in self.candidate_pairs()}

    def write_edges(self, path) -> None:
        """Edge list export: record id pair plus the fixed flag."""
        fixed = ~self.candidate_mask
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("i,j,fixed\n")
            for (i, j), fx in zip(self.pairs, fixed):
                fh.write(f"{i},{j},{int(fx)}\n")


def connected_components(r: int, edges) -> list:
    """Components over records 0..r-1; isolated records are singletons.

    Returned as tuples of sorted members, ordered by smallest member.
    """
    parent = list(range(r))

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for i, j in edges:
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict = {}
    for x in range(r):
        groups.setdefault(find(x), []).append(x)
    return [tuple(g) for g in sorted(groups.values(), key=lambda g: g[0])]


def fix_noncoreferent(comps: PairComparisons, rules: list[FixRule]) -> CandidateGraph:
    """Split the compared set into fixed and candidate pairs.

    Fixed pairs keep their comparison data; they only stop being merge
    candidates. Components are computed over the candidate edges.
    """
    fixed = np.zeros(len(comps), dtype=bool)
    pos = {name: k for k, name in enumerate(comps.fields)}
    for rule in rules:
        m = np.ones(len(comps), dtype=bool)
        for f, min_lv in rule.conditions:
            if f not in pos:
                raise ConfigError(f"fix rule references uncompared field {f!r}")
            col = comps.levels[:, pos[f]]
            m &= col >= min_lv  # missing is -1, so unobserved conditions fail
        fixed |= m
    candidate_mask = ~fixed
    comp_list = connected_components(comps.r, comps.pairs[candidate_mask])
    return CandidateGraph(r=comps.r, pairs=comps.pairs,
                          candidate_mask=candidate_mask, components=comp_list)
