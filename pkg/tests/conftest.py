"""Shared helpers: small random files and comparison setups."""

import numpy as np
import pytest

from bayesdedupe.comparison import LevelSpec, binary_spec, compare_pairs
from bayesdedupe.candidates import FixRule, all_pairs, fix_noncoreferent
from bayesdedupe.records import DataFile, FieldSchema, Record

NAME_POOL = ["ANA", "ANNA", "ANAS", "MARIA", "MARTA", "MARIO", "LUIS",
             "LUISA", "JOSE", "JOSEF", "PEPE", "ROSA"]
CITY_POOL = ["NORTE", "SUR", "ESTE", "OESTE"]


def random_file(rng: np.random.Generator, r: int,
                missing_rate: float = 0.1) -> DataFile:
    """A small file with one name, one integer, one categorical field."""
    schema = [FieldSchema("name", "string"), FieldSchema("year", "integer"),
              FieldSchema("city", "categorical")]
    records = []
    for i in range(r):
        vals = [NAME_POOL[int(rng.integers(len(NAME_POOL)))],
                2000 + int(rng.integers(6)),
                CITY_POOL[int(rng.integers(len(CITY_POOL)))]]
        for k in range(3):
            if rng.random() < missing_rate:
                vals[k] = None
        records.append(Record(id=i, values=tuple(vals)))
    return DataFile(schema=schema, records=records)


def small_specs() -> list:
    return [
        LevelSpec(field="name", kind="levenshtein",
                  cut_points=(0.0, 0.25, 0.5, 1.0)),
        LevelSpec(field="year", kind="absolute_difference",
                  cut_points=(0.0, 1.0, float("inf"))),
        binary_spec("city"),
    ]


def compared_setup(rng: np.random.Generator, r: int, fix_name_level=3):
    """Random file -> comparisons plus graph, optionally fixing pairs
    whose name disagreement reaches the given level."""
    df = random_file(rng, r)
    comps = compare_pairs(df, all_pairs(r), small_specs())
    rules = []
    if fix_name_level is not None:
        rules = [FixRule(conditions=(("name", fix_name_level),))]
    graph = fix_noncoreferent(comps, rules)
    return df, comps, graph


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
