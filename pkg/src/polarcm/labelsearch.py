"""Exhaustive search over labeling classes with the union-bound metric."""

from __future__ import annotations

import csv
import io
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .constellation import (
    Constellation,
    Labeling,
    count_candidates,
    enumerate_canonical_labelings,
    make_pam,
)
from .construction import ConstructionWarning, build_mlc_code


@dataclass(frozen=True)
class RankedLabeling:
    labeling: Labeling
    predicted_bler: float
    level_capacities: tuple


@dataclass(frozen=True)
class SearchReport:
    m: int
    N: int
    K: int
    design_sigma: float
    evaluated_count: int
    ranked: tuple

    @property
    def best(self) -> Labeling:
        return self.ranked[0].labeling

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "labeling_string", "predicted_bler"] + [f"I_W{j}" for j in range(1, self.m + 1)])
        for r, item in enumerate(self.ranked, start=1):
            w.writerow(
                [r, item.labeling.to_string(), repr(item.predicted_bler)] + [repr(c) for c in item.level_capacities]
            )
        return buf.getvalue()


def parse_report_csv(text: str) -> list[RankedLabeling]:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    m = len(header) - 3
    return [
        RankedLabeling(Labeling.from_string(r[1]), float(r[2]), tuple(float(x) for x in r[3 : 3 + m])) for r in body
    ]


def evaluate_labeling(lab: Labeling, c: Constellation, sigma_design: float, N: int, K: int) -> float:
    """Union-bound predicted BLER of the code built for ``lab``."""
    return build_mlc_code(lab, c, sigma_design, N, K).predicted_bler


def _evaluate_chunk(tables, m, sigma, N, K):
    c = make_pam(m)
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstructionWarning)
        for table in tables:
            spec = build_mlc_code(Labeling(table, m), c, sigma, N, K)
            out.append((spec.predicted_bler, spec.level_capacities))
    return out


def search_optimal_labeling(
    m: int,
    N: int,
    K: int,
    sigma_design: float,
    workers: int = 1,
    allow_large: bool = False,
) -> SearchReport:
    """Evaluate every labeling class on 2**m-PAM and rank by predicted BLER.

    Ties are broken by the lexicographically smallest table.
    """
    if m > 4 or (m == 4 and not allow_large):
        raise ValueError("exhaustive search is limited to m <= 3 (m = 4 needs allow_large=True)")
    if N < 1 or N & (N - 1):
        raise ValueError(f"N must be a power of two, got {N}")
    tables = [lab.table for lab in enumerate_canonical_labelings(m, allow_large=allow_large)]
    if workers <= 1:
        results = _evaluate_chunk(tables, m, sigma_design, N, K)
    else:
        bounds = np.linspace(0, len(tables), workers + 1).astype(int)
        chunks = [tables[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(workers) as ex:
            parts = ex.map(_evaluate_chunk, chunks, *([x] * len(chunks) for x in (m, sigma_design, N, K)))
            results = [r for part in parts for r in part]
    ranked = sorted(
        (RankedLabeling(Labeling(t, m), bler, caps) for t, (bler, caps) in zip(tables, results)),
        key=lambda r: (r.predicted_bler, r.labeling.table),
    )
    if len(ranked) != count_candidates(m):
        raise RuntimeError("enumeration size does not match the class count")
    return SearchReport(m, N, K, float(sigma_design), len(ranked), tuple(ranked))
