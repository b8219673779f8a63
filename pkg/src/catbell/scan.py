"""CHSH surfaces over the real cat amplitudes (alpha, omega)."""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .analytic import (
    MeasurementSettings,
    chsh_components,
    combine_chsh,
    make_cat_state,
)
from .errors import DegenerateState, EmptyScan

log = logging.getLogger(__name__)

CSV_FIELDS = ("alpha", "omega", "E_zw", "E_zpw", "E_zwp", "E_zpwp", "chsh", "classification")


@dataclass(frozen=True)
class ScanGrid:
    alpha_range: tuple[float, float, int]
    omega_range: tuple[float, float, int]
    fixed_settings: MeasurementSettings
    phi: float

    def __post_init__(self):
        for name in ("alpha_range", "omega_range"):
            lo, hi, steps = getattr(self, name)
            if int(steps) != steps or steps < 2:
                raise ValueError(f"{name}: steps must be an integer >= 2, got {steps!r}")
            if not lo < hi:
                raise ValueError(f"{name}: need min < max, got ({lo}, {hi})")
            object.__setattr__(self, name, (float(lo), float(hi), int(steps)))

    @property
    def alphas(self) -> np.ndarray:
        return np.linspace(*self.alpha_range)

    @property
    def omegas(self) -> np.ndarray:
        return np.linspace(*self.omega_range)

    def points(self) -> list[tuple[float, float]]:
        """Grid points in row-major order, alpha outermost."""
        return [(float(a), float(o)) for a in self.alphas for o in self.omegas]


@dataclass(frozen=True)
class ScanRecord:
    alpha: float
    omega: float
    E_zw: float
    E_zpw: float
    E_zwp: float
    E_zpwp: float
    chsh: float
    classification: str


@dataclass(frozen=True)
class ScanSummary:
    max_abs_chsh: float
    argmax: tuple[float, float]
    violating_fraction: float
    count: int


def evaluate_point(alpha: float, omega: float, settings: MeasurementSettings, phi: float):
    """One grid point, or ``None`` when the state there is degenerate."""
    try:
        state = make_cat_state(alpha, omega, phi)
    except DegenerateState as exc:
        log.warning("skipping degenerate grid point alpha=%r omega=%r: %s", alpha, omega, exc)
        return None
    comps = chsh_components(settings, state)
    value = combine_chsh(*comps)
    return ScanRecord(alpha, omega, *comps, value.value, value.classification)


def run_scan(grid: ScanGrid, workers: int = 1) -> list[ScanRecord]:
    """Evaluate the CHSH value on every grid point.

    Degenerate points are logged and left out. The output order is the grid
    order regardless of ``workers``.
    """
    points = grid.points()

    def work(point):
        return evaluate_point(point[0], point[1], grid.fixed_settings, grid.phi)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, points))
    else:
        results = [work(p) for p in points]
    return [r for r in results if r is not None]


def summarize(records: list[ScanRecord]) -> ScanSummary:
    if not records:
        raise EmptyScan("no records to summarize")
    best = min(records, key=lambda r: (-abs(r.chsh), r.alpha, r.omega))
    violating = sum(r.classification == "violating" for r in records)
    return ScanSummary(abs(best.chsh), (best.alpha, best.omega), violating / len(records), len(records))


def _fmt(value: float) -> str:
    return format(value, ".17g")


def records_to_csv(records: list[ScanRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in records:
        row = asdict(r)
        writer.writerow(
            [row[k] if k == "classification" else _fmt(row[k]) for k in CSV_FIELDS]
        )
    return buf.getvalue()


def records_to_json(records: list[ScanRecord]) -> str:
    return json.dumps([asdict(r) for r in records], indent=2) + "\n"


def read_csv(text: str) -> list[ScanRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_FIELDS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames!r}")
    return [
        ScanRecord(**{k: (row[k] if k == "classification" else float(row[k])) for k in CSV_FIELDS})
        for row in reader
    ]
