import csv
import io
import json
import logging
import math

import pytest

from catbell import analytic as an
from catbell.errors import EmptyScan
from catbell.scan import (
    CSV_FIELDS,
    ScanGrid,
    ScanRecord,
    read_csv,
    records_to_csv,
    records_to_json,
    run_scan,
    summarize,
)

PAPER = an.MeasurementSettings.uniform(1.0)


def record(chsh, alpha=0.0, omega=0.0):
    return ScanRecord(alpha, omega, 0.0, 0.0, 0.0, 0.0, chsh, an.classify(chsh))


def test_grid_validation():
    with pytest.raises(ValueError):
        ScanGrid((0, 1, 1), (0, 1, 5), PAPER, 0)
    with pytest.raises(ValueError):
        ScanGrid((1, 1, 3), (0, 1, 5), PAPER, 0)


def test_row_major_order():
    grid = ScanGrid((0.5, 1.0, 2), (0.1, 0.3, 3), PAPER, 0.0)
    recs = run_scan(grid)
    assert [(r.alpha, r.omega) for r in recs] == [
        (0.5, 0.1), (0.5, 0.2), (0.5, 0.3), (1.0, 0.1), (1.0, 0.2), (1.0, 0.3)
    ]


def test_degenerate_point_skipped(caplog):
    grid = ScanGrid((0.0, 1.0, 3), (0.0, 1.0, 3), PAPER, math.pi)
    with caplog.at_level(logging.WARNING, logger="catbell.scan"):
        recs = run_scan(grid)
    assert len(recs) == 8
    assert (0.0, 0.0) not in {(r.alpha, r.omega) for r in recs}
    assert "degenerate" in caplog.text


def test_paper_setting_is_classical():
    grid = ScanGrid((0.2, 2.0, 25), (0.2, 2.0, 25), PAPER, math.pi)
    recs = run_scan(grid)
    assert len(recs) == 625
    for r in recs:
        assert r.classification == "classical"
        assert abs(r.chsh - 2 * r.E_zw) < 1e-12
        assert abs(r.chsh) <= 2


def test_reference_settings_violate(reference):
    settings, _, _ = reference
    recs = run_scan(ScanGrid((0.2, 2.0, 25), (0.2, 2.0, 25), settings, math.pi))
    assert any(r.classification == "violating" for r in recs)
    for r in recs:
        assert abs(r.chsh - (r.E_zw + r.E_zpw + r.E_zwp - r.E_zpwp)) < 1e-12
        assert abs(r.chsh) <= an.TSIRELSON + 1e-9


def test_workers_do_not_change_output(reference):
    grid = ScanGrid((0.2, 2.0, 9), (0.2, 2.0, 7), reference[0], math.pi)
    assert records_to_csv(run_scan(grid, workers=1)) == records_to_csv(run_scan(grid, workers=4))


class TestSummary:
    def test_boundary_not_violating(self):
        s = summarize([record(2.0)])
        assert s.max_abs_chsh == 2.0
        assert s.violating_fraction == 0

    def test_tie_break(self):
        s = summarize([record(1.9, 0.1, 0.1), record(2.3, 0.5, 0.9), record(2.3, 0.5, 0.4)])
        assert s.max_abs_chsh == 2.3
        assert s.argmax == (0.5, 0.4)
        assert s.violating_fraction == pytest.approx(2 / 3)

    def test_negative_values_count_by_magnitude(self):
        s = summarize([record(-2.5, 1, 1), record(2.4, 0, 0)])
        assert s.max_abs_chsh == 2.5
        assert s.argmax == (1, 1)

    def test_empty(self):
        with pytest.raises(EmptyScan):
            summarize([])


class TestFormats:
    def test_csv_layout(self):
        text = records_to_csv([record(2.0 / 3.0, 0.1, 0.2)])
        lines = text.splitlines()
        assert lines[0] == ",".join(CSV_FIELDS)
        fields = lines[1].split(",")
        assert fields[6] == "0.66666666666666663"
        assert fields[-1] == "classical"

    def test_csv_roundtrip_is_exact(self, reference):
        recs = run_scan(ScanGrid((0.2, 2.0, 6), (0.2, 2.0, 6), reference[0], math.pi))
        assert read_csv(records_to_csv(recs)) == recs

    def test_summary_matches_independent_pass(self, reference):
        recs = run_scan(ScanGrid((0.2, 2.0, 25), (0.2, 2.0, 25), reference[0], math.pi))
        text = records_to_csv(recs)
        best, best_key, violating, rows = -1.0, None, 0, 0
        for row in csv.DictReader(io.StringIO(text)):
            rows += 1
            value = abs(float(row["chsh"]))
            key = (float(row["alpha"]), float(row["omega"]))
            if value > best or (value == best and key < best_key):
                best, best_key = value, key
            violating += value > 2
        s = summarize(recs)
        assert (s.max_abs_chsh, s.argmax) == (best, best_key)
        assert s.violating_fraction == violating / rows
        assert s.violating_fraction > 0

    def test_json_mirror(self):
        recs = [record(2.1, 0.3, 0.4)]
        doc = json.loads(records_to_json(recs))
        assert list(doc[0]) == list(CSV_FIELDS)
        assert doc[0]["chsh"] == 2.1

    def test_bad_header(self):
        with pytest.raises(ValueError):
            read_csv("a,b\n1,2\n")
