import itertools
import json
import math

import numpy as np
import pytest

from catbell import analytic as an
from catbell.errors import CertificationError, DegenerateRegion
from catbell.optimize import (
    OptimizationProblem,
    OptimizationResult,
    certify,
    load_result,
    make_problem,
    maximize_violation,
    result_to_json,
    start_points,
)


def small(**kw):
    kw.setdefault("budget", 6000)
    kw.setdefault("restarts", 6)
    return make_problem(**kw)


class TestProblem:
    def test_dims(self):
        assert len(make_problem().bounds) == 13
        assert len(make_problem(state=an.make_cat_state(1, 1, 0)).bounds) == 8

    @pytest.mark.parametrize("kw", [dict(budget=50), dict(restarts=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            make_problem(**kw)

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            OptimizationProblem(((1.0, 0.0),) * 8, an.make_cat_state(1, 1, 0))
        with pytest.raises(ValueError):
            OptimizationProblem(((0.0, math.inf),) * 8, an.make_cat_state(1, 1, 0))
        with pytest.raises(ValueError):
            OptimizationProblem(((0.0, 1.0),) * 9, an.make_cat_state(1, 1, 0))

    def test_starts_deterministic_and_in_bounds(self):
        p = make_problem(seed=5)
        a, b = start_points(p), start_points(p)
        assert np.array_equal(a, b)
        lo = np.array([x[0] for x in p.bounds])
        hi = np.array([x[1] for x in p.bounds])
        assert np.all(a >= lo) and np.all(a <= hi)
        # fixed coordinates (Im sigma, Im eta, phi) never move
        assert np.all(a[:, [9, 11]] == 0) and np.all(a[:, 12] == math.pi)


def test_vacuum_cannot_violate():
    result = maximize_violation(small(state=an.make_cat_state(0, 0, 0)))
    assert result.best_value == pytest.approx(2, abs=1e-6)
    assert result.best_value <= 2 + 1e-9


def test_vacuum_superposition_stays_classical():
    # brute force first: 10^4 grid points over real settings and a range of phases
    grid = np.linspace(-3, 3, 10)
    worst = 0.0
    for phi in (0.0, 1.0, 2.0, 3.0):
        state = an.make_cat_state(0, 0, phi)
        for z, zp, w, wp in itertools.product(grid, repeat=4):
            worst = max(worst, abs(an.chsh(an.MeasurementSettings(z, zp, w, wp), state).value))
    assert worst <= 2 + 1e-12
    problem = small(sigma_re=(0, 0), eta_re=(0, 0), phi=(0.0, 3.0))
    assert maximize_violation(problem).best_value <= 2 + 1e-6


def test_all_degenerate():
    problem = small(sigma_re=(0, 0), eta_re=(0, 0), phi=(math.pi, math.pi))
    with pytest.raises(DegenerateRegion):
        maximize_violation(problem)


def test_trace_and_budget():
    problem = small(seed=3)
    result = maximize_violation(problem)
    values = [v for _, v in result.trace]
    idx = [i for i, _ in result.trace]
    assert values == sorted(values)
    assert idx == sorted(idx)
    assert values[-1] == result.best_value
    assert 0 < result.evaluations_used <= problem.budget
    assert 0 <= result.best_value <= an.TSIRELSON + 1e-9


def test_best_beats_every_start():
    problem = small(seed=4)
    result = maximize_violation(problem)
    for x in start_points(problem):
        settings, state = problem.decode(x)
        assert result.best_value >= abs(an.chsh(settings, state).value)


def test_deterministic_across_runs_and_workers():
    problem = small(seed=2)
    a = result_to_json(maximize_violation(problem, workers=1))
    b = result_to_json(maximize_violation(problem, workers=1))
    c = result_to_json(maximize_violation(problem, workers=3))
    assert a == b == c


def test_fixed_state_finds_violation():
    state = an.make_cat_state(0.42, 0.42, math.pi)
    result = maximize_violation(make_problem(state=state, budget=16000, restarts=16))
    assert result.best_value > 2.7
    cert = certify(result)
    assert abs(cert.oracle - cert.analytic) < 1e-7


def test_certify_rejects_tampered_value(reference):
    settings, state, best = reference
    fake = OptimizationResult(best + 1e-3, settings, state, 1)
    with pytest.raises(CertificationError):
        certify(fake)


def test_json_roundtrip(reference_json):
    settings, state, best = load_result(json.dumps(reference_json))
    assert best == reference_json["best_value"]
    assert settings.z == complex(*reference_json["settings"]["z"])
    assert state.phi == reference_json["state"]["phi"]
    assert set(reference_json) >= {"best_value", "settings", "state", "evaluations_used", "seed"}
