"""Multi-start Nelder-Mead search for the largest |CHSH| value.

The search vector is the eight real coordinates of (z, z', w, w'),
optionally followed by the five state coordinates
(Re sigma, Im sigma, Re eta, Im eta, phi). Coordinates whose lower and
upper bounds coincide are held fixed and do not enter the simplex.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .analytic import (
    TSIRELSON,
    CatStateParams,
    MeasurementSettings,
    chsh,
    make_cat_state,
)
from .errors import CertificationError, DegenerateRegion, DegenerateState
from .fock import oracle_chsh, required_cutoff

SETTINGS_DIMS = ("z.re", "z.im", "z_prime.re", "z_prime.im", "w.re", "w.im", "w_prime.re", "w_prime.im")
STATE_DIMS = ("sigma.re", "sigma.im", "eta.re", "eta.im", "phi")

XATOL = 1e-7
FATOL = 1e-10
CERTIFY_TOL = 1e-7
SCALE_STRATA = 4
ORACLE_MIN_CUTOFF = 64


@dataclass(frozen=True)
class OptimizationProblem:
    """Box-bounded search problem.

    ``state=None`` makes the state free: ``bounds`` then has 13 entries
    instead of 8.
    """

    bounds: tuple[tuple[float, float], ...]
    state: CatStateParams | None = None
    budget: int = 20000
    restarts: int = 16
    seed: int = 0

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        want = len(SETTINGS_DIMS) + (0 if self.state is not None else len(STATE_DIMS))
        if len(bounds) != want:
            raise ValueError(f"expected {want} bounds, got {len(bounds)}")
        for name, (lo, hi) in zip(self.dim_names_for(self.state), bounds):
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ValueError(f"bad bounds for {name}: ({lo}, {hi})")
        if self.budget < 100:
            raise ValueError(f"budget must be >= 100, got {self.budget}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        object.__setattr__(self, "bounds", bounds)

    @staticmethod
    def dim_names_for(state) -> tuple[str, ...]:
        return SETTINGS_DIMS if state is not None else SETTINGS_DIMS + STATE_DIMS

    @property
    def dim_names(self) -> tuple[str, ...]:
        return self.dim_names_for(self.state)

    def decode(self, x: np.ndarray) -> tuple[MeasurementSettings, CatStateParams]:
        """Map a full coordinate vector to settings and state.

        Raises :class:`DegenerateState` for a degenerate state.
        """
        settings = MeasurementSettings(
            complex(x[0], x[1]), complex(x[2], x[3]), complex(x[4], x[5]), complex(x[6], x[7])
        )
        if self.state is not None:
            return settings, self.state
        state = make_cat_state(complex(x[8], x[9]), complex(x[10], x[11]), x[12])
        return settings, state


def make_problem(
    settings_bound: float = 3.0,
    state: CatStateParams | None = None,
    sigma_re=(0.3, 2.5),
    sigma_im=(0.0, 0.0),
    eta_re=(0.3, 2.5),
    eta_im=(0.0, 0.0),
    phi=(math.pi, math.pi),
    budget: int = 20000,
    restarts: int = 16,
    seed: int = 0,
) -> OptimizationProblem:
    """Convenience constructor with every setting coordinate in
    ``[-settings_bound, settings_bound]``.

    The state ranges are ignored when ``state`` is given.
    """
    bounds = [(-settings_bound, settings_bound)] * len(SETTINGS_DIMS)
    if state is None:
        bounds += [tuple(sigma_re), tuple(sigma_im), tuple(eta_re), tuple(eta_im), tuple(phi)]
    return OptimizationProblem(tuple(bounds), state, budget, restarts, seed)


@dataclass(frozen=True)
class OptimizationResult:
    best_value: float
    best_settings: MeasurementSettings
    best_state: CatStateParams
    evaluations_used: int
    trace: list[tuple[int, float]] = field(default_factory=list)
    seed: int = 0


@dataclass(frozen=True)
class Certification:
    analytic: float
    oracle: float
    cutoff: int


class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.used = 0
        self.best = -math.inf
        self.trace = []

    @property
    def exhausted(self):
        return self.used >= self.limit


def _nelder_mead(fun, x0, lo, hi, budget: _Budget):
    """Minimize ``fun`` on the box [lo, hi], clamping every trial point.

    Stops when the simplex diameter drops below XATOL or the value spread
    below FATOL, whichever comes first, or when the budget runs out.
    """
    n = len(x0)
    # dimension-adapted coefficients (Gao and Han); plain 1, 2, 0.5, 0.5 stalls above ~6 dims
    rho, chi = 1.0, 1.0 + 2.0 / n
    gamma, shrink = 0.75 - 0.5 / n, 1.0 - 1.0 / n

    def clip(x):
        return np.minimum(np.maximum(x, lo), hi)

    def f(x):
        budget.used += 1
        val = fun(x)
        if -val > budget.best:
            budget.best = float(-val)
            budget.trace.append((budget.used, budget.best))
        return val

    step = 0.1 * (hi - lo)
    pts = [clip(np.asarray(x0, dtype=float))]
    for i in range(n):
        p = pts[0].copy()
        p[i] = p[i] + step[i] if p[i] + step[i] <= hi[i] else p[i] - step[i]
        pts.append(p)
    sim = np.array(pts)
    vals = np.empty(n + 1)
    for i in range(n + 1):
        if budget.exhausted:
            # not enough budget to even form the simplex
            done = vals[:i]
            k = int(np.argmin(done))
            return sim[k], done[k]
        vals[i] = f(sim[i])

    while not budget.exhausted:
        order = np.argsort(vals, kind="stable")
        sim, vals = sim[order], vals[order]
        diameter = np.max(np.abs(sim[1:] - sim[0]))
        if diameter < XATOL or vals[-1] - vals[0] < FATOL:
            break
        centroid = sim[:-1].mean(axis=0)
        worst = sim[-1]
        xr = clip(centroid + rho * (centroid - worst))
        fr = f(xr)
        if fr < vals[0]:
            if budget.exhausted:
                sim[-1], vals[-1] = xr, fr
                break
            xe = clip(centroid + chi * (centroid - worst))
            fe = f(xe)
            if fe < fr:
                sim[-1], vals[-1] = xe, fe
            else:
                sim[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-2]:
            sim[-1], vals[-1] = xr, fr
            continue
        if budget.exhausted:
            break
        if fr < vals[-1]:
            xc = clip(centroid + gamma * (xr - centroid))
            fc = f(xc)
            accept = fc <= fr
        else:
            xc = clip(centroid - gamma * (centroid - worst))
            fc = f(xc)
            accept = fc < vals[-1]
        if accept:
            sim[-1], vals[-1] = xc, fc
            continue
        for i in range(1, n + 1):
            if budget.exhausted:
                break
            sim[i] = sim[0] + shrink * (sim[i] - sim[0])
            vals[i] = f(sim[i])

    k = int(np.argmin(vals))
    return sim[k], vals[k]


def start_points(problem: OptimizationProblem) -> np.ndarray:
    """Deterministic starts: a scrambled Halton sample over the free
    coordinates, with the measurement-setting part shrunk toward the box
    centre in ``SCALE_STRATA`` nested shells.

    The objective is built from Gaussians of the setting displacements, so
    it is flat (|CHSH| -> 2) far from the origin; a sample spread over the
    whole box would rarely start inside a violating basin.
    """
    lo = np.array([b[0] for b in problem.bounds])
    hi = np.array([b[1] for b in problem.bounds])
    free = hi > lo
    starts = np.tile(lo, (problem.restarts, 1))
    if not free.any():
        return starts
    sampler = qmc.Halton(d=int(free.sum()), scramble=True, seed=problem.seed)
    unit = np.tile(0.5, (problem.restarts, len(lo)))
    unit[:, free] = sampler.random(problem.restarts)
    ns = len(SETTINGS_DIMS)
    shell = (np.arange(problem.restarts) % SCALE_STRATA + 1) / SCALE_STRATA
    unit[:, :ns] = 0.5 + shell[:, None] * (unit[:, :ns] - 0.5)
    starts[:, free] = (lo + unit * (hi - lo))[:, free]
    return starts


def _objective(problem: OptimizationProblem, full: np.ndarray):
    try:
        settings, state = problem.decode(full)
    except DegenerateState:
        return math.inf
    return -abs(chsh(settings, state).value)


def _run_restart(problem: OptimizationProblem, start: np.ndarray, limit: int):
    lo = np.array([b[0] for b in problem.bounds])
    hi = np.array([b[1] for b in problem.bounds])
    free = hi > lo
    budget = _Budget(limit)

    def expand(y):
        full = lo.copy()
        full[free] = y
        return full

    def fun(y):
        return _objective(problem, expand(y))

    if not free.any():
        val = fun(np.empty(0))
        budget.used = 1
        if math.isinf(val):
            return None
        budget.trace.append((1, float(-val)))
        return lo.copy(), float(-val), budget

    try:
        problem.decode(expand(start[free]))
    except DegenerateState:
        return None
    y, val = _nelder_mead(fun, start[free], lo[free], hi[free], budget)
    if math.isinf(val):
        return None
    return expand(y), float(-val), budget


def maximize_violation(problem: OptimizationProblem, workers: int = 1) -> OptimizationResult:
    """Run every restart and return the best incumbent.

    Restarts share the budget evenly; the merged result depends only on the
    problem, never on ``workers``.
    """
    starts = start_points(problem)
    per_restart = max(problem.budget // problem.restarts, 1)

    def job(i):
        return _run_restart(problem, starts[i], per_restart)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(job, range(problem.restarts)))
    else:
        outcomes = [job(i) for i in range(problem.restarts)]

    if all(o is None for o in outcomes):
        raise DegenerateRegion("every start point gives a degenerate state")

    best = None
    used = 0
    incumbent = -math.inf
    trace = []
    for outcome in outcomes:
        if outcome is None:
            continue
        x, value, budget = outcome
        for idx, val in budget.trace:
            if val > incumbent:
                incumbent = val
                trace.append((used + idx, val))
        used += budget.used
        # strict comparison keeps the lowest restart index on ties
        if best is None or value > best[1]:
            best = (x, value)

    settings, state = problem.decode(best[0])
    return OptimizationResult(best[1], settings, state, used, trace, problem.seed)


def certify(result: OptimizationResult, cutoff: int | None = None) -> Certification:
    """Recompute the reported optimum with the closed form and the Fock oracle."""
    settings, state = result.best_settings, result.best_state
    analytic = abs(chsh(settings, state).value)
    if cutoff is None:
        biggest = max(settings.max_amplitude, state.max_amplitude)
        cutoff = max(ORACLE_MIN_CUTOFF, required_cutoff(biggest))
    oracle = abs(oracle_chsh(settings, state, cutoff))
    if abs(analytic - result.best_value) > CERTIFY_TOL or abs(oracle - analytic) > CERTIFY_TOL:
        raise CertificationError(
            f"reported {result.best_value!r}, closed form {analytic!r}, oracle {oracle!r} "
            f"at cutoff {cutoff}"
        )
    if analytic > TSIRELSON + 1e-9:
        raise CertificationError(f"certified value {analytic!r} above the Tsirelson bound")
    return Certification(analytic, oracle, cutoff)


def _pair(z: complex) -> list[float]:
    return [z.real, z.imag]


def result_to_dict(result: OptimizationResult, certification: Certification | None = None) -> dict:
    s, st = result.best_settings, result.best_state
    out = {
        "best_value": result.best_value,
        "settings": {
            "z": _pair(s.z),
            "z_prime": _pair(s.z_prime),
            "w": _pair(s.w),
            "w_prime": _pair(s.w_prime),
        },
        "state": {"sigma": _pair(st.sigma), "eta": _pair(st.eta), "phi": st.phi},
        "evaluations_used": result.evaluations_used,
        "seed": result.seed,
    }
    if certification is not None:
        out["certification"] = {
            "analytic": certification.analytic,
            "oracle": certification.oracle,
            "cutoff": certification.cutoff,
        }
    return out


def result_to_json(result: OptimizationResult, certification: Certification | None = None) -> str:
    return json.dumps(result_to_dict(result, certification), indent=2) + "\n"


def load_result(text: str) -> tuple[MeasurementSettings, CatStateParams, float]:
    """Settings, state and best value from a result JSON document."""
    data = json.loads(text)
    s = data["settings"]
    settings = MeasurementSettings(
        tuple(s["z"]), tuple(s["z_prime"]), tuple(s["w"]), tuple(s["w_prime"])
    )
    st = data["state"]
    state = make_cat_state(tuple(st["sigma"]), tuple(st["eta"]), st["phi"])
    return settings, state, float(data["best_value"])
