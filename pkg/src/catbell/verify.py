"""Closed form versus Fock oracle, check by check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytic as an
from . import fock
from .errors import CatBellError, DegenerateState

DEFAULT_CUTOFF = 64
DEFAULT_SAMPLES = 100
DEFAULT_MAX_MAGNITUDE = 3.0

AGREEMENT_TOL = 1e-8
NORM_TOL = 1e-9
HERMITICITY_TOL = 1e-12
NONCOMMUTING_MIN = 1e-3

# Weyl checks use amplitudes scaled so that |xi|, |xi'| <= 2 when samples reach 3
WEYL_SCALE = 2.0 / 3.0
# the operator pair used for the non-commutation and literal-reading checks
NONCOMMUTING_PAIR = (1.0, 1.0 + 1.0j)
LITERAL_PAIR = (0.5, 0.3 + 0.4j)
LITERAL_CUTOFF = 32


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float
    kind: str = "max"  # "max": value must stay below; "min": above; "info": never fails
    detail: str = ""

    @property
    def passed(self) -> bool:
        if self.kind == "info":
            return True
        if self.kind == "min":
            return self.value > self.tolerance
        if self.tolerance == 0.0:
            return self.value == 0.0
        return self.value < self.tolerance

    def line(self) -> str:
        status = {"info": "INFO", True: "PASS", False: "FAIL"}[
            "info" if self.kind == "info" else self.passed
        ]
        relation = {"max": "<", "min": ">", "info": "~"}[self.kind]
        if self.kind == "max" and self.tolerance == 0.0:
            relation = "=="
        text = f"{status}  {self.name:<22} {self.value:.3e}  ({relation} {self.tolerance:.0e})"
        return text + (f"  {self.detail}" if self.detail else "")


@dataclass
class VerificationReport:
    cutoff: int
    samples: int
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def first_failure(self) -> CheckResult | None:
        return next((c for c in self.checks if not c.passed), None)

    def to_dict(self) -> dict:
        return {
            "cutoff": self.cutoff,
            "samples": self.samples,
            "passed": self.passed,
            "checks": [
                {
                    "name": c.name,
                    "value": c.value,
                    "tolerance": c.tolerance,
                    "kind": c.kind,
                    "passed": c.passed,
                    "detail": c.detail,
                }
                for c in self.checks
            ],
        }


@dataclass(frozen=True)
class Sample:
    state: an.CatStateParams
    z: complex
    w: complex


def random_samples(count: int, seed: int, max_magnitude: float) -> list[Sample]:
    """Tuples (sigma, eta, z, w, phi) with every |amplitude| <= max_magnitude."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        mags = rng.uniform(0.0, max_magnitude, 4)
        phases = rng.uniform(0.0, 2 * math.pi, 4)
        sigma, eta, z, w = (float(m) * complex(math.cos(p), math.sin(p)) for m, p in zip(mags, phases))
        phi = float(rng.uniform(0.0, 2 * math.pi))
        try:
            state = an.make_cat_state(sigma, eta, phi)
        except DegenerateState:
            continue
        out.append(Sample(state, z, w))
    return out


def _guard(name, tolerance, kind, fn) -> CheckResult:
    try:
        value, detail = fn()
    except CatBellError as exc:
        return CheckResult(name, math.inf, tolerance, "max", f"{type(exc).__name__}: {exc}")
    return CheckResult(name, value, tolerance, kind, detail)


def run_verification(
    cutoff: int = DEFAULT_CUTOFF,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    max_magnitude: float = DEFAULT_MAX_MAGNITUDE,
    literal: bool = False,
    extra: list[Sample] | None = None,
) -> VerificationReport:
    """Run every analytic-versus-oracle check and collect the deviations."""
    report = VerificationReport(cutoff, samples)
    tuples = list(extra or []) + random_samples(samples, seed, max_magnitude)
    biggest = max(
        [max(s.state.max_amplitude, abs(s.z), abs(s.w)) for s in tuples], default=0.0
    )

    def cutoff_check():
        fock.check_cutoff(cutoff, biggest)
        return 0.0, f"largest amplitude {biggest:.3g} needs cutoff >= {fock.required_cutoff(biggest)}"

    report.checks.append(_guard("cutoff", 0.0, "max", cutoff_check))
    if not report.checks[-1].passed:
        return report

    def agreement(fn):
        def run():
            return max((fn(s) for s in tuples), default=0.0), f"{len(tuples)} tuples"

        return run

    def norm_dev(s):
        return abs(fock.build_cat_state(s.state, cutoff).norm - 1.0)

    def overlap_dev(s):
        return abs(an.coherent_overlap(s.z, s.state.sigma) - fock.oracle_overlap(s.z, s.state.sigma, cutoff))

    def single_dev(s):
        return max(
            abs(an.proj_expectation_single(s.z, s.state, "A") - fock.oracle_proj_single(s.z, s.state, cutoff, "A")),
            abs(an.proj_expectation_single(s.w, s.state, "B") - fock.oracle_proj_single(s.w, s.state, cutoff, "B")),
        )

    def joint_dev(s):
        return abs(an.proj_expectation_joint(s.z, s.w, s.state) - fock.oracle_proj_joint(s.z, s.w, s.state, cutoff))

    def corr_dev(s):
        return abs(an.correlator(s.z, s.w, s.state) - fock.oracle_correlator(s.z, s.w, s.state, cutoff))

    checks = [
        ("normalization", NORM_TOL, norm_dev),
        ("overlap", AGREEMENT_TOL, overlap_dev),
        ("projector_single", AGREEMENT_TOL, single_dev),
        ("projector_joint", AGREEMENT_TOL, joint_dev),
        ("correlator", AGREEMENT_TOL, corr_dev),
    ]
    for name, tol, fn in checks:
        report.checks.append(_guard(name, tol, "max", agreement(fn)))

    def weyl():
        worst = 0.0
        for s in tuples:
            xi, xi2 = WEYL_SCALE * s.z, WEYL_SCALE * s.w
            phase, total = an.weyl_compose(xi, xi2)
            lhs = fock.build_displacement(xi, cutoff).matrix @ fock.build_displacement(xi2, cutoff).matrix
            # entries of D(xi + xi') are exact at any cutoff; only the product truncates
            rhs = np.exp(1j * phase) * fock.displacement_matrix(total, cutoff)
            m = fock.reliable_dimension(max(abs(xi), abs(xi2)), cutoff)
            if m:
                worst = max(worst, float(np.abs(lhs - rhs)[:m, :m].max()))
        return worst, "reliable sub-block"

    def unitarity():
        worst = 0.0
        for s in tuples:
            d = fock.build_displacement(s.z, cutoff).matrix
            m = fock.reliable_dimension(abs(s.z), cutoff)
            if m:
                resid = d.conj().T @ d - np.eye(cutoff)
                worst = max(worst, float(np.abs(resid[:m, :m]).max()))
        return worst, "reliable sub-block"

    def hermiticity():
        worst = 0.0
        for s in tuples:
            for x in (s.z, s.w):
                a = fock.single_mode_dichotomic(x, cutoff)
                worst = max(worst, float(np.abs(a - a.conj().T).max()))
        return worst, ""

    def idempotence():
        worst = 0.0
        ident = np.eye(cutoff)
        for s in tuples:
            for x in (s.z, s.w):
                a = fock.single_mode_dichotomic(x, cutoff)
                m = fock.reliable_dimension(abs(x), cutoff)
                if m:
                    worst = max(worst, float(np.abs((a @ a - ident)[:m, :m]).max()))
        return worst, "reliable sub-block"

    def commuting():
        worst = 0.0
        for s in tuples[:5]:
            op_a = fock.build_dichotomic(s.z, cutoff, "A")
            op_b = fock.build_dichotomic(s.w, cutoff, "B")
            worst = max(worst, fock.commutator_norm(op_a, op_b))
        return worst, "[A(z), B(w)] on 5 tuples"

    def noncommuting():
        z1, z2 = NONCOMMUTING_PAIR
        op1 = fock.build_dichotomic(z1, cutoff, "A")
        op2 = fock.build_dichotomic(z2, cutoff, "A")
        return fock.commutator_norm(op1, op2), f"[A({z1}), A({z2})]"

    report.checks.append(_guard("weyl", AGREEMENT_TOL, "max", weyl))
    report.checks.append(_guard("unitarity", AGREEMENT_TOL, "max", unitarity))
    report.checks.append(_guard("hermiticity", HERMITICITY_TOL, "max", hermiticity))
    report.checks.append(_guard("idempotence", AGREEMENT_TOL, "max", idempotence))
    report.checks.append(_guard("commutator_AB", 0.0, "max", commuting))
    report.checks.append(_guard("commutator_AA", NONCOMMUTING_MIN, "min", noncommuting))

    if literal:
        report.checks.append(_guard("literal_commutator_AB", 0.0, "info", literal_commutator))
    return report


def literal_commutator(cutoff: int = LITERAL_CUTOFF):
    """[A, B] under the two-mode-vacuum reading, which does not vanish."""
    z, w = LITERAL_PAIR
    op_a = fock.build_literal_dichotomic(z, cutoff, "A")
    op_b = fock.build_literal_dichotomic(w, cutoff, "B")
    return fock.commutator_norm(op_a, op_b), f"two-mode vacuum reading, z={z}, w={w}, cutoff {cutoff}"
