"""Closed-form expectation values for two-mode entangled cat states.

Everything here is a pure function of complex amplitudes and real phases;
no matrices and no Fock truncation are involved. The state is

    |psi> = N (|sigma>|eta> + e^{i phi} |-sigma>|-eta>)

and the measurement on each mode is the dichotomic operator
``1 - 2 |z><z|`` built from a displaced vacuum projector. Coherent-state
overlaps follow the convention

    <u|v> = exp(conj(u) v - |u|^2/2 - |v|^2/2)

which fixes the sign of every interference phase below.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from numbers import Complex

from .errors import ConsistencyError, DegenerateState, TsirelsonViolation

TSIRELSON = 2.0 * math.sqrt(2.0)
CLASSICAL_BOUND = 2.0

DEGENERACY_TOL = 1e-12
CLAMP_TOL = 1e-12
CORRELATOR_TOL = 1e-9
TSIRELSON_TOL = 1e-9
# beyond this the breach cannot be round-off and is reported as a bug
TSIRELSON_ABORT = 1e-6


def amplitude(value) -> complex:
    """Coerce ``value`` to a finite Python complex.

    Accepts numbers and ``(re, im)`` pairs.
    """
    if isinstance(value, (tuple, list)):
        if len(value) != 2:
            raise ValueError(f"expected (re, im) pair, got {value!r}")
        value = complex(float(value[0]), float(value[1]))
    elif isinstance(value, Complex):
        value = complex(value)
    else:
        raise TypeError(f"not a complex amplitude: {value!r}")
    if not cmath.isfinite(value):
        raise ValueError(f"amplitude must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class CatStateParams:
    """Entangled cat state parameters with the precomputed normalization."""

    sigma: complex
    eta: complex
    phi: float
    norm_factor: float

    @property
    def norm_sq(self) -> float:
        return self.norm_factor * self.norm_factor

    @property
    def max_amplitude(self) -> float:
        return max(abs(self.sigma), abs(self.eta))


@dataclass(frozen=True)
class MeasurementSettings:
    """Displacements of the four dichotomic operators A(z), A(z'), B(w), B(w')."""

    z: complex
    z_prime: complex
    w: complex
    w_prime: complex

    def __post_init__(self):
        for name in ("z", "z_prime", "w", "w_prime"):
            object.__setattr__(self, name, amplitude(getattr(self, name)))

    @classmethod
    def uniform(cls, value) -> MeasurementSettings:
        """All four displacements equal to ``value``."""
        return cls(value, value, value, value)

    def as_tuple(self) -> tuple[complex, complex, complex, complex]:
        return (self.z, self.z_prime, self.w, self.w_prime)

    @property
    def max_amplitude(self) -> float:
        return max(abs(v) for v in self.as_tuple())


@dataclass(frozen=True)
class ChshValue:
    value: float
    classification: str

    @property
    def violating(self) -> bool:
        return self.classification == "violating"


def _abs2(z: complex) -> float:
    # re^2 + im^2 rather than abs(z)**2, which rounds through hypot
    return z.real * z.real + z.imag * z.imag


def classify(value: float) -> str:
    return "violating" if abs(value) > CLASSICAL_BOUND else "classical"


def coherent_overlap(u, v) -> complex:
    """Inner product <u|v> of two coherent states."""
    u, v = amplitude(u), amplitude(v)
    return cmath.exp(u.conjugate() * v - 0.5 * _abs2(u) - 0.5 * _abs2(v))


def weyl_compose(xi, xi2) -> tuple[float, complex]:
    """Return ``(phase, total)`` with D(xi) D(xi2) = e^{i phase} D(total)."""
    xi, xi2 = amplitude(xi), amplitude(xi2)
    phase = xi.imag * xi2.real - xi.real * xi2.imag
    return phase, xi + xi2


def make_cat_state(sigma, eta, phi: float) -> CatStateParams:
    """Build the state parameters and their normalization factor.

    Raises
    ------
    DegenerateState
        If the two branches (nearly) cancel, e.g. ``phi = pi`` with
        ``sigma = eta = 0``.
    """
    sigma, eta = amplitude(sigma), amplitude(eta)
    phi = float(phi)
    if not math.isfinite(phi):
        raise ValueError(f"phi must be finite, got {phi!r}")
    denom = 1.0 + math.cos(phi) * math.exp(-2.0 * (_abs2(sigma) + _abs2(eta)))
    if denom < DEGENERACY_TOL:
        raise DegenerateState(
            f"normalization denominator 1 + cos(phi) exp(-2(|sigma|^2+|eta|^2)) = {denom:.3g} "
            f"vanishes for sigma={sigma}, eta={eta}, phi={phi}"
        )
    return CatStateParams(sigma, eta, phi, 1.0 / math.sqrt(2.0 * denom))


def _clamp_probability(value: float, what: str) -> float:
    if -CLAMP_TOL <= value < 0.0:
        return 0.0
    if value < 0.0 or value > 1.0 + CLAMP_TOL:
        raise ConsistencyError(f"{what} = {value!r} outside [0, 1]")
    return value


def _interference_phase(mu: complex, z: complex) -> float:
    # 2 Im(conj(mu) z): the relative phase picked up by <mu|z><z|-mu>
    return 2.0 * (mu.conjugate() * z).imag


def proj_expectation_single(z, state: CatStateParams, mode: str = "A") -> float:
    """<psi| P(z) |psi> with P(z) = |z><z| acting on one mode only."""
    z = amplitude(z)
    if mode == "A":
        mu, nu = state.sigma, state.eta
    elif mode == "B":
        mu, nu = state.eta, state.sigma
    else:
        raise ValueError(f"mode must be 'A' or 'B', got {mode!r}")
    dm = _abs2(z - mu)
    dp = _abs2(z + mu)
    cross = (
        2.0
        * math.exp(-2.0 * _abs2(nu))
        * math.exp(-0.5 * (dm + dp))
        * math.cos(state.phi + _interference_phase(mu, z))
    )
    value = state.norm_sq * (math.exp(-dm) + math.exp(-dp) + cross)
    return _clamp_probability(value, f"<P_{mode}({z})>")


def proj_expectation_joint(z, w, state: CatStateParams) -> float:
    """<psi| P_a(z) (x) P_b(w) |psi>."""
    z, w = amplitude(z), amplitude(w)
    s, e = state.sigma, state.eta
    a_m, a_p = _abs2(z - s), _abs2(z + s)
    b_m, b_p = _abs2(w - e), _abs2(w + e)
    cross = (
        2.0
        * math.exp(-0.5 * (a_m + a_p + b_m + b_p))
        * math.cos(state.phi + _interference_phase(s, z) + _interference_phase(e, w))
    )
    value = state.norm_sq * (math.exp(-a_m - b_m) + math.exp(-a_p - b_p) + cross)
    return _clamp_probability(value, f"<P_a({z}) P_b({w})>")


def correlator(z, w, state: CatStateParams) -> float:
    """Expectation of A(z) (x) B(w) where A = 1 - 2 P_a and B = 1 - 2 P_b."""
    value = (
        1.0
        - 2.0 * proj_expectation_single(z, state, "A")
        - 2.0 * proj_expectation_single(w, state, "B")
        + 4.0 * proj_expectation_joint(z, w, state)
    )
    if abs(value) > 1.0 + CORRELATOR_TOL:
        raise ConsistencyError(f"correlator {value!r} outside [-1, 1]")
    return value


def chsh_components(
    settings: MeasurementSettings, state: CatStateParams
) -> tuple[float, float, float, float]:
    """Return ``(E(z,w), E(z',w), E(z,w'), E(z',w'))``."""
    z, zp, w, wp = settings.as_tuple()
    return (
        correlator(z, w, state),
        correlator(zp, w, state),
        correlator(z, wp, state),
        correlator(zp, wp, state),
    )


def combine_chsh(e_zw: float, e_zpw: float, e_zwp: float, e_zpwp: float) -> ChshValue:
    """Form the CHSH sum from its four correlators and classify it."""
    value = e_zw + e_zpw + e_zwp - e_zpwp
    if abs(value) > TSIRELSON + TSIRELSON_ABORT:
        raise TsirelsonViolation(
            f"|CHSH| = {abs(value)!r} exceeds the Tsirelson bound {TSIRELSON!r}"
        )
    return ChshValue(value, classify(value))


def chsh(settings: MeasurementSettings, state: CatStateParams) -> ChshValue:
    return combine_chsh(*chsh_components(settings, state))


__all__ = [
    "CLASSICAL_BOUND",
    "TSIRELSON",
    "CatStateParams",
    "ChshValue",
    "MeasurementSettings",
    "amplitude",
    "chsh",
    "chsh_components",
    "classify",
    "coherent_overlap",
    "combine_chsh",
    "correlator",
    "make_cat_state",
    "proj_expectation_joint",
    "proj_expectation_single",
    "weyl_compose",
]
