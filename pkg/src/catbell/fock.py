"""Brute-force Fock-space oracle.

Builds displacement operators, coherent and cat states, and the dichotomic
measurement operators as dense matrices in a truncated number basis, then
evaluates the same quantities as :mod:`catbell.analytic` by direct linear
algebra. Nothing in this module calls the closed-form expressions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .analytic import CatStateParams, MeasurementSettings, amplitude
from .errors import CutoffTooSmall, DimensionMismatch

MIN_CUTOFF = 32


def required_cutoff(max_amplitude: float) -> int:
    """Smallest cutoff that keeps the Poisson tail of a coherent state of
    mean occupation ``max_amplitude**2`` below ~1e-12."""
    b = float(max_amplitude)
    return max(MIN_CUTOFF, math.ceil(b * b + 6.0 * b + 20.0))


def check_cutoff(cutoff: int, *amplitudes) -> None:
    """Raise :class:`CutoffTooSmall` if ``cutoff`` is too small for any of ``amplitudes``."""
    if int(cutoff) != cutoff or cutoff < 2:
        raise CutoffTooSmall(f"cutoff must be an integer >= 2, got {cutoff!r}")
    b = max((abs(a) for a in amplitudes), default=0.0)
    need = required_cutoff(b)
    if cutoff < need:
        raise CutoffTooSmall(
            f"cutoff {cutoff} too small for displacement magnitude {b:.4g} (need >= {need})"
        )


def reliable_dimension(max_amplitude: float, cutoff: int) -> int:
    """Size of the low-number block unaffected by truncation.

    Matrix identities (unitarity, idempotence, Weyl composition) only hold
    on the top-left block of a truncated operator; entries near the basis
    top are corrupted. Measured empirically, the corruption reaches down to
    about ``(sqrt(cutoff) - 1.5 |alpha| - 1)**2``.
    """
    edge = math.sqrt(cutoff) - 1.5 * float(max_amplitude) - 1.0
    if edge <= 0.0:
        return 0
    return min(cutoff, math.floor(edge * edge))


@dataclass(frozen=True, eq=False)
class FockVector:
    cutoff: int
    amplitudes: np.ndarray

    def __post_init__(self):
        n = self.amplitudes.shape[0]
        if self.amplitudes.ndim != 1 or n not in (self.cutoff, self.cutoff**2):
            raise DimensionMismatch(
                f"vector of shape {self.amplitudes.shape} does not match cutoff {self.cutoff}"
            )

    @property
    def bipartite(self) -> bool:
        return self.amplitudes.shape[0] == self.cutoff**2

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: FockVector) -> complex:
        """<self|other>."""
        if self.amplitudes.shape != other.amplitudes.shape:
            raise DimensionMismatch("vectors live in different spaces")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class FockOperator:
    """A dense operator on one mode or on both.

    Bipartite operators are held either as a full matrix or as a pair of
    single-mode factors ``(on_a, on_b)`` standing for their Kronecker
    product; :attr:`matrix` materializes the latter on demand.
    """

    cutoff: int
    mode_tag: str
    dense: np.ndarray | None = None
    factors: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        if self.mode_tag not in ("single", "bipartite"):
            raise ValueError(f"mode_tag must be 'single' or 'bipartite', got {self.mode_tag!r}")
        if (self.dense is None) == (self.factors is None):
            raise ValueError("give exactly one of dense or factors")
        n = self.cutoff
        if self.factors is not None:
            if self.mode_tag != "bipartite":
                raise ValueError("only bipartite operators have tensor factors")
            if any(f.shape != (n, n) for f in self.factors):
                raise DimensionMismatch(f"tensor factors must be {n}x{n}")
        else:
            dim = n if self.mode_tag == "single" else n * n
            if self.dense.shape != (dim, dim):
                raise DimensionMismatch(
                    f"{self.mode_tag} operator at cutoff {n} must be {dim}x{dim}, "
                    f"got {self.dense.shape}"
                )

    @cached_property
    def matrix(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        return np.kron(*self.factors)

    @property
    def dim(self) -> int:
        return self.cutoff if self.mode_tag == "single" else self.cutoff**2

    def apply(self, vec: FockVector) -> FockVector:
        self._check_vector(vec)
        if self.factors is not None:
            on_a, on_b = self.factors
            psi = vec.amplitudes.reshape(self.cutoff, self.cutoff)
            out = (on_a @ psi @ on_b.T).reshape(-1)
        else:
            out = self.matrix @ vec.amplitudes
        return FockVector(self.cutoff, out)

    def expectation(self, vec: FockVector) -> complex:
        """<vec| self |vec> (no normalization applied)."""
        return vec.overlap(self.apply(vec))

    def _check_vector(self, vec: FockVector):
        if vec.cutoff != self.cutoff or vec.amplitudes.shape[0] != self.dim:
            raise DimensionMismatch(
                f"{self.mode_tag} operator at cutoff {self.cutoff} cannot act on a vector "
                f"of length {vec.amplitudes.shape[0]}"
            )


def _lower_triangle(alpha: complex, cutoff: int) -> np.ndarray:
    """Entries (m, n) with m >= n of the displacement matrix.

    Uses D[n+k, n] = e^{-|a|^2/2} (a^k / sqrt(k!)) f_n(k), where
    f_n(k) = sqrt(n! k! / (n+k)!) L_n^(k)(|a|^2) obeys a normalized form of
    the three-term Laguerre recurrence that never overflows.
    """
    x = abs(alpha) ** 2
    k = np.arange(cutoff, dtype=float)
    # a^k / sqrt(k!) by running product
    head = np.ones(cutoff, dtype=complex)
    for i in range(1, cutoff):
        head[i] = head[i - 1] * alpha / math.sqrt(i)
    head *= math.exp(-0.5 * x)

    out = np.zeros((cutoff, cutoff), dtype=complex)
    f_prev = np.zeros(cutoff)
    f = np.ones(cutoff)
    for n in range(cutoff):
        kk = np.arange(cutoff - n)
        out[kk + n, n] = head[kk] * f[kk]
        f_next = ((2 * n + 1 + k - x) * f - math.sqrt(n) * np.sqrt(n + k) * f_prev) / (
            math.sqrt(n + 1) * np.sqrt(n + k + 1)
        )
        f_prev, f = f, f_next
    return out


def displacement_matrix(alpha, cutoff: int) -> np.ndarray:
    """Truncated matrix of D(alpha) = exp(alpha a^dag - conj(alpha) a), no cutoff check."""
    alpha = amplitude(alpha)
    if alpha == 0:
        return np.eye(cutoff, dtype=complex)
    low = _lower_triangle(alpha, cutoff)
    # D(alpha)^dag = D(-alpha) supplies the strict upper triangle
    up = _lower_triangle(-alpha, cutoff).conj().T
    return low + np.triu(up, 1)


def build_displacement(alpha, cutoff: int) -> FockOperator:
    alpha = amplitude(alpha)
    check_cutoff(cutoff, alpha)
    return FockOperator(cutoff, "single", dense=displacement_matrix(alpha, cutoff))


def build_coherent(alpha, cutoff: int) -> FockVector:
    """|alpha> = D(alpha)|0>, i.e. the first column of the displacement matrix."""
    d = build_displacement(alpha, cutoff)
    return FockVector(cutoff, d.matrix[:, 0].copy())


def vacuum_flip(cutoff: int) -> np.ndarray:
    """Single-mode F = 1 - 2|0><0|."""
    f = np.eye(cutoff, dtype=complex)
    f[0, 0] = -1.0
    return f


def single_mode_dichotomic(z, cutoff: int) -> np.ndarray:
    """1 - 2|z><z| on one mode, with |z> = D(z)|0>.

    Forming D(z) F D(z)^dag by matrix products would be equivalent in
    infinite dimensions, but the truncated D D^dag departs from the identity
    well inside the basis once |z| approaches the cutoff limit.
    """
    v = build_coherent(z, cutoff).amplitudes
    return np.eye(cutoff, dtype=complex) - 2.0 * np.outer(v, v.conj())


def build_dichotomic(z, cutoff: int, mode: str = "A") -> FockOperator:
    """Bipartite operator 1 - 2|z><z| on ``mode``, identity on the other mode."""
    local = single_mode_dichotomic(z, cutoff)
    ident = np.eye(cutoff, dtype=complex)
    if mode == "A":
        return FockOperator(cutoff, "bipartite", factors=(local, ident))
    if mode == "B":
        return FockOperator(cutoff, "bipartite", factors=(ident, local))
    raise ValueError(f"mode must be 'A' or 'B', got {mode!r}")


def build_literal_dichotomic(z, cutoff: int, mode: str = "A") -> FockOperator:
    """The two-mode-vacuum reading: displace 1 - 2|0,0><0,0| on one mode only.

    Unlike :func:`build_dichotomic` the result does not factor over the two
    modes, so operators on different modes fail to commute.
    """
    if mode not in ("A", "B"):
        raise ValueError(f"mode must be 'A' or 'B', got {mode!r}")
    d = build_displacement(z, cutoff).matrix
    ident = np.eye(cutoff, dtype=complex)
    big_d = np.kron(d, ident) if mode == "A" else np.kron(ident, d)
    flip = np.eye(cutoff * cutoff, dtype=complex)
    flip[0, 0] = -1.0
    return FockOperator(cutoff, "bipartite", dense=big_d @ flip @ big_d.conj().T)


def build_cat_state(state: CatStateParams, cutoff: int) -> FockVector:
    """N (D_a(s) D_b(e) + e^{i phi} D_a(-s) D_b(-e)) |0,0> as a length cutoff**2 vector."""
    check_cutoff(cutoff, state.sigma, state.eta)
    plus = np.kron(
        build_coherent(state.sigma, cutoff).amplitudes, build_coherent(state.eta, cutoff).amplitudes
    )
    minus = np.kron(
        build_coherent(-state.sigma, cutoff).amplitudes,
        build_coherent(-state.eta, cutoff).amplitudes,
    )
    amps = state.norm_factor * (plus + np.exp(1j * state.phi) * minus)
    return FockVector(cutoff, amps)


def commutator_norm(op1: FockOperator, op2: FockOperator) -> float:
    """Largest entry magnitude of ``op1 op2 - op2 op1``."""
    if op1.cutoff != op2.cutoff or op1.mode_tag != op2.mode_tag:
        raise DimensionMismatch(
            f"cannot commute a {op1.mode_tag} operator at cutoff {op1.cutoff} with a "
            f"{op2.mode_tag} operator at cutoff {op2.cutoff}"
        )
    if op1.factors is not None and op2.factors is not None:
        # (a1 x b1)(a2 x b2) = a1 a2 x b1 b2
        (a1, b1), (a2, b2) = op1.factors, op2.factors
        return _max_kron_difference(a1 @ a2, b1 @ b2, a2 @ a1, b2 @ b1)
    m1, m2 = op1.matrix, op2.matrix
    return float(np.abs(m1 @ m2 - m2 @ m1).max())


def _max_kron_difference(p1, p2, q1, q2) -> float:
    """max |kron(p1, p2) - kron(q1, q2)|, one block row at a time."""
    worst = 0.0
    for i in range(p1.shape[0]):
        block = p1[i][:, None, None] * p2[None] - q1[i][:, None, None] * q2[None]
        worst = max(worst, float(np.abs(block).max()))
    return worst


# Oracle counterparts of the closed-form quantities.


def oracle_overlap(u, v, cutoff: int) -> complex:
    return build_coherent(u, cutoff).overlap(build_coherent(v, cutoff))


def _projector(z, cutoff: int) -> np.ndarray:
    v = build_coherent(z, cutoff).amplitudes
    return np.outer(v, v.conj())


def oracle_proj_single(z, state: CatStateParams, cutoff: int, mode: str = "A") -> float:
    psi = build_cat_state(state, cutoff)
    proj = _projector(z, cutoff)
    ident = np.eye(cutoff, dtype=complex)
    factors = (proj, ident) if mode == "A" else (ident, proj)
    return FockOperator(cutoff, "bipartite", factors=factors).expectation(psi).real


def oracle_proj_joint(z, w, state: CatStateParams, cutoff: int) -> float:
    psi = build_cat_state(state, cutoff)
    op = FockOperator(cutoff, "bipartite", factors=(_projector(z, cutoff), _projector(w, cutoff)))
    return op.expectation(psi).real


def oracle_correlator(z, w, state: CatStateParams, cutoff: int) -> float:
    check_cutoff(cutoff, z, w)
    psi = build_cat_state(state, cutoff)
    a = single_mode_dichotomic(z, cutoff)
    b = single_mode_dichotomic(w, cutoff)
    return FockOperator(cutoff, "bipartite", factors=(a, b)).expectation(psi).real


def oracle_chsh_components(
    settings: MeasurementSettings, state: CatStateParams, cutoff: int
) -> tuple[float, float, float, float]:
    """The four correlators of the CHSH sum, sharing one state vector."""
    z, zp, w, wp = settings.as_tuple()
    check_cutoff(cutoff, z, zp, w, wp)
    psi = build_cat_state(state, cutoff)
    a = {key: single_mode_dichotomic(key, cutoff) for key in (z, zp)}
    b = {key: single_mode_dichotomic(key, cutoff) for key in (w, wp)}

    def corr(x, y):
        return FockOperator(cutoff, "bipartite", factors=(a[x], b[y])).expectation(psi).real

    return corr(z, w), corr(zp, w), corr(z, wp), corr(zp, wp)


def oracle_chsh(settings: MeasurementSettings, state: CatStateParams, cutoff: int) -> float:
    e_zw, e_zpw, e_zwp, e_zpwp = oracle_chsh_components(settings, state, cutoff)
    return e_zw + e_zpw + e_zwp - e_zpwp
