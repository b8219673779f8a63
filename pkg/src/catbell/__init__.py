"""Bell-CHSH violation by two-mode entangled cat states measured with
displaced vacuum projectors.

:mod:`catbell.analytic` holds the closed forms, :mod:`catbell.fock` the
truncated-Fock-space oracle that checks them, :mod:`catbell.scan` and
:mod:`catbell.optimize` the parameter scans and the violation search.
"""

from .analytic import (
    TSIRELSON,
    CatStateParams,
    ChshValue,
    MeasurementSettings,
    chsh,
    chsh_components,
    coherent_overlap,
    correlator,
    make_cat_state,
    proj_expectation_joint,
    proj_expectation_single,
    weyl_compose,
)
from .errors import (
    CatBellError,
    CertificationError,
    ConsistencyError,
    CutoffTooSmall,
    DegenerateRegion,
    DegenerateState,
    DimensionMismatch,
    EmptyScan,
    TsirelsonViolation,
)

__version__ = "0.1.0"

__all__ = [
    "TSIRELSON",
    "CatBellError",
    "CatStateParams",
    "CertificationError",
    "ChshValue",
    "ConsistencyError",
    "CutoffTooSmall",
    "DegenerateRegion",
    "DegenerateState",
    "DimensionMismatch",
    "EmptyScan",
    "MeasurementSettings",
    "TsirelsonViolation",
    "chsh",
    "chsh_components",
    "coherent_overlap",
    "correlator",
    "make_cat_state",
    "proj_expectation_joint",
    "proj_expectation_single",
    "weyl_compose",
]
