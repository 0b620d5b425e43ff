"""Periodic-orbit locking experiments on suspension flows over subshifts of finite type."""

from ._ergolock import (
    ErgolockError,
    Observable,
    System,
    alpha_deviation,
    approximate,
    beta,
    calibrate,
    catalog,
    census_matches_trace,
    continuous_lock,
    decay,
    gap,
    lock,
    reveal_check,
    split,
    subaction,
)

__version__ = "0.1.0"
