"""Slow-bond exclusion workbench.

The compiled module carries the main operations: kappa estimation from the
last-passage growth model, the closed-form macroscopic solver, and the
event-driven particle simulator.
"""

try:
    from ._slowbond import *  # installed layout: extension inside the package
    from ._slowbond import __doc__ as _core_doc
except ImportError:  # development layout: extension on PYTHONPATH
    from _slowbond import *
    from _slowbond import __doc__ as _core_doc

__all__ = [
    "estimate_kappa",
    "kappa_bounds",
    "lambda0_from_kappa",
    "shape_probe",
    "wedge_quadrant_equivalence",
    "f0",
    "g0",
    "gamma0",
    "cost_integral",
    "interface_level",
    "macro_passage",
    "flat_profile_value",
    "critical_density",
    "value_function",
    "invariance_check",
    "simulate",
    "pair_correlation",
]
