"""Simultaneous state and pump-power estimation for an optical parametric
oscillator monitored by homodyne detection.

The heavy lifting lives in the compiled extension ``_opo_estim``; this
package re-exports its surface. When installed as a wheel the extension sits
inside this package, while in a build-tree test run it is importable from the
build directory directly.
"""

try:
    from ._opo_estim import *  # noqa: F401,F403
    from ._opo_estim import __doc__ as _core_doc
except ImportError:  # build-tree layout: extension next to the package dir
    from _opo_estim import *  # noqa: F401,F403
    from _opo_estim import __doc__ as _core_doc

__all__ = [
    "default_config",
    "run_single_trial",
    "run_case_study",
    "run_sweep",
    "check_invariants",
    "simulate_pump",
    "rpi",
    "mean_sem",
    "trial_seed",
    "ConfigError",
    "NumericalError",
    "UndefinedMetricError",
]
