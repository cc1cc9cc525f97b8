"""Central numerical tolerances.

Every tolerance used as a default elsewhere in the package is defined here so
that a single place documents what "equal" means for each kind of check.
``OQWALK_TOL`` in the environment overrides the structural default.
"""

import os

#: Structural predicates: Hermiticity, PSD, normalization of effects.
STRUCTURAL = float(os.environ.get("OQWALK_TOL", "1e-10"))

#: Comparison against values printed with truncated decimals.
PRINTED = 1e-3

#: Residuals of algebraic identities (hitting-time formula and operator identities).
IDENTITY = 1e-8

#: Spectral decisions (eigenvalues on the unit circle, fixed points).
SPECTRAL = 1e-9


def default_threads():
    """Worker count for trajectory sampling (``OQWALK_THREADS``, default 1)."""
    try:
        return max(1, int(os.environ.get("OQWALK_THREADS", "1")))
    except ValueError:
        return 1
