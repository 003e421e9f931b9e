"""Backend selection for the hot GP-fitting kernel.

The compiled Cython extension is preferred; the pure-Python module is an
algorithmically identical fallback. Set ``EXTQUANT_PURE=1`` to force the
fallback (used by the benchmark and by tests that compare backends).
"""

import os

if os.environ.get("EXTQUANT_PURE"):
    from ._pure import BACKEND, gp_fit, gp_negloglik
else:
    try:
        from ._core import BACKEND, gp_fit, gp_negloglik
    except ImportError:
        from ._pure import BACKEND, gp_fit, gp_negloglik

__all__ = ["BACKEND", "gp_fit", "gp_negloglik"]
