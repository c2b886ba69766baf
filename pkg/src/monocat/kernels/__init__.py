"""Hot-loop kernels: compiled core with a numpy fallback selected at import.

Set MONOCAT_PURE=1 to force the numpy implementation even when the
compiled extension is available (used by the kernel benchmark and tests).
"""

import os

_force_pure = os.environ.get("MONOCAT_PURE", "").lower() in {"1", "true", "yes"}

BACKEND = "python"
if not _force_pure:
    try:
        from monocat.kernels._ckernels import (  # noqa: F401
            convolve_batch,
            gather_likelihood,
            pava_batch,
            scatter_rows,
            sweep_levels,
        )

        BACKEND = "compiled"
    except ImportError:
        _force_pure = True

if _force_pure:
    from monocat.kernels._pykernels import (  # noqa: F401
        convolve_batch,
        gather_likelihood,
        pava_batch,
        scatter_rows,
        sweep_levels,
    )

__all__ = [
    "BACKEND",
    "convolve_batch",
    "gather_likelihood",
    "pava_batch",
    "scatter_rows",
    "sweep_levels",
]
