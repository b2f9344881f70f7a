"""Backend selection for the hot loops of the interior-point solver.

The compiled extension is used when it imports; setting the environment
variable ``PEPSYNTH_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _schur_py

BACKEND = "python"
schur_complement = _schur_py.schur_complement

if os.environ.get("PEPSYNTH_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _schur

        schur_complement = _schur.schur_complement
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

__all__ = ["BACKEND", "schur_complement"]
