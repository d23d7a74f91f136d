"""Hot kernels: codeword supports, candidate scanning and channel noise.

The compiled extension is used when it was built; otherwise the numpy
implementation is selected. Set ``BEEPSIM_PURE_PYTHON=1`` to force the
fallback. Both backends are bit-identical.
"""

import os

from . import _pykernels

if os.environ.get("BEEPSIM_PURE_PYTHON", "") not in ("", "0"):
    _backend = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _backend
        BACKEND = "cython"
    except ImportError:
        _backend = _pykernels
        BACKEND = "python"

beep_supports = _backend.beep_supports
dist_bits = _backend.dist_bits
noise_flips = _backend.noise_flips
scan_candidates = _backend.scan_candidates

__all__ = ["BACKEND", "beep_supports", "dist_bits", "noise_flips", "scan_candidates"]
