import pytest

from beepsim import kernels
from beepsim.kernels import _pykernels

try:
    from beepsim.kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

KERNEL_NAMES = ("beep_supports", "dist_bits", "noise_flips", "scan_candidates")


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Route every kernel call through one backend for the duration of a test."""
    mod = BACKENDS[request.param]
    for name in KERNEL_NAMES:
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param
