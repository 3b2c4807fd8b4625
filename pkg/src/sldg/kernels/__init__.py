"""Hot numeric kernels.

The numba implementation is used when numba imports cleanly, unless the
environment variable ``SLDG_DISABLE_NUMBA`` is set to a non-empty value
other than ``0``.  Both backends share signatures and are tested against
each other.
"""
import os

from . import _numpy

_disabled = os.environ.get("SLDG_DISABLE_NUMBA", "").strip() not in ("", "0")

if _disabled:
    _impl = _numpy
    BACKEND = "numpy"
else:
    try:
        from . import _numba
    except ImportError:  # pragma: no cover - numba is optional
        _impl = _numpy
        BACKEND = "numpy"
    else:
        _impl = _numba
        BACKEND = "numba"

stiffness = _impl.stiffness
physical_grad = _impl.physical_grad
pair_products = _impl.pair_products
csr_matvec = _impl.csr_matvec
pcg = _impl.pcg

__all__ = ["BACKEND", "stiffness", "physical_grad", "pair_products", "csr_matvec", "pcg"]
