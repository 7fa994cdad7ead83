"""Scoring kernels with a compiled fast path.

The compiled extension is preferred when built; the pure-Python module with
identical numeric behavior takes over otherwise. Set QUANTRANK_KERNELS=pure
or =native to force a backend (native raises if the extension is missing).
"""

import os

from . import pure

try:
    from . import _native
except ImportError:
    _native = None

_requested = os.environ.get("QUANTRANK_KERNELS", "").strip().lower()
if _requested == "native":
    if _native is None:
        raise ImportError(
            "QUANTRANK_KERNELS=native but the compiled kernels are not built"
        )
    _impl = _native
elif _requested == "pure":
    _impl = pure
elif _requested:
    raise ImportError(f"QUANTRANK_KERNELS={_requested!r} is not a backend name")
else:
    _impl = _native if _native is not None else pure

BACKEND = "native" if _impl is not pure else "pure"

COND_EQ = pure.COND_EQ
COND_LT = pure.COND_LT
COND_GT = pure.COND_GT

phi_scalar = _impl.phi_scalar
phi_batch = _impl.phi_batch
qs_batch = _impl.qs_batch
bm25_accumulate = _impl.bm25_accumulate


def available_backends():
    out = ["pure"]
    if _native is not None:
        out.insert(0, "native")
    return out


def get_backend(name):
    """Explicit backend lookup for parity tests and benchmarks."""
    if name == "pure":
        return pure
    if name == "native":
        if _native is None:
            raise ValueError("native kernels not built")
        return _native
    raise ValueError(f"unknown backend {name!r}")
