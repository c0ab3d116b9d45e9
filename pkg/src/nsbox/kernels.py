"""Backend selection for the Monte Carlo round kernels.

The compiled extension is used when it imports; otherwise, or when
``NSBOX_PURE_PYTHON=1`` is set, the numpy implementation is used. Both
produce identical outputs.
"""
from __future__ import annotations

import os

from . import _pykernels
from ._pykernels import (  # noqa: F401  (re-exported constants and scalar helpers)
    BITS_EXAM_OWN,
    BITS_EXAM_UNIFORM,
    BITS_PRBOX,
    DIR_PRBOX_SINGLET,
    DIR_LOCAL,
    DIR_TONER_BACON,
    LABEL_LAMBDA1,
    LABEL_LAMBDA2,
    LABEL_LOCAL,
    draw,
    round_key,
    sphere_point,
    stream_key,
    subkey,
)

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def get_backend(name: str | None = None):
    """Return the kernel module for ``'cython'``, ``'python'`` or the default."""
    if name is None:
        if os.environ.get("NSBOX_PURE_PYTHON", "") not in ("", "0"):
            return _pykernels
        return _compiled or _pykernels
    if name == "python":
        return _pykernels
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not available; build the extension first")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])


BACKEND = get_backend().BACKEND
