"""Episode-kernel backend selection.

The compiled Cython kernel is preferred when built; the pure-Python kernel
is the always-available fallback. Both produce bit-identical results, so
backend choice only affects speed. The ``LIQSIM_BACKEND`` environment
variable (``python`` or ``cython``) overrides any configured choice, which
tests and the benchmark use to pin a backend.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernel_py

try:
    from . import _kernel_cy
except ImportError:  # extension not built; pure Python still works
    _kernel_cy = None

BACKEND_NAMES = ("python", "cython")


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _kernel_cy is not None else [])


def resolve_backend(name: str = "auto") -> tuple[ModuleType, str]:
    """Return (kernel module, resolved name) for a requested backend name."""
    forced = os.environ.get("LIQSIM_BACKEND")
    if forced:
        name = forced
    if name == "auto":
        if _kernel_cy is not None:
            return _kernel_cy, "cython"
        return _kernel_py, "python"
    if name == "python":
        return _kernel_py, "python"
    if name == "cython":
        if _kernel_cy is None:
            raise RuntimeError(
                "cython kernel requested but the extension is not built; "
                "install with `pip install -e . --no-build-isolation`"
            )
        return _kernel_cy, "cython"
    raise ValueError(f"unknown backend {name!r}; expected auto|python|cython")
