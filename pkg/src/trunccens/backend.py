"""Selection of the numeric kernel backend.

The likelihood/gradient/Hessian kernels come in two interchangeable
flavours: numba-compiled loops (fast, the default) and a pure
numpy/scipy implementation. The active backend is taken from the
``TRUNCCENS_BACKEND`` environment variable (``"numba"`` or ``"numpy"``)
when the package is first used; without the variable, numba is used if
it imports and numpy otherwise. ``set_backend`` switches at runtime and
is what the tests and the benchmark use.
"""

from __future__ import annotations

import os

ENV_VAR = "TRUNCCENS_BACKEND"

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - environment dependent
    HAS_NUMBA = False

_active: str | None = None


def _resolve_from_env() -> str:
    choice = os.environ.get(ENV_VAR, "").strip().lower()
    if not choice:
        return "numba" if HAS_NUMBA else "numpy"
    if choice not in ("numba", "numpy"):
        raise ValueError(
            f"{ENV_VAR}={choice!r} not understood; expected 'numba' or 'numpy'"
        )
    if choice == "numba" and not HAS_NUMBA:
        raise ImportError(f"{ENV_VAR}=numba but numba is not importable")
    return choice


def active_backend() -> str:
    """Name of the backend in use, resolving the env flag on first call."""
    global _active
    if _active is None:
        _active = _resolve_from_env()
    return _active


def set_backend(name: str) -> None:
    """Force the kernel backend to ``"numba"`` or ``"numpy"``."""
    global _active
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    if name == "numba" and not HAS_NUMBA:
        raise ImportError("numba backend requested but numba is not importable")
    _active = name
