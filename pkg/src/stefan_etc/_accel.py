"""Numerical-kernel lane selection.

Two lanes implement identical stepping arithmetic: a numba-compiled one
(:mod:`._kernels_nb`) and a vectorized numpy one (:mod:`._kernels_np`).
The active lane is picked once per process from the environment variable
``STEFAN_ETC_BACKEND``:

* ``auto`` (default): numba if it imports, else numpy
* ``numba``: require numba, fail loudly if missing
* ``numpy``: pure-numpy lane, never imports numba

``get_lane(name)`` bypasses the environment for explicit requests (used
by the backend benchmark and crosscheck tests).
"""

from __future__ import annotations

import importlib
import os

ENV_VAR = "STEFAN_ETC_BACKEND"
_VALID = ("auto", "numba", "numpy")

_lanes: dict[str, object] = {}


def requested_backend() -> str:
    value = os.environ.get(ENV_VAR, "auto").strip().lower()
    if value not in _VALID:
        raise ValueError(f"{ENV_VAR} must be one of {_VALID}, got {value!r}")
    return value


def numba_available() -> bool:
    try:
        importlib.import_module("numba")
    except ImportError:
        return False
    return True


def get_lane(name: str | None = None):
    """Return the kernel module for ``name`` (or the env-selected one)."""
    if name is None:
        name = requested_backend()
    if name == "auto":
        name = "numba" if numba_available() else "numpy"
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown kernel lane {name!r}")
    if name not in _lanes:
        module = "stefan_etc._kernels_nb" if name == "numba" else "stefan_etc._kernels_np"
        _lanes[name] = importlib.import_module(module)
    return _lanes[name]


def active_backend_name() -> str:
    name = requested_backend()
    if name == "auto":
        name = "numba" if numba_available() else "numpy"
    return name
