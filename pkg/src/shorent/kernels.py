"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy twin.
Set ``SHORENT_KERNELS=numpy`` to force the fallback.
"""
from __future__ import annotations

import importlib
import os
from types import ModuleType

BACKENDS = ("cython", "numpy")
_MODULES = {"cython": "shorent._kernels", "numpy": "shorent._pykernels"}


def load(name: str) -> ModuleType:
    if name not in _MODULES:
        raise ValueError(f"unknown kernel backend {name!r}; expected one of {BACKENDS}")
    return importlib.import_module(_MODULES[name])


def available() -> list[str]:
    names = []
    for name in BACKENDS:
        try:
            load(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select() -> ModuleType:
    forced = os.environ.get("SHORENT_KERNELS")
    if forced:
        return load(forced)
    try:
        return load("cython")
    except ImportError:
        return load("numpy")


active = _select()
BACKEND = active.BACKEND
