"""Kernel backend selection.

The compiled extension is used when importable. Set
``COCOA_DECODING_BACKEND=python`` to force the numpy fallback, or
``=compiled`` to fail loudly when the extension is missing.
"""
from __future__ import annotations

import importlib
import os

from . import _pykernels

_MODULES = {"compiled": "cocoa_decoding._ckernels", "python": "cocoa_decoding._pykernels"}


def load(name: str):
    """Return the kernel module for backend ``name``."""
    if name not in _MODULES:
        raise ValueError(f"unknown backend {name!r}; expected one of {sorted(_MODULES)}")
    return importlib.import_module(_MODULES[name])


def available() -> list[str]:
    names = []
    for name in _MODULES:
        try:
            load(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    choice = os.environ.get("COCOA_DECODING_BACKEND", "auto").lower()
    if choice == "auto":
        try:
            return "compiled", load("compiled")
        except ImportError:
            return "python", _pykernels
    return choice, load(choice)


BACKEND, kernels = _select()
