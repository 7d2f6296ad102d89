"""Adiabatic charge transport in slowly deformed periodic crystals.

Plane-wave band structure, time-momentum Berry curvature, quantized
Thouless pumping, super-adiabatic projectors, fiber dynamics, and
semiclassical wavepacket transport, all on Bloch-Floquet fibers.

Submodules are imported lazily so the command line entry point can
configure the BLAS thread pool before numpy loads.
"""

import importlib

__version__ = "0.1.0"

_SUBMODULES = ("bands", "cli", "dynamics", "errors", "geometry", "model",
               "semiclassics", "superadiabatic", "symmetry")


def __getattr__(name):
    if name in _SUBMODULES:
        return importlib.import_module("." + name, __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(_SUBMODULES))
