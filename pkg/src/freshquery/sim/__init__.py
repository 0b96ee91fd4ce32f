"""Simulation kernel backend selection: compiled extension if built, else pure Python."""

try:
    from . import _simkernel as kernel

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build environment
    from . import _simkernel_py as kernel

    BACKEND = "python"

run_cycles = kernel.run_cycles

__all__ = ["run_cycles", "kernel", "BACKEND"]
