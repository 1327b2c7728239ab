"""Backend selection for the hot kernels.

The compiled extension (bubbletower._accel, Cython) is preferred; the
pure-NumPy module bubbletower._reference is the drop-in fallback. Setting
the environment variable BUBBLETOWER_PURE=1 forces the fallback, which is
mainly useful for benchmarking the two side by side.
"""
import os

if os.environ.get("BUBBLETOWER_PURE", "0") == "1":
    from . import _reference as _impl
else:
    try:
        from . import _accel as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _reference as _impl

BACKEND = _impl.BACKEND
HAVE_COMPILED = BACKEND == "compiled"

heat_kernel_vals = _impl.heat_kernel_vals
grad_kernel_vals = _impl.grad_kernel_vals
thomas_solve = _impl.thomas_solve
