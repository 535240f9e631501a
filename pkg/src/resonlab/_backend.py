"""Select the compiled kernels when available, else the numpy fallback."""
import os

from . import _kernels_py

BACKEND = "python"
impl = _kernels_py

if os.environ.get("RESONLAB_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        impl = _kernels_py

helmholtz3d_block_row = impl.helmholtz3d_block_row
helmholtz3d_dense = impl.helmholtz3d_dense
mode_step = impl.mode_step
line_step = impl.line_step
