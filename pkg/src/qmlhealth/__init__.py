"""Quantum-kernel SVM and quanvolution hybrid-network toolkit.

Everything runs on an exact dense statevector simulator; see
:mod:`qmlhealth.qsim`.  Set ``QMLHEALTH_DISABLE_NUMBA=1`` to use the pure
numpy kernels instead of the numba-compiled ones.
"""

__version__ = "0.1.0"

from ._accel import USE_NUMBA, backend_name  # noqa: E402
