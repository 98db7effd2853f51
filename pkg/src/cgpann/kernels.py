"""Activation kernels and their exact derivatives.

All kernels accept scalars or numpy arrays and evaluate elementwise.
Conventions pinned by the library:

* ``ReLU`` has derivative 0 at x = 0.
* ``ELU`` uses alpha = 1.
* ``sig`` is computed overflow-safe (via :func:`scipy.special.expit`).
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

__all__ = ["KERNEL_NAMES", "kernel_eval", "kernel_grad"]


def _tanh(x):
    return np.tanh(x)


def _tanh_grad(x):
    t = np.tanh(x)
    return 1.0 - t * t


def _sig(x):
    return expit(x)


def _sig_grad(x):
    s = expit(x)
    return s * (1.0 - s)


def _relu(x):
    return np.maximum(x, 0.0)


def _relu_grad(x):
    return np.where(np.asarray(x, dtype=float) > 0.0, 1.0, 0.0)


def _elu(x):
    x = np.asarray(x, dtype=float)
    # expm1 of the clipped argument: exact for x < 0, and the x >= 0 branch
    # never reads the (potentially overflowing) exponential.
    return np.where(x >= 0.0, x, np.expm1(np.minimum(x, 0.0)))


def _elu_grad(x):
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0.0, 1.0, np.exp(np.minimum(x, 0.0)))


# name -> (value, derivative); insertion order is the canonical kernel-id order.
_KERNELS = {
    "tanh": (_tanh, _tanh_grad),
    "sig": (_sig, _sig_grad),
    "ReLU": (_relu, _relu_grad),
    "ELU": (_elu, _elu_grad),
}

KERNEL_NAMES: tuple[str, ...] = tuple(_KERNELS)


def _lookup(kernel: str):
    try:
        return _KERNELS[kernel]
    except KeyError:
        raise ValueError(
            f"unknown kernel {kernel!r}; expected one of {KERNEL_NAMES}"
        ) from None


def kernel_eval(kernel: str, x):
    """Evaluate the named kernel elementwise on ``x``."""
    return _lookup(kernel)[0](x)


def kernel_grad(kernel: str, x):
    """Evaluate the named kernel's derivative elementwise on ``x``."""
    return _lookup(kernel)[1](x)
