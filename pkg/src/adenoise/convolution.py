"""FFT evaluation of the filter-to-residual operator and its adjoint.

For observations ``y`` on ``[-n, n]`` the operator maps the spectral
coordinates ``u = vec(F_n phi)`` of a filter ``phi`` on ``[0, n]`` to
``vec(F_n [y * phi]_0^n)``. The linear convolution is read off the first
``n+1`` entries of a length-``2n+1`` circular convolution, so every
application costs a handful of FFTs.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .signals import ComplexSignal, dft, vec, vec_adjoint

__all__ = [
    "ConvolutionOperator",
    "build_operator",
    "apply",
    "apply_adjoint",
    "operator_norm_bound",
    "norm_1_to_inf",
]


@dataclass(frozen=True)
class ConvolutionOperator:
    """Precomputed diagonal of the circulant factor plus the data vector ``b``.

    ``diag`` is the length-``2n+1`` DFT of the observation window arranged
    circularly (lag ``tau`` at index ``tau mod (2n+1)``), which is what makes
    the first ``n+1`` outputs of the circular convolution equal to the linear
    one. Its magnitudes coincide with those of the DFT of ``[y]_{-n}^n``.
    """

    n: int
    diag: np.ndarray
    b: np.ndarray
    _scale: float = field(repr=False, default=0.0)

    def __post_init__(self):
        if self.diag.size != 2 * self.n + 1 or self.b.size != 2 * (self.n + 1):
            raise InvalidArgument("inconsistent operator dimensions")
        object.__setattr__(self, "_scale", float(np.sqrt(2 * self.n + 1)))
        self.diag.setflags(write=False)
        self.b.setflags(write=False)

    @property
    def dim(self):
        return 2 * (self.n + 1)

    def matvec(self, u):
        return apply(self, u)

    def rmatvec(self, v):
        return apply_adjoint(self, v)

    # complex view; used by the solvers to avoid interleaving in inner loops
    def apply_complex(self, psi):
        n = self.n
        phi = np.fft.fft(psi, norm="ortho")  # F_n^H
        padded = np.zeros(2 * n + 1, dtype=np.complex128)
        padded[: n + 1] = phi
        circ = np.fft.fft(self.diag * np.fft.ifft(padded, norm="ortho"), norm="ortho")
        return np.fft.ifft(circ[: n + 1], norm="ortho") * self._scale

    def apply_adjoint_complex(self, chi):
        n = self.n
        t = np.fft.fft(chi, norm="ortho")
        padded = np.zeros(2 * n + 1, dtype=np.complex128)
        padded[: n + 1] = t
        circ = np.fft.fft(np.conj(self.diag) * np.fft.ifft(padded, norm="ortho"), norm="ortho")
        return np.fft.ifft(circ[: n + 1], norm="ortho") * self._scale


def build_operator(y):
    """Build the operator for observations ``y`` supported on ``[-n, n]``.

    ``y`` may be a ``ComplexSignal`` or an odd-length array indexed from ``-n``.
    """
    if not isinstance(y, ComplexSignal):
        y = ComplexSignal.two_sided(y)
    if y.support_start > 0 or y.support_start != -(y.length // 2) or y.length % 2 != 1:
        raise InvalidArgument("observations must be supported on a symmetric window [-n, n]")
    n = y.length // 2
    window = y.window(-n, n)
    diag = dft(np.roll(window, -n))
    b = vec(dft(window[n:]))
    return ConvolutionOperator(n, diag, b)


def _check(op, u):
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (op.dim,):
        raise InvalidArgument(f"expected a spectral vector of size {op.dim}, got shape {u.shape}")
    return u


def apply(op, u):
    """``A u`` for a spectral vector ``u`` of size ``2(n+1)``."""
    u = _check(op, u)
    return vec(op.apply_complex(vec_adjoint(u)))


def apply_adjoint(op, v):
    """``A^T v``; the conjugated diagonal run through the same FFT chain."""
    v = _check(op, v)
    return vec(op.apply_adjoint_complex(vec_adjoint(v)))


def operator_norm_bound(op):
    """``sqrt(2n+1) * max|diag|``, an upper bound on the spectral norm of ``A``."""
    return float(np.sqrt(2 * op.n + 1) * np.abs(op.diag).max())


def norm_1_to_inf(op):
    """Exact ``max_j ||A e_j||_inf`` over complex basis directions (``O(n^2 log n)``).

    Meant for verification; the solvers use :func:`operator_norm_bound`.
    """
    best = 0.0
    e = np.zeros(op.n + 1, dtype=np.complex128)
    for j in range(op.n + 1):
        e[j] = 1.0
        best = max(best, float(np.abs(op.apply_complex(e)).max()))
        e[j] = 0.0
    return best
