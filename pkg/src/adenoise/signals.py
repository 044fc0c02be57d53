"""Finite-support complex signals, the unitary DFT and related index maps.

Conventions
-----------
* The DFT of a length-``L`` vector uses the ``+2*pi*i*k*t/L`` exponent and the
  ``1/sqrt(L)`` factor, so it is unitary and its inverse is its adjoint.
* Spectral vectors are real arrays of even length ``2(n+1)`` holding the
  interleaved pairs ``(Re z_j, Im z_j)`` at entries ``(2j, 2j+1)``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

__all__ = [
    "ComplexSignal",
    "dft",
    "idft",
    "vec",
    "vec_adjoint",
    "restrict",
    "zero_pad",
    "scaled_lp_seminorm",
    "convolve_oracle",
    "complex_norm",
]


@dataclass(frozen=True)
class ComplexSignal:
    """Complex sequence supported on ``[support_start, support_start + length - 1]``.

    Values outside the support are implicitly zero.
    """

    values: np.ndarray
    support_start: int = 0

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128).ravel()
        if values.size == 0:
            raise InvalidArgument("a ComplexSignal needs at least one value")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "support_start", int(self.support_start))

    @property
    def length(self):
        return self.values.size

    @property
    def support_end(self):
        return self.support_start + self.length - 1

    @classmethod
    def one_sided(cls, values):
        """Signal supported on ``[0, n]``."""
        return cls(values, 0)

    @classmethod
    def two_sided(cls, values):
        """Signal supported on ``[-n, n]``; ``values`` must have odd length."""
        values = np.asarray(values)
        if values.size % 2 != 1:
            raise InvalidArgument("a two-sided signal needs an odd number of values")
        return cls(values, -(values.size // 2))

    def window(self, start, stop):
        """Values on the integer window ``[start, stop]`` (zero outside the support)."""
        if stop < start:
            raise InvalidArgument("empty window")
        out = np.zeros(stop - start + 1, dtype=np.complex128)
        lo = max(start, self.support_start)
        hi = min(stop, self.support_end)
        if lo <= hi:
            out[lo - start:hi - start + 1] = self.values[lo - self.support_start:hi - self.support_start + 1]
        return out

    def __getitem__(self, tau):
        if self.support_start <= tau <= self.support_end:
            return self.values[tau - self.support_start]
        return 0j


def _as_vector(x):
    if isinstance(x, ComplexSignal):
        x = x.values
    x = np.asarray(x, dtype=np.complex128).ravel()
    if x.size == 0:
        raise InvalidArgument("empty input")
    return x


def dft(x):
    """Unitary DFT ``[F x]_k = L^{-1/2} sum_t x_t exp(2 pi i k t / L)``.

    Exact length ``L`` (no padding); accepts an array or a ``ComplexSignal``.
    """
    return np.fft.ifft(_as_vector(x), norm="ortho")


def idft(spectrum):
    """Inverse (= adjoint) of :func:`dft`."""
    return np.fft.fft(_as_vector(spectrum), norm="ortho")


def vec(z):
    """Interleave a complex vector into ``[Re z_0, Im z_0, Re z_1, ...]``."""
    z = np.ascontiguousarray(z, dtype=np.complex128)
    return z.view(np.float64).copy()


def vec_adjoint(u):
    """Inverse of :func:`vec`; also its adjoint w.r.t. ``Re<.,.>``."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    if u.ndim != 1 or u.size % 2:
        raise InvalidArgument(f"spectral vector must be 1-D of even length, got shape {u.shape}")
    return u.view(np.complex128).copy()


def complex_norm(u, p):
    """``||vec_adjoint(u)||_p``: the norm of the complex pairs of a spectral vector."""
    mags = np.abs(vec_adjoint(u))
    if p == np.inf:
        return float(mags.max())
    return float(np.linalg.norm(mags, p))


def restrict(v, size=None):
    """Keep the first ``size`` coordinates; by default ``n+1`` of a length-``2n+1`` vector."""
    v = np.asarray(v)
    if v.ndim != 1:
        raise InvalidArgument("restrict expects a 1-D vector")
    if size is None:
        if v.size % 2 != 1:
            raise InvalidArgument(f"restrict expects odd length 2n+1, got {v.size}")
        size = v.size // 2 + 1
    if not 1 <= size <= v.size:
        raise InvalidArgument(f"cannot keep {size} of {v.size} coordinates")
    return v[:size].copy()


def zero_pad(v, target=None):
    """Append zeros up to length ``target`` (default ``2n+1`` for a length-``n+1`` input).

    ``zero_pad(., target)`` is the adjoint of ``restrict(., size=len(v))``.
    """
    v = np.asarray(v)
    if v.ndim != 1 or v.size == 0:
        raise InvalidArgument("zero_pad expects a non-empty 1-D vector")
    if target is None:
        target = 2 * v.size - 1
    if target < v.size:
        raise InvalidArgument(f"cannot pad length {v.size} to {target}")
    out = np.zeros(target, dtype=np.result_type(v.dtype, np.complex128))
    out[: v.size] = v
    return out


def scaled_lp_seminorm(s, n, p=2):
    """``((n+1)^{-1} sum_{tau=0}^n |s_tau|^p)^{1/p}``; the max over ``[0, n]`` for ``p = inf``."""
    if n < 0:
        raise InvalidArgument("n must be nonnegative")
    if p < 1:
        raise InvalidArgument("p must be >= 1")
    if isinstance(s, ComplexSignal):
        vals = np.abs(s.window(0, n))
    else:
        vals = np.abs(np.asarray(s, dtype=np.complex128).ravel())
        if vals.size != n + 1:
            raise InvalidArgument("array input must hold exactly the n+1 values on [0, n]")
    if p == np.inf:
        return float(vals.max())
    return float(np.mean(vals**p) ** (1.0 / p))


def convolve_oracle(phi, y, n):
    """Direct ``O(n^2)`` evaluation of ``[phi * y]_t`` for ``0 <= t <= n``.

    ``phi`` must live on ``[0, n]`` and ``y`` on ``[-n, n]``. Serves as the
    reference for the FFT path in :mod:`adenoise.convolution`.
    """
    if not isinstance(phi, ComplexSignal):
        phi = ComplexSignal.one_sided(phi)
    if not isinstance(y, ComplexSignal):
        y = ComplexSignal.two_sided(y)
    if phi.support_start < 0 or phi.support_end > n:
        raise InvalidArgument("filter must be supported on [0, n]")
    if y.support_start < -n or y.support_end > n:
        raise InvalidArgument("observations must be supported on [-n, n]")
    f = phi.window(0, n)
    yw = y.window(-n, n)
    out = np.zeros(n + 1, dtype=np.complex128)
    for t in range(n + 1):
        acc = 0j
        for tau in range(n + 1):
            acc += f[tau] * yw[t - tau + n]
        out[t] = acc
    return out
