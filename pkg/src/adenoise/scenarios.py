"""Synthetic harmonic test signals, noise and loss metrics.

Signals are evaluated on the whole observation window ``[-n, n]`` and scaled
so that ``||[x]_0^n||_2 = 1``.
"""
import math
from dataclasses import dataclass

import numpy as np

from .convolution import build_operator
from .errors import InvalidArgument
from .signals import ComplexSignal, dft, idft, scaled_lp_seminorm

__all__ = [
    "Scenario",
    "SCENARIO_KINDS",
    "trial_rng",
    "generate_ransin",
    "generate_cohsin",
    "generate_modsin",
    "add_noise",
    "sigma_from_snr",
    "metrics",
]

SCENARIO_KINDS = ("ransin", "cohsin", "modsin")


def trial_rng(seed, trial):
    """PCG64 stream for one trial; the trial index is mixed into the seed sequence."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(trial)])))


def _normalized(values, n):
    scale = float(np.linalg.norm(values[n:]))
    if scale == 0.0:
        raise InvalidArgument("generated signal vanishes on [0, n]")
    return ComplexSignal.two_sided(values / scale)


def _grid(n):
    if n < 0:
        raise InvalidArgument("n must be nonnegative")
    return np.arange(-n, n + 1, dtype=np.float64)


def generate_ransin(s, n, rng):
    """``sum_k a_k exp(i w_k t)`` with ``w_k ~ U[0, 2pi)``, ``a_k ~ U[0, 1]``."""
    if s < 1:
        raise InvalidArgument("s must be >= 1")
    t = _grid(n)
    freqs = rng.uniform(0.0, 2.0 * math.pi, size=s)
    amps = rng.uniform(0.0, 1.0, size=s)
    x = (amps[None, :] * np.exp(1j * np.outer(t, freqs))).sum(axis=1)
    return _normalized(x, n)


def generate_cohsin(s, n, rng):
    """``s`` equal-amplitude pairs of frequencies ``(w_k, w_k + 0.2 pi / n)``."""
    if s < 1:
        raise InvalidArgument("s must be >= 1")
    if n < 1:
        raise InvalidArgument("cohsin needs n >= 1")
    t = _grid(n)
    freqs = rng.uniform(0.0, 2.0 * math.pi, size=s)
    amps = rng.uniform(0.0, 1.0, size=s)
    gap = 0.2 * math.pi / n
    pair = np.exp(1j * np.outer(t, freqs)) + np.exp(1j * np.outer(t, freqs + gap))
    return _normalized((amps[None, :] * pair).sum(axis=1), n)


def generate_modsin(s, m, n, rng):
    """``sum_k p_k(t/n) exp(i w_k t)`` with degree-``m`` polynomials ``p_k``.

    Coefficients are standard complex Gaussian; the argument is rescaled to
    ``t/n`` (``t`` when ``n = 0``) so that high powers stay bounded.
    """
    if s < 1:
        raise InvalidArgument("s must be >= 1")
    if m < 0:
        raise InvalidArgument("m must be >= 0")
    t = _grid(n)
    freqs = rng.uniform(0.0, 2.0 * math.pi, size=s)
    coef = (rng.standard_normal((s, m + 1)) + 1j * rng.standard_normal((s, m + 1))) / math.sqrt(2.0)
    arg = t / n if n > 0 else t
    powers = arg[:, None] ** np.arange(m + 1)[None, :]
    polys = powers @ coef.T
    return _normalized((polys * np.exp(1j * np.outer(t, freqs))).sum(axis=1), n)


def add_noise(x, sigma, rng):
    """``x + sigma * zeta``; real and imaginary parts of ``zeta`` are independent N(0, 1)."""
    if not sigma >= 0:
        raise InvalidArgument("sigma must be nonnegative")
    if not isinstance(x, ComplexSignal):
        x = ComplexSignal.two_sided(x)
    shape = x.values.shape
    zeta = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return ComplexSignal(x.values + sigma * zeta, x.support_start)


def sigma_from_snr(snr, n):
    """Noise level with ``SNR = 1 / (sigma sqrt(n))``."""
    if not snr > 0 or n < 1:
        raise InvalidArgument("need snr > 0 and n >= 1")
    return 1.0 / (snr * math.sqrt(n))


def metrics(x, phi, y, n):
    """Losses of the estimate ``[phi * y]_0^n`` of ``x`` on ``[0, n]``.

    Returns ``{"l2_loss": ||x - phi*y||_{n,2}, "linf_fourier_loss": ||F_n[x - phi*y]||_inf}``.
    ``phi`` may be a time-domain ``ComplexSignal`` on ``[0, n]`` or an array of its values.
    """
    if not isinstance(phi, ComplexSignal):
        phi = ComplexSignal.one_sided(phi)
    if not isinstance(x, ComplexSignal):
        x = ComplexSignal.two_sided(x)
    op = build_operator(y)
    if op.n != n:
        raise InvalidArgument("observations must live on [-n, n]")
    estimate = idft(op.apply_complex(dft(phi.window(0, n))))
    err = x.window(0, n) - estimate
    return {
        "l2_loss": scaled_lp_seminorm(err, n, 2),
        "linf_fourier_loss": float(np.abs(dft(err)).max()),
    }


@dataclass(frozen=True)
class Scenario:
    """A signal family at a given size and SNR."""

    kind: str
    s: int
    n: int = 100
    snr: float = 16.0
    m: int = 0

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise InvalidArgument(f"scenario kind must be one of {', '.join(SCENARIO_KINDS)}")
        if self.s < 1 or self.m < 0 or self.n < 1 or not self.snr > 0:
            raise InvalidArgument("need s >= 1, m >= 0, n >= 1 and snr > 0")

    @property
    def subspace_dim(self):
        if self.kind == "ransin":
            return self.s
        if self.kind == "cohsin":
            return 2 * self.s
        return 2 * self.s * (self.m + 1)

    @property
    def sigma(self):
        return sigma_from_snr(self.snr, self.n)

    @property
    def name(self):
        base = f"{self.kind}-{self.s}" + (f"-{self.m}" if self.kind == "modsin" else "")
        return f"{base}@snr{self.snr:g}"

    def signal(self, rng):
        if self.kind == "ransin":
            return generate_ransin(self.s, self.n, rng)
        if self.kind == "cohsin":
            return generate_cohsin(self.s, self.n, rng)
        return generate_modsin(self.s, self.m, self.n, rng)

    def draw(self, seed, trial):
        """``(x, y)`` for one trial; signal then noise from the same stream."""
        rng = trial_rng(seed, trial)
        x = self.signal(rng)
        return x, add_noise(x, self.sigma, rng)
