"""Effective-noise statistics for the scalar compute-and-forward receiver.

The receiver scales its observation by ``alpha`` and subtracts the integer
combination ``a^T x``; what is left is the effective noise ``eps``. Its
variance (with the MMSE ``alpha``) is ``a^T (I/snr + h h^T)^{-1} a``. For
rate computations ``eps`` is modelled as a zero-mean Gaussian with that
variance, quantized to the coding lattice and folded onto Z_p.
"""

import math

import numpy as np
from scipy.special import ndtr

from .scalar_lattice import NestedLatticePair

PMF_TAIL = 1e-15


def _vectors(h, a):
    h = np.atleast_1d(np.asarray(h, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if h.shape != a.shape:
        raise ValueError(f"h and a must have the same length, got {h.shape} and {a.shape}")
    return h, a


def effective_variance(h, a, snr: float) -> float:
    """Effective-noise variance ``a^T (snr^-1 I + h h^T)^-1 a``.

    Evaluated with the Sherman-Morrison identity
    ``snr * (|a|^2 - snr (h.a)^2 / (1 + snr |h|^2))``, which avoids forming
    the inverse.

    Parameters
    ----------
    h : array_like
        Real channel coefficients seen by the receiver.
    a : array_like
        Integer coefficient vector, not all zero.
    snr : float
        Per-transmitter power with unit-variance receiver noise.
    """
    if not snr > 0:
        raise ValueError(f"snr must be positive, got {snr}")
    h, a = _vectors(h, a)
    if not np.any(a):
        raise ValueError("coefficient vector must be nonzero")
    ha = float(h @ a)
    hh = float(h @ h)
    val = snr * (float(a @ a) - snr * ha * ha / (1.0 + snr * hh))
    # cancellation floor: the quadratic form is bounded below by |a|^2 / (1/snr + |h|^2)
    return max(val, float(a @ a) / (1.0 / snr + hh))


def mmse_alpha(h, a, snr: float) -> float:
    """Scaling minimizing ``E|alpha y - a^T x|^2``: ``snr h.a / (1 + snr |h|^2)``."""
    h, a = _vectors(h, a)
    return snr * float(h @ a) / (1.0 + snr * float(h @ h))


def direct_variance(h, a, snr: float, alpha: float) -> float:
    """``E|alpha y - a^T x|^2`` for an arbitrary scaling ``alpha``."""
    h, a = _vectors(h, a)
    return alpha**2 + snr * float((alpha * h - a) @ (alpha * h - a))


def discrete_noise_pmf(sigma2: float, pair: NestedLatticePair) -> np.ndarray:
    """Distribution over Z_p of ``m^-1([Q_{Lambda_c}(eps)] mod Lambda_s)``, ``eps ~ N(0, sigma2)``.

    Entry ``u`` collects the Gaussian mass of every coding-lattice cell
    ``[kappa (n - 1/2), kappa (n + 1/2))`` with ``n = u (mod p)``. Cells are
    summed out to ``ceil(8 sigma / (kappa p)) + 2`` shaping periods each way,
    and further while the outermost cells still carry more than ``1e-15``.
    Once ``sigma >= 2 kappa p`` the law is uniform to double precision and is
    returned as such.
    """
    if not sigma2 > 0 or not math.isfinite(sigma2):
        raise ValueError(f"sigma2 must be positive and finite, got {sigma2}")
    p, kappa = pair.p, pair.kappa
    sigma = math.sqrt(sigma2)
    if sigma >= 2.0 * kappa * p:
        # Fourier coefficients of the folded law are below exp(-8 pi^2) ~ 1e-34
        return np.full(p, 1.0 / p)
    periods = math.ceil(8.0 * sigma / (kappa * p)) + 2
    while True:
        n = np.arange(-(periods + 1) * p, (periods + 1) * p + 1)
        lo = (n - 0.5) * kappa / sigma
        hi = (n + 0.5) * kappa / sigma
        # upper-tail differences for n > 0 keep precision far from the mean
        mass = np.where(n > 0, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))
        if mass[0] < PMF_TAIL and mass[-1] < PMF_TAIL:
            break
        periods *= 2
    pmf = np.bincount(np.mod(n, p), weights=mass, minlength=p)
    return pmf / pmf.sum()


def discrete_entropy(pmf) -> float:
    """Shannon entropy in bits, with ``0 log 0 = 0``."""
    pmf = np.asarray(pmf, dtype=float)
    nz = pmf[pmf > 0]
    return float(-(nz * np.log2(nz)).sum())


def noise_entropy(sigma2: float, pair: NestedLatticePair) -> float:
    """``H(z~)`` for Gaussian effective noise of variance ``sigma2``."""
    return discrete_entropy(discrete_noise_pmf(sigma2, pair))


def entropy_deficit(sigma2: float, pair: NestedLatticePair) -> float:
    """``log2 p - H(z~)``, computed as the divergence from the uniform law.

    Summing ``P log2(p P)`` avoids the cancellation in ``log2 p - H`` when
    the noise is nearly uniform, so the result stays monotone in ``sigma2``
    down to rates of order 1e-16.
    """
    pmf = discrete_noise_pmf(sigma2, pair)
    nz = pmf[pmf > 0]
    return max(0.0, float((nz * np.log2(pair.p * nz)).sum()))
