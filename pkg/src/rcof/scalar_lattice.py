"""One-dimensional nested lattice pair and the scalar modulation chain.

The coding lattice is ``kappa * Z`` and the shaping lattice ``kappa * p * Z``.
All quantizers round half up (toward +inf), so every Voronoi cell is the
half-open interval ``[-step/2, step/2)``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import NotInConstellation
from .zp_field import is_prime


def quantize(x, step):
    """Nearest point of ``step * Z``; ties go up."""
    return step * np.floor(np.asarray(x, dtype=float) / step + 0.5)


def mod_lattice(x, step):
    """``[x] mod step*Z``, a value in ``[-step/2, step/2)``."""
    if step <= 0:
        raise ValueError("lattice step must be positive")
    x = np.asarray(x, dtype=float)
    out = x - quantize(x, step)
    # x/step + 0.5 can round up across an integer; keep the half-open range
    out = np.where(out >= step / 2, out - step, out)
    out = np.where(out < -step / 2, out + step, out)
    return out if out.ndim else float(out)


def dither_generator(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator for one dither stream.

    Transmitter and receiver rebuild the same stream from ``(seed, stream)``
    without exchanging anything.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0xD17, stream))))


@dataclass(frozen=True)
class NestedLatticePair:
    """Scalar lattices ``Lambda_c = kappa Z`` and ``Lambda_s = kappa p Z``.

    Build it from the per-symbol power with :meth:`from_snr`; the power is
    then always recovered as ``kappa**2 p**2 / 12``.
    """

    p: int
    kappa: float

    def __post_init__(self):
        if not is_prime(int(self.p)):
            raise ValueError(f"{self.p} is not prime")
        if not self.kappa > 0 or not math.isfinite(self.kappa):
            raise ValueError(f"kappa must be positive and finite, got {self.kappa}")

    @classmethod
    def from_snr(cls, p: int, snr: float) -> "NestedLatticePair":
        if not snr > 0:
            raise ValueError(f"snr must be positive, got {snr}")
        return cls(int(p), math.sqrt(12.0 * snr) / p)

    @property
    def snr(self) -> float:
        """Second moment of a uniform channel input."""
        return self.kappa**2 * self.p**2 / 12.0

    @property
    def shaping_step(self) -> float:
        return self.kappa * self.p

    def constellation(self) -> np.ndarray:
        """The ``p`` points of ``Lambda_c`` inside the shaping Voronoi interval, ascending."""
        return np.sort(self.modulate(np.arange(self.p)))

    def modulate(self, u):
        """``m(u) = [kappa g(u)] mod Lambda_s``."""
        n = np.mod(np.asarray(u, dtype=np.int64), self.p)
        # centred representative in [-p/2, p/2), computed in integers
        n = np.where(n >= (self.p + 1) // 2, n - self.p, n)
        out = self.kappa * n
        return out if np.ndim(out) else float(out)

    def demodulate(self, v, tol: float = 1e-9):
        """Inverse of :meth:`modulate`.

        Raises
        ------
        NotInConstellation
            If some ``v`` is farther than ``tol * kappa`` from a constellation point.
        """
        t = np.asarray(v, dtype=float) / self.kappa
        n = np.rint(t)
        half = self.p / 2
        bad = (np.abs(t - n) > tol) | (n < -half) | (n >= half)
        if np.any(bad):
            raise NotInConstellation(f"{np.asarray(v)[bad] if np.ndim(v) else v} is not a constellation point")
        out = np.mod(n.astype(np.int64), self.p)
        return out if np.ndim(out) else int(out)

    def channel_input(self, c, d):
        """``x = [m(c) + d] mod Lambda_s``."""
        return mod_lattice(np.asarray(self.modulate(c)) + np.asarray(d, dtype=float), self.shaping_step)

    def dither(self, shape, seed: int, stream: int = 0) -> np.ndarray:
        """I.i.d. Uniform([-kappa p/2, kappa p/2)) dither for one stream."""
        rng = dither_generator(seed, stream)
        return self.shaping_step * (rng.random(shape) - 0.5)

    def lattice_index(self, x):
        """Integer ``n`` with ``Q_{Lambda_c}(x) = kappa n``."""
        return np.floor(np.asarray(x, dtype=float) / self.kappa + 0.5).astype(np.int64)

    def receiver_quantize(self, y, alpha, dither_combo):
        """``u = m^-1([Q_{Lambda_c}(alpha y - a^T d)] mod Lambda_s)``.

        ``dither_combo`` is ``a^T d`` for the receiver's integer coefficients.
        Working with lattice indices makes the ``mod Lambda_s`` followed by
        demodulation an exact integer reduction.
        """
        s = alpha * np.asarray(y, dtype=float) - np.asarray(dither_combo, dtype=float)
        out = np.mod(self.lattice_index(s), self.p)
        return out if np.ndim(out) else int(out)

    def discrete_noise(self, eps):
        """``m^-1([Q_{Lambda_c}(eps)] mod Lambda_s)`` for effective-noise samples."""
        out = np.mod(self.lattice_index(eps), self.p)
        return out if np.ndim(out) else int(out)
