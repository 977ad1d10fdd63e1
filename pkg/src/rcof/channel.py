"""Channel-matrix generation.

All randomness flows through ``numpy.random.Generator`` objects; use
:func:`trial_rng` to get the generator for one Monte Carlo trial.
"""

from dataclasses import dataclass

import numpy as np


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based generator reproducible from ``(seed, trial)`` alone."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(trial,))))


@dataclass(frozen=True)
class SoftHandoffParams:
    """Soft-Handoff model parameters.

    ``gamma`` is either a fixed level in [0, 1] or a ``(low, high)`` range
    drawn uniformly. With ``per_entry`` every subdiagonal entry gets its own
    draw; otherwise one draw is shared by the whole matrix.
    """

    L: int
    gamma: float | tuple = 0.7
    per_entry: bool = True

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be at least 1")
        lo, hi = self.gamma_range
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")

    @property
    def gamma_range(self):
        if np.isscalar(self.gamma):
            return float(self.gamma), float(self.gamma)
        lo, hi = self.gamma
        return float(lo), float(hi)

    def draw_gamma(self, rng):
        lo, hi = self.gamma_range
        n = max(self.L - 1, 0)
        if lo == hi:
            return np.full(n, lo)
        if self.per_entry:
            return rng.uniform(lo, hi, size=n)
        return np.full(n, rng.uniform(lo, hi))


def soft_handoff_matrix(params: SoftHandoffParams, rng=None) -> np.ndarray:
    """Lower-bidiagonal complex matrix: UT l hears AT l and ``gamma`` times AT l-1.

    The first UT has no interfering neighbour. Unit diagonal makes the
    determinant 1 for every draw.
    """
    if rng is None and params.gamma_range[0] != params.gamma_range[1]:
        raise ValueError("a random gamma range needs a generator")
    g = params.draw_gamma(rng)
    h = np.eye(params.L, dtype=complex)
    h[np.arange(1, params.L), np.arange(params.L - 1)] = g
    return h


def rayleigh_matrix(K: int, L: int, rng: np.random.Generator) -> np.ndarray:
    """``K x L`` real matrix with i.i.d. N(0, 1) entries."""
    if K < 1 or L < 1:
        raise ValueError("K and L must be positive")
    return rng.standard_normal((K, L))


def complex_to_real(hc) -> np.ndarray:
    """Real ``2K x 2L`` form ``[[Re, -Im], [Im, Re]]`` of a complex ``K x L`` matrix.

    Rows ``0..K-1`` are the in-phase observations and rows ``K..2K-1`` the
    quadrature ones; a complex symbol carries the sum of both real rates.
    """
    hc = np.atleast_2d(np.asarray(hc, dtype=complex))
    re, im = hc.real, hc.imag
    return np.block([[re, -im], [im, re]])
