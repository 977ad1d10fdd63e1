"""Integer-coefficient search: LLL reduction and Schnorr-Euchner enumeration.

Bases are given column-wise: the lattice is ``{B z : z in Z^n}``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateBasis, EmptySphere, SingularChannel
from .zp_field import PrimeField

# relative tolerance for treating two squared norms as equal
TIE_RTOL = 1e-9
ENUM_MAX_DIM = 8


def check_basis(basis, tol: float = 1e-10) -> np.ndarray:
    b = np.array(basis, dtype=float)
    if b.ndim != 2 or b.shape[0] < b.shape[1] or b.shape[1] == 0:
        raise DegenerateBasis(f"expected a tall or square basis matrix, got shape {b.shape}")
    norms = np.linalg.norm(b, axis=0)
    if np.any(norms == 0) or not np.all(np.isfinite(b)):
        raise DegenerateBasis("basis has a zero or non-finite column")
    smin = np.linalg.svd(b / norms, compute_uv=False)[-1]
    if smin <= tol:
        raise DegenerateBasis(f"basis columns are linearly dependent (sigma_min={smin:.3g})")
    return b


def _gram_schmidt(b):
    n = b.shape[1]
    bstar = np.zeros_like(b)
    mu = np.eye(n)
    bnorm2 = np.zeros(n)
    for i in range(n):
        v = b[:, i].copy()
        for j in range(i):
            mu[i, j] = b[:, i] @ bstar[:, j] / bnorm2[j]
            v -= mu[i, j] * bstar[:, j]
        bstar[:, i] = v
        bnorm2[i] = v @ v
    return mu, bnorm2


def lll_reduce(basis, delta: float = 0.75):
    """LLL-reduce the columns of ``basis``.

    Returns
    -------
    reduced : ndarray
        ``basis @ U``, size-reduced and satisfying the Lovasz condition.
    U : ndarray of int64
        Unimodular transform.
    """
    if not 0.25 < delta < 1:
        raise ValueError(f"delta must lie in (1/4, 1), got {delta}")
    g = check_basis(basis)
    n = g.shape[1]
    b = g.copy()
    u = np.eye(n, dtype=np.int64)
    mu, bnorm2 = _gram_schmidt(b)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = math.floor(mu[k, j] + 0.5)
            if q:
                b[:, k] -= q * b[:, j]
                u[:, k] -= q * u[:, j]
                mu[k, : j + 1] -= q * mu[j, : j + 1]
        if bnorm2[k] >= (delta - mu[k, k - 1] ** 2) * bnorm2[k - 1]:
            k += 1
        else:
            b[:, [k - 1, k]] = b[:, [k, k - 1]]
            u[:, [k - 1, k]] = u[:, [k, k - 1]]
            # re-derive from the exact integer transform to stop drift
            b = g @ u
            mu, bnorm2 = _gram_schmidt(b)
            k = max(k - 1, 1)
    return g @ u, u


def _enumerate(r, bound2, visit):
    """Depth-first Schnorr-Euchner enumeration of nonzero ``z`` with ``|R z|^2 <= bound2()``.

    ``r`` is upper triangular. ``visit(z, dist2)`` is called for every point
    found; ``bound2`` is re-read after each visit so the radius can shrink.
    """
    n = len(r)
    z = [0] * n

    def level(i, partial):
        rii = r[i][i]
        c = -sum(r[i][j] * z[j] for j in range(i + 1, n)) / rii
        x = math.floor(c + 0.5)
        step = 1 if c >= x else -1
        k = 0
        while True:
            # zigzag around the centre: x, x+s, x-s, x+2s, x-2s, ...
            zi = x + step * ((k + 1) // 2) * (1 if k % 2 else -1)
            d = partial + (rii * (zi - c)) ** 2
            if d > bound2():
                return
            z[i] = zi
            if i == 0:
                if any(z):
                    visit(tuple(z), d)
            else:
                level(i - 1, d)
            k += 1

    level(n - 1, 0.0)


def _canonical(z):
    """Sign-normalize so the first nonzero entry is positive."""
    z = np.asarray(z, dtype=np.int64)
    nz = np.flatnonzero(z)
    return -z if nz.size and z[nz[0]] < 0 else z


def _pick(candidates):
    """Shortest candidate; ties broken by the lexicographically smallest canonical vector."""
    best = min(d for d, _ in candidates)
    tied = [_canonical(z) for d, z in candidates if d <= best * (1 + TIE_RTOL)]
    return min(tied, key=lambda v: tuple(v.tolist()))


def shortest_vector_enumerate(basis, radius=None, accept=None, delta: float = 0.75):
    """Nonzero integer ``z`` minimizing ``|basis @ z|`` (optionally subject to ``accept(z)``).

    The basis is LLL-reduced first and the search runs on the reduced basis;
    the returned coordinates refer to the original ``basis``.

    Parameters
    ----------
    radius : float, optional
        Search radius. Defaults to the length of the shortest acceptable
        LLL column.
    accept : callable, optional
        Predicate on coordinate vectors in the original basis.

    Raises
    ------
    EmptySphere
        If no acceptable nonzero point lies within ``radius``.
    """
    reduced, u = lll_reduce(basis, delta)
    accept = accept or (lambda z: True)
    if radius is None:
        ok = [reduced[:, i] @ reduced[:, i] for i in range(u.shape[1]) if accept(u[:, i])]
        if not ok:
            raise EmptySphere("no acceptable LLL column to seed the radius")
        radius2 = min(ok)
    else:
        radius2 = float(radius) ** 2
    _, r = np.linalg.qr(reduced)
    r = r.tolist()
    state = {"best": math.inf}
    candidates = []

    def bound2():
        return min(radius2, state["best"]) * (1 + TIE_RTOL)

    def visit(zr, d):
        z = u @ np.array(zr, dtype=np.int64)
        if not accept(z):
            return
        if d < state["best"]:
            state["best"] = d
        candidates.append((d, z))

    _enumerate(r, bound2, visit)
    if not candidates:
        raise EmptySphere(f"no acceptable nonzero lattice point within radius {math.sqrt(radius2):.6g}")
    return _pick(candidates)


def _nonzero_mod(p):
    if p is None:
        return lambda z: True
    return lambda z: bool(np.any(np.mod(z, p)))


def best_coeff_qcof(h, snr: float, p=None, refine=None, delta: float = 0.75) -> np.ndarray:
    """Integer vector minimizing the effective-noise variance for channel ``h``.

    Minimizes ``a^T (I/snr + h h^T)^-1 a`` over nonzero integer ``a`` (with
    ``[a] mod p != 0`` when ``p`` is given). This is a shortest-vector problem
    for the Gram matrix ``G = snr (I - snr h h^T / (1 + snr |h|^2))``.

    Coordinates where ``h`` is zero are left at zero: each adds
    ``snr a_j^2`` and never helps, since any unit vector on the support of
    ``h`` already costs less than ``snr``.

    Parameters
    ----------
    refine : bool, optional
        Run enumeration after LLL. Defaults to on for supports of at most
        8 coordinates.
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    support = np.flatnonzero(h)
    if support.size == 0:
        raise ValueError("channel vector must be nonzero")
    hs = h[support]
    m = hs.size
    gram = snr * (np.eye(m) - snr * np.outer(hs, hs) / (1.0 + snr * (hs @ hs)))
    basis = np.linalg.cholesky(gram).T
    accept_full = _nonzero_mod(p)
    if refine is None:
        refine = m <= ENUM_MAX_DIM
    if refine:
        a_s = shortest_vector_enumerate(basis, accept=accept_full, delta=delta)
    else:
        reduced, u = lll_reduce(basis, delta)
        cands = [(reduced[:, i] @ reduced[:, i], u[:, i]) for i in range(m) if accept_full(u[:, i])]
        a_s = _pick(cands)
    a = np.zeros(h.size, dtype=np.int64)
    a[support] = a_s
    return a


@dataclass(frozen=True)
class IntegerCoeffMatrix:
    """Integer coefficient matrix ``A`` (rows ``a_l``) and ``Q = [A] mod p``."""

    a: np.ndarray
    q: np.ndarray
    p: int
    full_rank: bool

    @classmethod
    def from_rows(cls, rows, p: int) -> "IntegerCoeffMatrix":
        a = np.array(rows, dtype=np.int64)
        field = PrimeField(p)
        q = field.matrix(a)
        return cls(a, q, p, field.rank(q) == min(a.shape))


def ifbf_objective(h_matrix, a) -> float:
    """``max_l |H^-1 a_l|^2`` over the rows ``a_l`` of ``A``."""
    sol = np.linalg.solve(np.asarray(h_matrix, dtype=float), np.asarray(a, dtype=float).T)
    return float(np.max(np.sum(sol**2, axis=0)))


def ifbf_coeffs(h_matrix, p: int, delta: float = 0.75) -> IntegerCoeffMatrix:
    """Integer-forcing coefficients from an LLL-reduced basis of the lattice ``H^-1 Z^L``.

    The rows of ``A`` are the columns of the unimodular transform, so the
    vectors ``H^-1 a_l`` are the reduced basis columns. Because ``det U = +-1``
    is a unit modulo every prime, ``Q`` is always full rank over Z_p.
    """
    hm = np.asarray(h_matrix, dtype=float)
    if hm.ndim != 2 or hm.shape[0] != hm.shape[1]:
        raise SingularChannel(f"channel matrix must be square, got shape {hm.shape}")
    try:
        check_basis(hm)
    except DegenerateBasis as exc:
        raise SingularChannel(str(exc)) from None
    _, u = lll_reduce(np.linalg.inv(hm), delta)
    return IntegerCoeffMatrix.from_rows(u.T, p)
