"""Exact arithmetic and linear algebra over the prime field Z_p.

Field elements are represented by their natural representatives
``0, 1, ..., p-1`` stored in ``int64`` numpy arrays. Matrices are plain 2-D
arrays; :meth:`PrimeField.matrix` reduces arbitrary integer input into that
form.

Primes are restricted to ``p < 2**31`` so that a single product of two
reduced entries fits in a signed 64-bit integer. Matrix products accumulate
in Python integers whenever an ``int64`` dot product could overflow.
"""

from fractions import Fraction

import numpy as np

from .errors import DimensionMismatch, SingularMatrix

MAX_PRIME = 2**31


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    bases = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for small in bases:
        if n % small == 0:
            return n == small
    # deterministic Miller-Rabin for n < 3.3e24
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for base in bases:
        x = pow(base, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class PrimeField:
    """The prime field Z_p.

    Parameters
    ----------
    p : int
        Prime modulus, ``2 <= p < 2**31``.

    Examples
    --------
    >>> F = PrimeField(5)
    >>> F.natural_map(-1)
    4
    >>> F.invert([[2, 0], [0, 3]]).tolist()
    [[3, 0], [0, 2]]
    """

    __slots__ = ("_p",)

    def __init__(self, p: int):
        if isinstance(p, bool) or int(p) != p:
            raise ValueError(f"modulus must be an integer, got {p!r}")
        p = int(p)
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        if p >= MAX_PRIME:
            raise ValueError(f"p={p} exceeds the supported word size (p < 2**31)")
        self._p = p

    @property
    def p(self) -> int:
        return self._p

    def __repr__(self):
        return f"PrimeField({self._p})"

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other._p == self._p

    def __hash__(self):
        return hash(("PrimeField", self._p))

    # -- elements ---------------------------------------------------------

    def natural_map(self, z):
        """Map integers to Z_p (``[z] mod p`` as a representative in ``[0, p)``).

        Accepts a scalar or any integer array-like; scalars come back as
        Python ints.
        """
        if np.isscalar(z):
            return int(z) % self._p
        return np.mod(np.asarray(z, dtype=np.int64), self._p)

    def add(self, a, b):
        if np.isscalar(a) and np.isscalar(b):
            return (int(a) + int(b)) % self._p
        return np.mod(np.add(a, b, dtype=np.int64), self._p)

    def neg(self, a):
        if np.isscalar(a):
            return -int(a) % self._p
        return np.mod(-np.asarray(a, dtype=np.int64), self._p)

    def mul(self, a, b):
        if np.isscalar(a) and np.isscalar(b):
            return int(a) * int(b) % self._p
        a = self.natural_map(a)
        b = self.natural_map(b)
        return np.mod(a * b, self._p)

    def inverse(self, a: int) -> int:
        a = int(a) % self._p
        if a == 0:
            raise ZeroDivisionError("0 has no inverse in Z_p")
        return pow(a, -1, self._p)

    # -- matrices ---------------------------------------------------------

    def matrix(self, rows) -> np.ndarray:
        """Reduce an integer array-like to a 2-D matrix over Z_p."""
        m = np.asarray(rows)
        if m.dtype.kind not in "iub":
            if m.dtype.kind == "f" and np.all(np.mod(m, 1) == 0):
                m = m.astype(np.int64)
            elif m.dtype == object:
                m = np.array([[int(v) % self._p for v in row] for row in m], dtype=np.int64)
            else:
                raise TypeError(f"matrix entries must be integers, got dtype {m.dtype}")
        if m.ndim == 1:
            m = m.reshape(1, -1)
        if m.ndim != 2:
            raise DimensionMismatch(f"expected a 2-D matrix, got shape {m.shape}")
        return np.mod(m.astype(np.int64), self._p)

    def _echelon(self, m: np.ndarray):
        """Reduced row echelon form; returns (rref, pivot_columns)."""
        a = m.copy()
        rows, cols = a.shape
        p = self._p
        pivots = []
        r = 0
        for c in range(cols):
            if r == rows:
                break
            nz = np.flatnonzero(a[r:, c])
            if nz.size == 0:
                continue
            piv = r + int(nz[0])
            if piv != r:
                a[[r, piv]] = a[[piv, r]]
            a[r] = a[r] * pow(int(a[r, c]), -1, p) % p
            others = np.flatnonzero(a[:, c])
            others = others[others != r]
            if others.size:
                f = a[others, c][:, None]
                a[others] = (a[others] - f * a[r]) % p
            pivots.append(c)
            r += 1
        return a, pivots

    def rank(self, m) -> int:
        """Row rank over Z_p by Gaussian elimination."""
        m = self.matrix(m)
        if m.size == 0:
            return 0
        return len(self._echelon(m)[1])

    def invert(self, m) -> np.ndarray:
        """Inverse of a square matrix over Z_p.

        Raises
        ------
        SingularMatrix
            If the rank is below the dimension.
        """
        m = self.matrix(m)
        n, k = m.shape
        if n != k:
            raise DimensionMismatch(f"cannot invert a non-square {n}x{k} matrix")
        aug = np.concatenate([m, np.eye(n, dtype=np.int64)], axis=1)
        rref, pivots = self._echelon(aug)
        if pivots[:n] != list(range(n)):
            raise SingularMatrix(f"matrix has rank {sum(c < n for c in pivots)} < {n} over Z_{self._p}")
        return rref[:, n:].copy()

    def matmul(self, a, b) -> np.ndarray:
        """Exact product over Z_p. 1-D right operands are treated as vectors."""
        a = np.asarray(a)
        b = np.asarray(b)
        vec = b.ndim == 1
        am = self.matrix(a)
        bm = self.matrix(b.reshape(-1, 1) if vec else b)
        if am.shape[1] != bm.shape[0]:
            raise DimensionMismatch(f"cannot multiply {am.shape} by {bm.shape}")
        inner = am.shape[1]
        if inner * (self._p - 1) ** 2 < 2**63:
            out = (am @ bm) % self._p
        else:
            out = np.mod(am.astype(object) @ bm.astype(object), self._p).astype(np.int64)
        return out[:, 0] if vec else out

    def matvec(self, a, v) -> np.ndarray:
        return self.matmul(a, np.asarray(v).reshape(-1))


def integer_rank(m) -> int:
    """Exact rank of an integer (or rational) matrix over Q.

    Used where the field is "p -> infinity", i.e. the rank of A over R.
    """
    rows = [[Fraction(int(v)) for v in row] for row in np.atleast_2d(np.asarray(m))]
    if not rows or not rows[0]:
        return 0
    n_rows, n_cols = len(rows), len(rows[0])
    r = 0
    for c in range(n_cols):
        piv = next((i for i in range(r, n_rows) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(r + 1, n_rows):
            if rows[i][c] != 0:
                f = rows[i][c] / rows[r][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        r += 1
        if r == n_rows:
            break
    return r
