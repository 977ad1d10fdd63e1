"""User selection under the full-rank system-matrix constraint.

Selecting ``L`` of ``K`` users so that their coefficient rows are linearly
independent is a basis problem on a linear matroid; Best-In-Greedy on the
weights ``1/sigma2`` is optimal there.
"""

from dataclasses import dataclass
import itertools
import math

import numpy as np

from .errors import InstanceTooLarge
from .zp_field import PrimeField, integer_rank

BRUTE_FORCE_MAX_K = 20


@dataclass(frozen=True)
class SelectionInstance:
    """Candidate users for ``L`` slots.

    Parameters
    ----------
    q_rows : array_like, shape (K, L)
        Integer coefficient rows, one per user.
    sigma2 : array_like, shape (K,)
        Effective-noise variance of each user.
    p : int or None
        Rank is taken over Z_p, or over Q when ``None``.
    """

    q_rows: np.ndarray
    sigma2: np.ndarray
    p: int | None = None

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.q_rows, dtype=np.int64))
        s = np.asarray(self.sigma2, dtype=float).reshape(-1)
        if q.shape[0] != s.size:
            raise ValueError(f"{q.shape[0]} rows but {s.size} variances")
        if not np.all(np.isfinite(s)) or np.any(s <= 0):
            raise ValueError("variances must be positive and finite")
        field = None if self.p is None else PrimeField(self.p)
        if field is not None:
            q = field.matrix(q)
        object.__setattr__(self, "_field", field)
        object.__setattr__(self, "q_rows", q)
        object.__setattr__(self, "sigma2", s)

    @property
    def K(self) -> int:
        return self.q_rows.shape[0]

    @property
    def L(self) -> int:
        return self.q_rows.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return 1.0 / self.sigma2

    def rank(self, users=None) -> int:
        rows = self.q_rows if users is None else self.q_rows[list(users)]
        if rows.shape[0] == 0:
            return 0
        if self._field is None:
            return integer_rank(rows)
        return self._field.rank(rows)

    @property
    def feasible(self) -> bool:
        return self.rank() == self.L


@dataclass(frozen=True)
class SelectionResult:
    chosen: tuple
    objective: float
    feasible: bool


def _result(inst, chosen):
    chosen = tuple(sorted(int(k) for k in chosen))
    feasible = len(chosen) == inst.L and inst.rank(chosen) == inst.L
    obj = float(max(inst.sigma2[list(chosen)])) if chosen else math.inf
    return SelectionResult(chosen, obj if feasible else math.inf, feasible)


def greedy_select(inst: SelectionInstance) -> SelectionResult:
    """Best-In-Greedy: scan users by decreasing weight, keep those that raise the rank.

    Equal weights keep their original index order. If every user has been
    scanned and the rank is still below ``L`` the result is infeasible.
    """
    order = sorted(range(inst.K), key=lambda k: (-inst.weights[k], k))
    chosen = []
    rank = 0
    for k in order:
        if rank == inst.L:
            break
        r = inst.rank(chosen + [k])
        if r > rank:
            chosen.append(k)
            rank = r
    return _result(inst, chosen)


def brute_force_select(inst: SelectionInstance, max_users: int = BRUTE_FORCE_MAX_K) -> SelectionResult:
    """Exact min-max-variance subset by enumerating all ``L``-subsets."""
    if inst.K > max_users:
        raise InstanceTooLarge(f"K={inst.K} exceeds the brute-force limit of {max_users}")
    best = None
    for subset in itertools.combinations(range(inst.K), inst.L):
        if inst.rank(subset) != inst.L:
            continue
        obj = float(max(inst.sigma2[list(subset)]))
        if best is None or obj < best[0]:
            best = (obj, subset)
    if best is None:
        return SelectionResult((), math.inf, False)
    return _result(inst, best[1])


def random_select(inst: SelectionInstance, rng: np.random.Generator) -> SelectionResult:
    """``L`` users drawn uniformly without replacement, feasible or not."""
    chosen = rng.choice(inst.K, size=min(inst.L, inst.K), replace=False)
    return _result(inst, chosen)


def linear_matroid(rows, p=None):
    """Independence oracle of the row matroid of ``rows`` over Z_p (or Q)."""
    inst = SelectionInstance(rows, np.ones(len(rows)), p)

    def independent(subset):
        return inst.rank(sorted(subset)) == len(subset)

    return independent


def matroid_check(ground: int, independent) -> bool:
    """Verify the three matroid axioms by exhaustion over ``2^ground`` subsets.

    ``independent`` is a predicate on frozensets of ``range(ground)``.
    """
    if ground > 12:
        raise InstanceTooLarge(f"ground set of {ground} is too large to exhaust")
    family = {
        frozenset(s)
        for r in range(ground + 1)
        for s in itertools.combinations(range(ground), r)
        if independent(frozenset(s))
    }
    if frozenset() not in family:
        return False
    for y in family:
        for r in range(len(y)):
            if any(frozenset(x) not in family for x in itertools.combinations(y, r)):
                return False
    for x in family:
        for y in family:
            if len(x) < len(y) and not any(x | {e} in family for e in y - x):
                return False
    return True
