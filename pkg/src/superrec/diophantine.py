"""Simultaneous return times: n with every n*theta_j close to an integer.

For an equal-modulus diagonal operator with eigenvalues R exp(2 pi i theta_j),
such an n makes R^-n T^n x close to x.  Two searches are provided: an
exhaustive scan (minimal n, pigeonhole-bounded) and an exact-integer LLL
candidate generator whose output is always re-validated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .exceptions import RejectedInputError

DEFAULT_M = 2 ** 32
SCAN_CHUNK = 1 << 16


@dataclass(frozen=True)
class AngleSystem:
    """Angles theta_j in [0, 1) (eigenvalue arguments divided by 2 pi) and a resolution."""

    thetas: tuple
    delta: float

    def __post_init__(self):
        th = tuple(float(t) for t in self.thetas)
        if any(not (0.0 <= t < 1.0) or not math.isfinite(t) for t in th):
            raise RejectedInputError(f"thetas must lie in [0, 1): {th}")
        if not (0.0 < self.delta < 0.5):
            raise RejectedInputError(f"delta must be in (0, 0.5), got {self.delta}")
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "delta", float(self.delta))

    @classmethod
    def from_angles(cls, thetas, delta):
        """Build from arbitrary reals, reducing each modulo 1."""
        return cls(tuple(float(Fraction(t) % 1) for t in thetas), delta)

    @property
    def k(self) -> int:
        return len(self.thetas)


@dataclass
class ReturnSolution:
    n: int
    distances: list
    method: str
    fallback: bool = False
    note: str = ""

    def to_json(self) -> dict:
        return {"n": self.n, "distances": self.distances, "method": self.method,
                "fallback": self.fallback, "note": self.note}


class BudgetExhausted(Exception):
    """No return time below the budget.  Returns always exist; the budget was too small."""

    def __init__(self, n_max):
        super().__init__(f"no simultaneous return with n <= {n_max} (infeasible within budget)")
        self.n_max = n_max


def torus_distance(theta: float, n: int) -> float:
    """Distance from n*theta to the nearest integer.

    ``theta`` is a binary float, hence an exact rational a / 2^s; the product
    is reduced modulo 1 in integer arithmetic, so the result is exact up to
    the final rounding for every n.
    """
    a, b = float(theta).as_integer_ratio()
    r = (int(n) * a) % b
    return min(r, b - r) / b


def dirichlet_bound(delta: float, k: int) -> int:
    """Pigeonhole guarantee: some 1 <= n <= ceil(1/delta)^k has all distances < delta."""
    return math.ceil(1.0 / delta) ** k


def _distances_block(thetas, start, stop):
    """Float torus distances for n in [start, stop); shape (k, stop - start).

    Only a filter: the error is about stop * 2^-53, and hits are re-checked
    exactly by the caller.
    """
    n = np.arange(start, stop, dtype=np.float64)
    th = np.asarray(thetas, dtype=np.float64)[:, None]
    prod = n[None, :] * th
    frac = prod - np.floor(prod)
    return np.minimum(frac, 1.0 - frac)


def scan_returns(sys: AngleSystem, n_max: int, n_min: int = 1, limit: int = 1) -> list:
    """The first ``limit`` n in [n_min, n_max] with max_j torus distance < delta, in order.

    Candidates from the vectorized float scan are confirmed with
    :func:`torus_distance`.  Chunks start small and double, so early
    returns are cheap.
    """
    n_max = int(n_max)
    start = int(n_min)
    if sys.k == 0:
        return [ReturnSolution(n, [], "scan") for n in range(start, min(n_max, start + limit - 1) + 1)]
    out = []
    width = 256
    while start <= n_max and len(out) < limit:
        stop = min(n_max + 1, start + width)
        slack = 1e-12 + 4.0 * stop * np.finfo(float).eps
        worst = _distances_block(sys.thetas, start, stop).max(axis=0)
        for idx in np.flatnonzero(worst < sys.delta + slack):
            n = start + int(idx)
            dist = [torus_distance(t, n) for t in sys.thetas]
            if max(dist) < sys.delta:
                out.append(ReturnSolution(n, dist, "scan"))
                if len(out) == limit:
                    break
        start = stop
        width = min(2 * width, SCAN_CHUNK)
    return out


def scan_return(sys: AngleSystem, n_max: int, n_min: int = 1) -> ReturnSolution:
    """Smallest n in [n_min, n_max] with max_j torus distance < delta.

    Succeeds whenever n_max >= ceil(1/delta)^k (pigeonhole); raises
    :class:`BudgetExhausted` otherwise.
    """
    hits = scan_returns(sys, n_max, n_min, 1)
    if not hits:
        raise BudgetExhausted(int(n_max))
    return hits[0]


def continued_fraction_convergents(theta: float, count: int = 30, tol: float = 1e-12) -> list:
    """Convergents (p, q) of theta's continued fraction, stopping once the remainder is below ``tol``."""
    x = float(theta)
    out = []
    p0, q0, p1, q1 = 0, 1, 1, 0
    for _ in range(count):
        a = math.floor(x)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append((p1, q1))
        f = x - a
        if f < tol or abs(p1 / q1 - theta) < tol:
            break
        x = 1.0 / f
    return out


# -- exact integer LLL --------------------------------------------------------

def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def _gram_schmidt(b):
    n = len(b)
    bstar = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    norms = []
    for i in range(n):
        v = [Fraction(t) for t in b[i]]
        for j in range(i):
            mu[i][j] = _dot(b[i], bstar[j]) / norms[j] if norms[j] else Fraction(0)
            v = [vi - mu[i][j] * wj for vi, wj in zip(v, bstar[j])]
        bstar.append(v)
        norms.append(_dot(v, v))
    return bstar, mu, norms


def lll_reduce(basis: Sequence[Sequence[int]], delta: Fraction = Fraction(3, 4),
               return_transform: bool = False):
    """LLL-reduce the rows of an integer basis in exact rational arithmetic.

    Python integers are unbounded, so no intermediate can overflow.  Returns
    the reduced basis (and the unimodular transform U with U @ basis ==
    reduced when ``return_transform``).  Linearly dependent rows are rejected.
    """
    b = [[int(t) for t in row] for row in basis]
    n = len(b)
    if n == 0:
        return ([], []) if return_transform else []
    if any(len(row) != len(b[0]) for row in b):
        raise RejectedInputError("basis rows have different lengths")
    u = [[int(i == j) for j in range(n)] for i in range(n)]
    bstar, mu, norms = _gram_schmidt(b)
    if any(nm == 0 for nm in norms):
        raise RejectedInputError("basis rows are linearly dependent")
    delta = Fraction(delta)

    def size_reduce(k, j):
        q = round(mu[k][j])
        if q:
            b[k] = [x - q * y for x, y in zip(b[k], b[j])]
            u[k] = [x - q * y for x, y in zip(u[k], u[j])]
            for i in range(j):
                mu[k][i] -= q * mu[j][i]
            mu[k][j] -= q

    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            size_reduce(k, j)
        if norms[k] >= (delta - mu[k][k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            u[k], u[k - 1] = u[k - 1], u[k]
            bstar, mu, norms = _gram_schmidt(b)
            k = max(k - 1, 1)
    return (b, u) if return_transform else b


def is_lll_reduced(basis, delta: Fraction = Fraction(3, 4)) -> bool:
    """Exact check of size reduction (|mu_ij| <= 1/2) and the Lovasz condition."""
    _, mu, norms = _gram_schmidt([[int(t) for t in r] for r in basis])
    n = len(basis)
    for i in range(n):
        for j in range(i):
            if abs(mu[i][j]) > Fraction(1, 2):
                return False
    return all(norms[k] >= (Fraction(delta) - mu[k][k - 1] ** 2) * norms[k - 1] for k in range(1, n))


def _dirichlet_lattice(thetas, delta, m):
    k = len(thetas)
    # weight of the budget column so that the lattice's short vectors have
    # angle components a few LLL approximation factors below m*delta
    f = 2.0 ** (k / 2 + 1)
    c = max(1, round(m * (delta / f) ** (k + 1)))
    rows = [[c] + [round(m * t) for t in thetas]]
    for j in range(k):
        rows.append([0] * (j + 1) + [m] + [0] * (k - j - 1))
    return rows, c


def simultaneous_return_lll(sys: AngleSystem, scale_m: int = DEFAULT_M, retries: int = 2,
                            fallback_budget: Optional[int] = None, n_min: int = 1,
                            fallback: bool = True) -> ReturnSolution:
    """Return time proposed by LLL on the Dirichlet lattice, validated exactly.

    Angles are integerized as round(M theta_j); the reduced basis and small
    combinations of its rows yield candidate n, each checked with
    :func:`torus_distance`.  On failure M is doubled (``retries`` times) and
    finally :func:`scan_return` is used, with ``fallback`` recorded; with
    ``fallback=False`` :class:`BudgetExhausted` is raised instead.
    """
    if sys.k > 8:
        raise RejectedInputError(f"LLL return search supports at most 8 angles, got {sys.k}")
    if sys.k == 0:
        return ReturnSolution(int(n_min), [], "lll")
    m = int(scale_m)
    for attempt in range(retries + 1):
        rows, c = _dirichlet_lattice(sys.thetas, sys.delta, m)
        red = lll_reduce(rows)
        cands = set()
        for i, r in enumerate(red):
            cands.add(abs(r[0]) // c)
            for s in red[i + 1:]:
                cands.add(abs(r[0] + s[0]) // c)
                cands.add(abs(r[0] - s[0]) // c)
        best = None
        for n in sorted(x for x in cands if x >= n_min):
            dist = [torus_distance(t, n) for t in sys.thetas]
            if max(dist) < sys.delta:
                best = ReturnSolution(int(n), dist, "lll", note=f"M=2^{m.bit_length() - 1}")
                break
        if best is not None:
            return best
        m *= 2
    if not fallback:
        raise BudgetExhausted(0)
    budget = fallback_budget if fallback_budget is not None else dirichlet_bound(sys.delta, sys.k)
    sol = scan_return(sys, budget, n_min)
    sol.fallback = True
    sol.note = f"LLL candidates failed validation after {retries} doublings of M; scanned"
    return sol


def validate(sys: AngleSystem, sol: ReturnSolution) -> bool:
    """Independent recomputation of the distances of a solution."""
    return max((torus_distance(t, sol.n) for t in sys.thetas), default=0.0) < sys.delta
