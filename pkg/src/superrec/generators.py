"""Seeded operator generators with planted eigenvalues.

Every generator returns a :class:`Planted` record whose eigenvalues are
known by construction, so suite checks have an oracle that does not go
through the spectral solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import operators as ops
from .operators import OperatorSpec

RADII = (0.5, 1.0, 2.0)
MAX_ORDER = 12


@dataclass
class Planted:
    label: str
    op: OperatorSpec
    eigenvalues: np.ndarray
    diagonalizable: bool = True


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph[None, :]


def random_similarity(rng: np.random.Generator, d: int, max_cond: float = 10.0) -> np.ndarray:
    """U diag(s) V with singular values in [1, max_cond] (so cond <= max_cond)."""
    s = np.exp(rng.uniform(0.0, np.log(max_cond), d))
    s[0] = 1.0
    return random_unitary(rng, d) @ np.diag(s) @ random_unitary(rng, d)


def conjugate(op: OperatorSpec, phi: np.ndarray) -> ops.Dense:
    """phi T phi^-1 as a dense operator."""
    m = ops.materialize_dense(op)
    return ops.Dense(phi @ np.linalg.solve(phi.T, m.T).T)


def root_of_unity_angles(rng: np.random.Generator, d: int, max_order: int = MAX_ORDER) -> list:
    """d distinct fractions j/q in [0, 1) with q <= max_order."""
    pool = sorted({Fraction(j, q) for q in range(1, max_order + 1) for j in range(q)})
    idx = rng.choice(len(pool), size=d, replace=False)
    return [pool[i] for i in sorted(idx)]


def _unit_circle(angles) -> np.ndarray:
    return np.array([np.exp(2j * np.pi * float(a)) for a in angles])


def equal_modulus(rng: np.random.Generator, d: int, radius: float | None = None,
                  conjugated: bool = True, max_cond: float = 10.0) -> Planted:
    """R times distinct roots of unity, optionally hidden by a similarity."""
    r = float(rng.choice(RADII)) if radius is None else float(radius)
    vals = r * _unit_circle(root_of_unity_angles(rng, d))
    op: OperatorSpec = ops.Diagonal(vals)
    if conjugated:
        op = conjugate(op, random_similarity(rng, d, max_cond))
    return Planted("equal_modulus", op, vals)


def unequal_modulus(rng: np.random.Generator, d: int, min_spread: float = 0.05,
                    conjugated: bool = True, max_cond: float = 10.0) -> Planted:
    """Distinct moduli with (max - min) / max at least ``min_spread``."""
    hi = float(rng.choice(RADII))
    mods = rng.uniform(hi * (1 - 2 * min_spread), hi, d)
    mods[0] = hi
    mods[1] = hi * (1 - min_spread - rng.uniform(0, min_spread))
    vals = mods * np.exp(2j * np.pi * rng.uniform(0, 1, d))
    op: OperatorSpec = ops.Diagonal(vals)
    if conjugated:
        op = conjugate(op, random_similarity(rng, d, max_cond))
    return Planted("unequal_modulus", op, vals)


def jordan(rng: np.random.Generator, d: int) -> Planted:
    """One Jordan block of size >= 2 at a unimodular eigenvalue, rest diagonal on the same circle."""
    size = int(rng.integers(2, d + 1))
    mu = np.exp(2j * np.pi * float(rng.choice(root_of_unity_angles(rng, 1))))
    m = np.diag(np.full(d, mu, dtype=np.complex128))
    m[np.arange(size - 1), np.arange(1, size)] = 1.0
    rest = _unit_circle(root_of_unity_angles(rng, d - size)) if d > size else np.array([])
    m[size:, size:] = np.diag(rest) if d > size else m[size:, size:]
    vals = np.concatenate([np.full(size, mu), rest])
    return Planted("jordan", ops.Dense(m), vals, diagonalizable=False)


def direct_sum(rng: np.random.Generator, d: int, matched: bool = True) -> Planted:
    """Equal-modulus diagonal pieces; ``matched=False`` gives the pieces different radii."""
    d1 = int(rng.integers(1, d))
    r = float(rng.choice(RADII))
    a = equal_modulus(rng, d1, r, conjugated=False)
    r2 = r if matched else 2 * r
    b = equal_modulus(rng, d - d1, r2, conjugated=False)
    op = ops.direct_sum(a.op, b.op)
    return Planted("direct_sum" if matched else "direct_sum_mismatched", op,
                   np.concatenate([a.eigenvalues, b.eigenvalues]))


def random_probe(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_polynomial(rng: np.random.Generator, max_degree: int = 3) -> list:
    """Coefficients (ascending) of a nonzero polynomial of degree <= max_degree."""
    deg = int(rng.integers(1, max_degree + 1))
    c = rng.standard_normal(deg + 1) + 1j * rng.standard_normal(deg + 1)
    return list(c)


GENERATORS = {
    "equal_modulus": equal_modulus,
    "unequal_modulus": unequal_modulus,
    "jordan": jordan,
    "direct_sum": direct_sum,
}
