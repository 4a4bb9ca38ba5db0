"""Spectra and the spectral necessary conditions for super-recurrence.

Eigenvalues of dense operators come from the characteristic polynomial
(Faddeev-LeVerrier) and a simultaneous Aberth-Ehrlich root iteration; the
structured variants use the spectral mapping shortcuts instead.  In finite
dimension every spectral point is its own connected component, so the
circle condition reduces to "all eigenvalues share one modulus".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import operators as ops
from .exceptions import InconclusiveError, UnsupportedSizeError
from .operators import OperatorSpec

DEFAULT_TOL = 1e-6
RANK_TOL = 1e-8
# Roots of a dense characteristic polynomial closer than this (relative to
# the spectral scale) are treated as one multiple eigenvalue.  A triple root
# perturbed at machine precision splits by about eps**(1/3) times the scale.
CLUSTER_TOL_DENSE = 1e-4
# Eigenbases worse conditioned than this are treated as numerically defective.
EIGENBASIS_COND_MAX = 1e8
CLUSTER_TOL_EXACT = 1e-12


@dataclass(frozen=True)
class CharPoly:
    """Monic characteristic polynomial, coefficients in descending degree."""

    coeffs: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z):
        return np.polyval(self.coeffs, z)


def characteristic_polynomial(op: OperatorSpec) -> CharPoly:
    """Faddeev-LeVerrier trace recursion on the dense materialization.

    The matrix is scaled to unit max-entry before the recursion and the
    coefficients are rescaled afterwards, which keeps the intermediate
    matrices from overflowing for large or small operators.
    """
    n = op.dim
    if n > ops.MAX_DIM:
        raise UnsupportedSizeError(f"characteristic polynomial supports dim <= {ops.MAX_DIM}, got {n}")
    m = ops.materialize_dense(op)
    s = float(np.max(np.abs(m)))
    if s == 0:
        c = np.zeros(n + 1, dtype=np.complex128)
        c[0] = 1
        return CharPoly(c)
    a = m / s
    eye = np.eye(n, dtype=np.complex128)
    c = np.zeros(n + 1, dtype=np.complex128)
    c[0] = 1
    mk = np.zeros_like(a)
    for k in range(1, n + 1):
        mk = a @ mk + c[k - 1] * eye
        c[k] = -np.trace(a @ mk) / k
    c *= s ** np.arange(n + 1)
    return CharPoly(c)


class Roots(NamedTuple):
    roots: np.ndarray
    residual: float
    sweeps: int


def _horner_bound(coeffs, z):
    # rounding-error bound for evaluating the polynomial at z by Horner
    n = len(coeffs) - 1
    return 4 * (n + 1) * np.finfo(float).eps * np.polyval(np.abs(coeffs), np.abs(z))


def polynomial_roots(p: CharPoly | np.ndarray, tol: float = 1e-12, max_sweeps: int = 500) -> Roots:
    """All roots of a monic polynomial by Aberth-Ehrlich iteration.

    Starts from a slightly rotated circle whose radius is the geometric mean
    of the root moduli.  A root stops moving once its update is below ``tol``
    (relative) or its residual is at the Horner rounding level.  Raises
    :class:`InconclusiveError` with the best iterate if ``max_sweeps`` is hit.
    """
    a = np.asarray(p.coeffs if isinstance(p, CharPoly) else p, dtype=np.complex128)
    if a.size < 2:
        raise ValueError("polynomial must have degree >= 1")
    a = a / a[0]
    n = a.size - 1
    # zero roots are exact: strip trailing zero coefficients
    nz = 0
    while nz < n and a[n - nz] == 0:
        nz += 1
    core = a[: n - nz + 1]
    m = core.size - 1
    if m == 0:
        return Roots(np.zeros(n, dtype=np.complex128), 0.0, 0)
    dcore = np.polyder(core)
    radius = abs(core[-1]) ** (1.0 / m)
    if radius == 0 or not np.isfinite(radius):
        radius = 1.0
    angles = 2 * np.pi * np.arange(m) / m + 0.4
    z = radius * np.exp(1j * angles) * (1 + 1e-3 * np.arange(m) / max(m, 1))
    active = np.ones(m, dtype=bool)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        moved = 0.0
        for k in np.flatnonzero(active):
            pk = np.polyval(core, z[k])
            if abs(pk) <= _horner_bound(core, z[k]):
                active[k] = False
                continue
            dpk = np.polyval(dcore, z[k])
            diff = z[k] - np.delete(z, k)
            if np.any(diff == 0):
                z[k] += 1e-8 * (1 + abs(z[k]))
                continue
            w = pk / dpk if dpk != 0 else 1e-3 * (1 + abs(z[k]))
            step = w / (1 - w * np.sum(1.0 / diff))
            z[k] -= step
            rel = abs(step) / max(1.0, abs(z[k]))
            moved = max(moved, rel)
            if rel < tol:
                active[k] = False
        if not active.any():
            break
    else:
        res = np.abs(np.polyval(core, z))
        raise InconclusiveError(
            f"Aberth iteration did not converge in {max_sweeps} sweeps",
            {"roots": z.tolist(), "residuals": res.tolist()},
        )
    roots = np.concatenate([z, np.zeros(nz, dtype=np.complex128)])
    residual = float(np.max(np.abs(np.polyval(a, roots))))
    return Roots(roots, residual, sweeps)


def cluster(points: np.ndarray, tol: float) -> list[np.ndarray]:
    """Single-linkage groups of indices whose points lie within ``tol``."""
    n = len(points)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(points[i] - points[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(g) for g in groups.values()]


def _structural_points(op) -> tuple[np.ndarray, Optional[CharPoly], bool]:
    """(points, charpoly or None when exact, truncation_artifact) via spectral mapping."""
    if isinstance(op, ops.Diagonal):
        return np.array(op.entries), None, False
    if isinstance(op, ops.WeightedBackwardShift):
        return np.zeros(op.dim, dtype=np.complex128), None, True
    if isinstance(op, (ops.Scaled, ops.Power, ops.Polynomial, ops.DirectSum)):
        inner = op.parts if isinstance(op, ops.DirectSum) else (op.inner,)
        parts = [_structural_points(q) for q in inner]
        if all(q[1] is None for q in parts):
            art = any(q[2] for q in parts)
            p = np.concatenate([q[0] for q in parts])
            if isinstance(op, ops.Scaled):
                p = op.c * p
            elif isinstance(op, ops.Power):
                p = p ** op.p
            elif isinstance(op, ops.Polynomial):
                p = np.polyval(op.coeffs[::-1], p)
            return p, None, art
    poly = characteristic_polynomial(op)
    return polynomial_roots(poly).roots, poly, False


def _snap_clusters(points: np.ndarray, tol: float, poly: Optional[CharPoly] = None):
    """Replace each cluster by one representative.

    For a cluster of size m the representative is the root of the (m-1)-th
    derivative nearest the cluster mean: a multiple root of p is a simple,
    well-conditioned root of that derivative.
    """
    groups = cluster(points, tol)
    out = np.array(points)
    for g in groups:
        if len(g) < 2:
            continue
        mu = np.mean(points[g])
        if poly is not None:
            q = np.polyder(poly.coeffs, len(g) - 1)
            dq = np.polyder(q)
            z = mu
            for _ in range(20):
                d = np.polyval(dq, z)
                if d == 0:
                    break
                step = np.polyval(q, z) / d
                z -= step
                if abs(step) <= 1e-16 * max(1.0, abs(z)):
                    break
            if np.isfinite(z) and abs(z - mu) <= tol:
                mu = z
        out[g] = mu
    return out, groups


def _pivoted_rank(m: np.ndarray, tol: float) -> tuple[int, np.ndarray]:
    """Rank by Gaussian elimination with complete pivoting; also returns the pivots."""
    a = np.array(m, dtype=np.complex128)
    n_rows, n_cols = a.shape
    pivots = []
    for k in range(min(n_rows, n_cols)):
        sub = np.abs(a[k:, k:])
        i, j = np.unravel_index(int(np.argmax(sub)), sub.shape)
        piv = sub[i, j]
        pivots.append(piv)
        if piv <= tol:
            break
        i += k
        j += k
        a[[k, i], :] = a[[i, k], :]
        a[:, [k, j]] = a[:, [j, k]]
        a[k + 1:, k:] -= np.outer(a[k + 1:, k] / a[k, k], a[k, k:])
    rank = sum(1 for p in pivots if p > tol)
    return rank, np.array(pivots)


@dataclass
class Multiplicity:
    eigenvalue: complex
    algebraic: int
    geometric: int


@dataclass
class SpectrumReport:
    points: np.ndarray
    moduli: np.ndarray
    modulus_spread: float
    circle_radius: Optional[float]
    adjoint_points: np.ndarray
    diagonalizable: Optional[bool]
    multiplicities: list = field(default_factory=list)
    dense_range: bool = True
    determinant: complex = 0j
    truncation_artifact: bool = False
    tol: float = DEFAULT_TOL

    @property
    def dim(self) -> int:
        return len(self.points)

    def to_json(self) -> dict:
        return {
            "points": ops.vector_to_json(self.points),
            "moduli": [float(m) for m in self.moduli],
            "modulus_spread": float(self.modulus_spread),
            "circle_radius": None if self.circle_radius is None else float(self.circle_radius),
            "adjoint_points": ops.vector_to_json(self.adjoint_points),
            "diagonalizable": self.diagonalizable,
            "multiplicities": [
                {"eigenvalue": ops.scalar_to_json(m.eigenvalue), "algebraic": m.algebraic,
                 "geometric": m.geometric} for m in self.multiplicities
            ],
            "dense_range": bool(self.dense_range),
            "determinant": ops.scalar_to_json(self.determinant),
            "truncation_artifact": bool(self.truncation_artifact),
            "tol": self.tol,
        }


def modulus_spread(points) -> float:
    mod = np.abs(np.asarray(points))
    top = float(np.max(mod)) if mod.size else 0.0
    return 0.0 if top == 0 else float((top - np.min(mod)) / top)


def _multiplicities(m, points, groups):
    n = m.shape[0]
    rank_tol = RANK_TOL * max(float(np.linalg.norm(m, 2)), np.finfo(float).tiny)
    diag: Optional[bool] = True
    mults = []
    for g in groups:
        mu = complex(points[g[0]])
        rank, pivots = _pivoted_rank(m - mu * np.eye(n), rank_tol)
        geo = n - rank
        mults.append(Multiplicity(mu, len(g), geo))
        if np.any((pivots > 1e-2 * rank_tol) & (pivots < 1e2 * rank_tol)):
            diag = None
        elif geo < len(g) and diag is not None:
            diag = False
    if diag and np.linalg.cond(_eigenbasis(m, mults)) > EIGENBASIS_COND_MAX:
        diag = None
    return diag, mults


def spectrum(op: OperatorSpec, tol: float = DEFAULT_TOL) -> SpectrumReport:
    """Eigenvalue multiset of ``op`` with modulus statistics and multiplicities."""
    raw, poly, artifact = _structural_points(op)
    scale = max(1.0, float(np.max(np.abs(raw))) if raw.size else 1.0)
    m = ops.materialize_dense(op)
    if np.count_nonzero(m - np.diag(np.diag(m))) == 0:
        points, groups = _snap_clusters(raw, CLUSTER_TOL_EXACT * scale)
        diag: Optional[bool] = True
        mults = [Multiplicity(complex(points[g[0]]), len(g), len(g)) for g in groups]
    elif poly is None:
        points, groups = _snap_clusters(raw, CLUSTER_TOL_EXACT * scale)
        diag, mults = _multiplicities(m, points, groups)
    else:
        # widen the clustering until every cluster is a genuine eigenvalue
        # (geometric multiplicity >= 1); high-order roots split further
        for widen in (1, 10, 100):
            points, groups = _snap_clusters(raw, CLUSTER_TOL_DENSE * widen * scale, poly)
            diag, mults = _multiplicities(m, points, groups)
            if all(mu.geometric >= 1 for mu in mults):
                break
    spread = modulus_spread(points)
    mod = np.abs(points)
    radius = float(np.mean(mod)) if spread <= tol and np.max(mod) > 0 else None
    dr = ops.dense_range_check(op)
    return SpectrumReport(
        points=points,
        moduli=mod,
        modulus_spread=spread,
        circle_radius=radius,
        adjoint_points=points.conj(),
        diagonalizable=diag,
        multiplicities=mults,
        dense_range=dr.dense,
        determinant=dr.determinant,
        truncation_artifact=artifact,
        tol=tol,
    )


@dataclass
class CheckResult:
    passed: bool
    radius: Optional[float] = None
    witness: tuple = ()
    valid: bool = True
    note: str = ""

    def __bool__(self):
        return self.passed and self.valid

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "valid": self.valid,
            "radius": self.radius,
            "witness": [ops.scalar_to_json(w) for w in self.witness],
            "note": self.note,
        }


def _one_circle(points, tol, label) -> CheckResult:
    points = np.asarray(points)
    mod = np.abs(points)
    lo, hi = int(np.argmin(mod)), int(np.argmax(mod))
    spread = modulus_spread(points)
    if mod[hi] == 0:
        return CheckResult(True, 0.0, (complex(points[lo]),), valid=False,
                           note=f"{label}: spectrum is {{0}}; R must be positive and the range is not dense")
    if spread <= tol:
        return CheckResult(True, float(np.mean(mod)))
    return CheckResult(False, None, (complex(points[lo]), complex(points[hi])),
                       note=f"{label}: modulus spread {spread:.3g} exceeds {tol:g}")


def component_circle_check(report: SpectrumReport, tol: float = DEFAULT_TOL) -> CheckResult:
    """Every spectral point (component) must meet one circle |z| = R."""
    return _one_circle(report.points, tol, "spectrum")


def adjoint_point_spectrum_check(report: SpectrumReport, tol: float = DEFAULT_TOL) -> CheckResult:
    """All eigenvalues of the adjoint must share one modulus R."""
    return _one_circle(report.adjoint_points, tol, "adjoint point spectrum")


def multiset_distance(a, b) -> float:
    """Largest pairing error under the optimal (min-cost) matching of two multisets."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ValueError("multisets differ in size")
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(np.max(cost[r, c])) if len(r) else 0.0


@dataclass
class EigenStructure:
    """Diagonalization ``M = V diag(values) V^{-1}`` of a materialized operator."""

    values: np.ndarray
    vectors: np.ndarray

    def coordinates(self, x) -> np.ndarray:
        return np.linalg.solve(self.vectors, x)


def eigen_structure(op: OperatorSpec, report: SpectrumReport | None = None) -> Optional[EigenStructure]:
    """Eigenbasis of a diagonalizable operator, or ``None`` when not diagonalizable.

    Eigenspaces of clustered eigenvalues are taken as numerical null spaces,
    so semisimple multiple eigenvalues get a well-conditioned basis.
    """
    m = ops.materialize_dense(op)
    n = m.shape[0]
    if np.count_nonzero(m - np.diag(np.diag(m))) == 0:
        return EigenStructure(np.diag(m).copy(), np.eye(n, dtype=np.complex128))
    if report is None:
        report = spectrum(op)
    if report.diagonalizable is not True:
        return None
    vals = [m_.eigenvalue for m_ in report.multiplicities for _ in range(m_.algebraic)]
    return EigenStructure(np.array(vals), _eigenbasis(m, report.multiplicities))


def _eigenbasis(m: np.ndarray, mults) -> np.ndarray:
    # eigenspace of each cluster = right singular vectors of its smallest singular values
    n = m.shape[0]
    cols = []
    for mult in mults:
        _, _, vh = np.linalg.svd(m - mult.eigenvalue * np.eye(n))
        cols.append(vh[n - mult.algebraic:].conj().T)
    return np.column_stack(cols)


def inverse_iteration(matrix: np.ndarray, mu: complex, *, restarts: int = 3, seed: int = 0,
                      tol: float = 1e-10, max_iter: int = 50) -> tuple[np.ndarray, float]:
    """Unit eigenvector of ``matrix`` for the eigenvalue nearest ``mu``.

    Runs from ``restarts`` random starting vectors and keeps the one with the
    smallest residual ``||A v - mu v||``.
    """
    n = matrix.shape[0]
    scale = max(1.0, float(np.linalg.norm(matrix, 2)))
    shifted = matrix - mu * np.eye(n)
    rng = np.random.default_rng(seed)
    best, best_res = None, np.inf
    for _ in range(restarts):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
        for _ in range(max_iter):
            try:
                w = np.linalg.solve(shifted, v)
            except np.linalg.LinAlgError:
                w = np.linalg.solve(shifted + 1e-14 * scale * np.eye(n), v)
            nw = np.linalg.norm(w)
            if not np.isfinite(nw) or nw == 0:
                break
            v = w / nw
            res = float(np.linalg.norm(shifted @ v))
            if res <= tol * scale:
                break
        res = float(np.linalg.norm(shifted @ v))
        if res < best_res:
            best, best_res = v, res
    return best, best_res
