"""Detection of recurrent and super-recurrent vectors, with replayable certificates.

A certificate ``(n, lam)`` for a vector x witnesses ``||lam T^n x - x|| <=
epsilon ||x||``; :func:`verify_certificate` recomputes the residual from
scratch.  Detection tries, in order:

1. the eigen route: for diagonalizable operators whose eigenvalues on the
   support of x share one modulus, a simultaneous return time of the
   eigen-angles (scan, then LLL) is proposed and verified;
2. an orbit scan on the renormalized orbit.

"Inconclusive" is never turned into a negative answer here; only spectral
witnesses refute, and that happens at the operator level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import diophantine as dio
from . import operators as ops
from . import orbit as orb
from . import spectral as spec
from .exceptions import InconclusiveError, RejectedInputError
from .operators import OperatorSpec

CERTIFIED = "certified"
REFUTED = "refuted_by_spectrum"
INCONCLUSIVE = "inconclusive"

# n up to this is replayed by repeated application; beyond it by binary powering
SEQUENTIAL_LIMIT = 256
SCAN_BUDGET = 10 ** 6
ORBIT_BUDGET = 10 ** 5
MAX_CERTIFICATES = 10
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class DetectionParams:
    """Relative return tolerance and the range of return times searched.

    ``n_max=None`` means the default budget max(10^4, ceil(1/epsilon)^k),
    with k the number of distinct eigenvalue arguments of the operator.
    """

    epsilon: float = 1e-6
    n_max: Optional[int] = None
    n_min: int = 1

    def __post_init__(self):
        if not (0 < self.epsilon < 1):
            raise RejectedInputError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if int(self.n_min) < 1:
            raise RejectedInputError("n_min must be positive")
        if self.n_max is not None and int(self.n_max) < int(self.n_min):
            raise RejectedInputError("n_min must not exceed n_max")

    def resolve_n_max(self, k: int = 1) -> int:
        if self.n_max is not None:
            return int(self.n_max)
        return max(10 ** 4, math.ceil(1.0 / self.epsilon) ** max(k, 1))

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "n_max": self.n_max, "n_min": self.n_min}

    @classmethod
    def from_json(cls, obj) -> "DetectionParams":
        if not isinstance(obj, dict):
            raise RejectedInputError("params: expected an object")
        unknown = set(obj) - {"epsilon", "n_max", "n_min"}
        if unknown:
            raise RejectedInputError(f"params: unknown fields {sorted(unknown)}")
        try:
            return cls(float(obj.get("epsilon", 1e-6)),
                       None if obj.get("n_max") is None else int(obj["n_max"]),
                       int(obj.get("n_min", 1)))
        except (TypeError, ValueError) as exc:
            raise RejectedInputError(f"params: {exc}") from None


@dataclass(frozen=True)
class ReturnCertificate:
    """``lam * exp(log_scale) * T^n x`` approximates x with relative error ``residual``.

    ``log_scale`` is only nonzero when the scalar would not fit in a float.
    """

    n: int
    lam: complex
    residual: float
    log_scale: float = 0.0

    @property
    def scalar(self) -> complex:
        """The full scalar (inf when it exceeds the float range)."""
        return _combine(self.lam, self.log_scale, 0)

    @property
    def log_magnitude(self) -> float:
        return math.log(abs(self.lam)) + self.log_scale if self.lam != 0 else -math.inf

    def to_json(self) -> dict:
        return {"n": self.n, "lambda": ops.scalar_to_json(self.lam),
                "log_scale": self.log_scale, "residual": self.residual}

    @classmethod
    def from_json(cls, obj) -> "ReturnCertificate":
        return cls(int(obj["n"]), ops.scalar_from_json(obj["lambda"], "certificate.lambda"),
                   float(obj["residual"]), float(obj.get("log_scale", 0.0)))


@dataclass
class RecurrenceVerdict:
    status: str
    certificates: list
    params: DetectionParams
    notes: str = ""
    witness: tuple = ()

    @property
    def certified(self) -> bool:
        return self.status == CERTIFIED

    @property
    def best(self) -> Optional[ReturnCertificate]:
        return min(self.certificates, key=lambda c: c.residual) if self.certificates else None

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "certificates": [c.to_json() for c in self.certificates],
            "params": self.params.to_json(),
            "notes": self.notes,
            "witness": [ops.scalar_to_json(w) for w in self.witness],
        }


# -- exact replay ----------------------------------------------------------

def _rescale(v, e):
    # multiply by a power of two so the max entry is ~1; exact in binary floats
    m = float(np.abs(v).max())
    if m == 0 or not np.isfinite(m):
        return v, e
    _, k = math.frexp(m)
    if -1000 < k < 1000:
        return v * (2.0 ** -k), e + k
    return np.ldexp(v.real, -k) + 1j * np.ldexp(v.imag, -k), e + k


def power_apply(op: OperatorSpec, x, n: int) -> tuple[np.ndarray, int]:
    """T^n x as ``(y, e)`` with T^n x == y * 2**e.

    Small n use repeated application of ``op``; large n use binary powering
    of the dense matrix.  All rescaling is by powers of two, so it introduces
    no rounding.
    """
    x = ops.as_vector(x, op.dim)
    n = int(n)
    if n <= SEQUENTIAL_LIMIT:
        y, e = x, 0
        for _ in range(n):
            y = ops._apply(op, y)
            if not (1e-30 < float(np.abs(y).max()) < 1e30):
                y, e = _rescale(y, e)
        return _rescale(y, e)
    base, eb = _rescale(ops.materialize_dense(op), 0)
    acc, ea = None, 0
    while n:
        if n & 1:
            if acc is None:
                acc, ea = base, eb
            else:
                acc, ea = _rescale(base @ acc, ea + eb)
        n >>= 1
        if n:
            base, eb = _rescale(base @ base, 2 * eb)
    return _rescale(acc @ x, ea)


def _combine(lam: complex, log_scale: float, e: int) -> complex:
    if lam == 0:
        return 0j
    logmag = math.log(abs(lam)) + log_scale + e * _LN2
    if logmag > 709:
        return complex("inf")
    return lam / abs(lam) * math.exp(logmag)


def verify_certificate(op: OperatorSpec, x, cert: ReturnCertificate) -> float:
    """Recompute ``||lam T^n x - x|| / ||x||`` by direct application."""
    x = ops.as_vector(x, op.dim)
    nx = np.linalg.norm(x)
    if nx == 0:
        raise RejectedInputError("certificate for the zero vector")
    y, e = power_apply(op, x, cert.n)
    return _residual(x, nx, y, e, cert)


def _residual(x, nx, y, e, cert):
    s = _combine(cert.lam, cert.log_scale, e)
    if not np.isfinite(s):
        return math.inf
    return float(np.linalg.norm(s * y - x) / nx)


def make_certificate(op: OperatorSpec, x, n: int, fixed_lambda: Optional[complex] = None) -> ReturnCertificate:
    """Certificate at return time n with the optimal scalar (or a fixed one)."""
    x = ops.as_vector(x, op.dim)
    y, e = power_apply(op, x, n)
    if fixed_lambda is not None:
        cert = ReturnCertificate(int(n), complex(fixed_lambda), 0.0)
    else:
        if not np.any(y):
            return ReturnCertificate(int(n), 0j, 1.0)
        mu = orb.best_scalar(x, y)
        if mu == 0:
            lam, log_scale = 0j, 0.0
        else:
            logmag = math.log(abs(mu)) - e * _LN2
            if abs(logmag) < 600:
                lam, log_scale = mu / abs(mu) * math.exp(logmag), 0.0
            else:
                lam, log_scale = mu / abs(mu), logmag
        cert = ReturnCertificate(int(n), lam, 0.0, log_scale)
    # same arithmetic as verify_certificate, without recomputing T^n x
    res = _residual(x, np.linalg.norm(x), y, e, cert)
    return ReturnCertificate(cert.n, cert.lam, res, cert.log_scale)


# -- structure --------------------------------------------------------------

def operator_structure(op: OperatorSpec) -> Optional[spec.EigenStructure]:
    """Eigen-decomposition used by the eigen route (``None`` if unavailable)."""
    try:
        return spec.eigen_structure(op)
    except InconclusiveError:
        return None


def _contains_shift(op) -> bool:
    if isinstance(op, ops.WeightedBackwardShift):
        return True
    if isinstance(op, ops.DirectSum):
        return any(_contains_shift(p) for p in op.parts)
    if isinstance(op, (ops.Scaled, ops.Power, ops.Polynomial)):
        return _contains_shift(op.inner)
    return False


def _eigen_route(op, x, params, structure, recurrence):
    """(certificates or None, note, settled); settled means the orbit scan cannot help."""
    c = structure.coordinates(x)
    weights = np.abs(c) * np.linalg.norm(structure.vectors, axis=0)
    nx = np.linalg.norm(x)
    support = weights > 1e-14 * max(nx, float(np.sum(weights)))
    vals = structure.values[support]
    mod = np.abs(vals)
    if recurrence and vals.size:
        # ||T^n x - x|| >= s_min(V) |c_j| |1 - |mu_j|^n| >= s_min(V) |c_j| |1 - |mu_j|| for n >= 1
        s_min = np.linalg.svd(structure.vectors, compute_uv=False)[-1]
        floor = float(s_min * np.max(np.abs(c[support]) * np.abs(1.0 - mod)) / nx)
        if floor > 2 * params.epsilon:
            return None, f"eigen route: residual >= {floor:.3g} for every n >= 1", True
    if vals.size == 0 or np.any(mod == 0):
        return None, "eigen route: support meets the kernel", False
    target = 1.0 if recurrence else float(np.max(mod))
    if np.max(np.abs(mod - target)) > 1e-6 * target:
        return None, "eigen route: unequal moduli on the support", False
    thetas = np.angle(vals) / (2 * np.pi)
    if not recurrence:
        ref = int(np.argmax(weights[support]))
        thetas = thetas - thetas[ref]
    thetas = np.mod(thetas, 1.0)
    thetas[thetas >= 1.0] = 0.0
    # exact multiples of a full turn contribute nothing; merge duplicates
    uniq = sorted({float(t) for t in thetas if min(t, 1 - t) > 1e-15})
    keep = [uniq[0]] if uniq else []
    for t in uniq[1:]:
        if t - keep[-1] > 1e-15:
            keep.append(t)
    total = float(np.sum(weights[support]))
    delta = min(0.49, 0.9 * params.epsilon * nx / (2 * np.pi * total))
    system = dio.AngleSystem(tuple(keep), delta)
    n_max = params.resolve_n_max(len(keep) + (0 if recurrence else 1))
    fixed = 1.0 if recurrence else None
    certs = []
    scan_cap = min(n_max, SCAN_BUDGET)
    for sol in dio.scan_returns(system, scan_cap, params.n_min, MAX_CERTIFICATES):
        cert = make_certificate(op, x, sol.n, fixed)
        if cert.residual <= params.epsilon:
            certs.append(cert)
    if not certs and n_max > scan_cap and system.k <= 8:
        try:
            sol = dio.simultaneous_return_lll(system, n_min=max(params.n_min, scan_cap + 1), fallback=False)
            if sol.n <= n_max:
                cert = make_certificate(op, x, sol.n, fixed)
                if cert.residual <= params.epsilon:
                    certs.append(cert)
        except dio.BudgetExhausted:
            pass
    if certs:
        return certs, f"eigen route: {system.k} relative angle(s), delta={delta:.3g}", True
    return None, f"eigen route: no verified return below {min(n_max, scan_cap)}", False


def _orbit_scores(op, xs, n_hi, recurrence):
    """Residual proxies for n = 0..n_hi along the orbits of the columns of ``xs``.

    Runs all orbits at once through the dense matrix with per-column
    renormalization.  Returns (scores of shape (n_hi + 1, P), last step
    reached per column); a column stops when its image is exactly zero.
    """
    m = ops.materialize_dense(op)
    nx = np.linalg.norm(xs, axis=0)
    d = xs / nx
    u = d.copy()
    logs = np.log(nx)
    p = xs.shape[1]
    scores = np.full((n_hi + 1, p), np.inf)
    scores[0] = 0.0
    alive = np.ones(p, dtype=bool)
    last = np.full(p, n_hi)
    for n in range(1, n_hi + 1):
        y = m @ d
        ny = np.sqrt(np.einsum("ij,ij->j", y.conj(), y).real)
        dead = alive & (ny == 0)
        if dead.any():
            last[dead] = n - 1
            alive &= ~dead
            if not alive.any():
                break
        ny[~alive] = 1.0
        d = y / ny
        logs = logs + np.log(ny)
        if recurrence:
            with np.errstate(over="ignore", invalid="ignore"):
                diff = np.exp(logs - np.log(nx))[None, :] * d - u
                sc = np.linalg.norm(diff, axis=0)
        else:
            proj = np.einsum("ij,ij->j", u.conj(), d)
            sc = np.linalg.norm(d - proj[None, :] * u, axis=0)
        sc[~alive | ~np.isfinite(sc)] = np.inf
        scores[n] = sc
    return scores, last


def _orbit_route(op, x, params, recurrence, orbit_budget):
    return _orbit_route_many(op, [x], params, recurrence, orbit_budget)[0]


def _orbit_route_many(op, xs, params, recurrence, orbit_budget):
    budget = min(params.resolve_n_max(), orbit_budget)
    scores, last = _orbit_scores(op, np.column_stack(xs), budget, recurrence)
    scores[: params.n_min] = np.inf
    fixed = 1.0 if recurrence else None
    out = []
    for j, x in enumerate(xs):
        sc = scores[:, j]
        certs = []
        for idx in np.flatnonzero(sc <= params.epsilon * (1 + 1e-6))[: 4 * MAX_CERTIFICATES]:
            cert = make_certificate(op, x, int(idx), fixed)
            if cert.residual <= params.epsilon:
                certs.append(cert)
                if len(certs) == MAX_CERTIFICATES:
                    break
        finite = sc[np.isfinite(sc)]
        best = float(np.min(finite)) if finite.size else math.inf
        note = f"orbit scan to n={int(last[j])}, smallest residual {best:.3g}"
        if last[j] < budget:
            what = "recurrent" if recurrence else "super-recurrent"
            note = f"reached kernel; not {what} along this orbit ({note})"
        out.append((certs, note))
    return out


def _detect_many(op, xs, params, structure, recurrence, orbit_budget=ORBIT_BUDGET):
    xs = [ops.as_vector(x, op.dim) for x in xs]
    if any(np.linalg.norm(x) == 0 for x in xs):
        raise RejectedInputError("detection needs a nonzero vector")
    head = ["truncation artifact: shift truncations are nilpotent"] if _contains_shift(op) else []
    if structure is None:
        structure = operator_structure(op)
    results = [None] * len(xs)
    notes = [list(head) for _ in xs]
    settled = [False] * len(xs)
    for j, x in enumerate(xs):
        if structure is not False and structure is not None:
            certs, note, settled[j] = _eigen_route(op, x, params, structure, recurrence)
            notes[j].append(note)
            results[j] = certs or None
    todo = [j for j in range(len(xs)) if not settled[j]]
    if todo:
        for j, (certs, note) in zip(todo, _orbit_route_many(op, [xs[j] for j in todo], params,
                                                              recurrence, orbit_budget)):
            results[j] = certs
            notes[j].append(note)
    return [RecurrenceVerdict(CERTIFIED if c else INCONCLUSIVE, list(c or ()), params, "; ".join(nt))
            for c, nt in zip(results, notes)]


def _detect(op, x, params, structure, recurrence, orbit_budget=ORBIT_BUDGET):
    return _detect_many(op, [x], params, structure, recurrence, orbit_budget)[0]


def detect_super_recurrence_many(op: OperatorSpec, xs, params: DetectionParams = DetectionParams(),
                                 structure=None, orbit_budget: int = ORBIT_BUDGET) -> list:
    """:func:`detect_super_recurrence` for several vectors, sharing one batched orbit scan."""
    return _detect_many(op, xs, params, structure, False, orbit_budget)


def detect_recurrence(op: OperatorSpec, x, params: DetectionParams = DetectionParams(),
                      structure=None, orbit_budget: int = ORBIT_BUDGET) -> RecurrenceVerdict:
    """Search n in [n_min, n_max] with ||T^n x - x|| <= epsilon ||x|| (lambda fixed to 1)."""
    return _detect(op, x, params, structure, True, orbit_budget)


def detect_super_recurrence(op: OperatorSpec, x, params: DetectionParams = DetectionParams(),
                            structure=None, orbit_budget: int = ORBIT_BUDGET) -> RecurrenceVerdict:
    """Search (n, lambda) with ||lambda T^n x - x|| <= epsilon ||x||.

    ``structure`` may carry a precomputed :class:`~superrec.spectral.EigenStructure`
    (or ``False`` to force the plain orbit scan); ``orbit_budget`` caps the
    orbit scan independently of ``n_max``.
    """
    return _detect(op, x, params, structure, False, orbit_budget)


# -- perturbed characterization -------------------------------------------

@dataclass
class PerturbedResult:
    passed: bool
    z: Optional[np.ndarray] = None
    n: Optional[int] = None
    lam: Optional[complex] = None
    note: str = ""

    def __bool__(self):
        return self.passed


def perturbed_characterization_check(op: OperatorSpec, x, params: DetectionParams = DetectionParams(),
                                     budget: int = ORBIT_BUDGET) -> PerturbedResult:
    """Look for z near x and (n, lambda) with lambda T^n z near x (both within epsilon ||x||).

    z = x is tried first (through :func:`detect_super_recurrence`); then, for
    each n, z is moved by epsilon ||x|| along the top right singular vectors
    of T^n in eight phases.  A FAIL only means nothing was found up to
    min(n_max, budget).
    """
    x = ops.as_vector(x, op.dim)
    v = detect_super_recurrence(op, x, params)
    if v.certified:
        c = v.best
        return PerturbedResult(True, x.copy(), c.n, c.scalar, "z = x")
    nx = np.linalg.norm(x)
    eps = params.epsilon
    m = ops.materialize_dense(op)
    d = m.shape[0]
    n_hi = min(params.resolve_n_max(), budget)
    phases = np.exp(2j * np.pi * np.arange(8) / 8)
    xhat = x / nx
    chunk = 2048
    p = np.eye(d, dtype=np.complex128)
    n = 0
    while n < n_hi:
        size = min(chunk, n_hi - n)
        stack = np.empty((size, d, d), dtype=np.complex128)
        for i in range(size):
            p = m @ p
            s = np.max(np.abs(p))
            if s == 0:
                return PerturbedResult(False, note=f"T^{n + i + 1} = 0")
            p = p / s
            stack[i] = p
        _, _, vh = np.linalg.svd(stack)
        top = vh[:, : min(2, d), :].conj()  # right singular vectors, shape (size, r, d)
        shifts = (phases[None, None, :, None] * top[:, :, None, :]).reshape(size, -1, d)
        z = x[None, None, :] + (1 - 1e-9) * eps * nx * shifts
        z = np.concatenate([np.broadcast_to(x, (size, 1, d)), z], axis=1)
        img = np.einsum("nij,nkj->nki", stack, z)
        norms = np.linalg.norm(img, axis=2)
        proj = img @ xhat.conj()
        gap = np.linalg.norm(img - proj[..., None] * xhat[None, None, :], axis=2) / np.where(norms > 0, norms, np.inf)
        # relative residual of the best scalar: ||x|| * gap(image, x)
        hits = np.argwhere((gap <= eps * (1 - 1e-9)) & (np.arange(size)[:, None] + n + 1 >= params.n_min))
        if hits.size:
            i, k = hits[0]
            zz = z[i, k].copy()
            nn = int(n + i + 1)
            y, e = power_apply(op, zz, nn)
            lam = orb.best_scalar(x, y) * 2.0 ** (-e)
            return PerturbedResult(True, zz, nn, complex(lam), "perturbed along a singular direction")
        n += size
    return PerturbedResult(False, note=f"no perturbed return up to n={n_hi}")


# -- nested balls ---------------------------------------------------------

@dataclass
class NestedBallTrace:
    centers: list = field(default_factory=list)
    radii: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    bounds: list = field(default_factory=list)
    complete: bool = True
    note: str = ""

    @property
    def point(self) -> np.ndarray:
        return self.centers[-1]

    def to_json(self) -> dict:
        return {
            "centers": [ops.vector_to_json(c) for c in self.centers],
            "radii": list(self.radii),
            "certificates": [c.to_json() for c in self.certificates],
            "bounds": list(self.bounds),
            "complete": self.complete,
            "note": self.note,
        }


def _power_norm(op, n):
    mat, e = _power_matrix(op, n)
    return ops.operator_norm_estimate(ops.Dense(mat)).value * 2.0 ** e


def _power_matrix(op, n):
    cols, exps = [], []
    eye = np.eye(op.dim, dtype=np.complex128)
    for i in range(op.dim):
        y, e = power_apply(op, eye[:, i], n)
        cols.append(y)
        exps.append(e)
    top = max(exps)
    return np.column_stack([np.ldexp(c.real, ex - top) + 1j * np.ldexp(c.imag, ex - top)
                            for c, ex in zip(cols, exps)]), top


def refine_srec_vector(op: OperatorSpec, seed_ball_center, seed_radius: float, depth: int,
                       params: DetectionParams = DetectionParams(), seed: int = 0) -> NestedBallTrace:
    """Nested-ball construction of a super-recurrent vector inside a seed ball.

    Level k picks a point c_k in ball k-1 with a return (n_k, lam_k),
    n_k > n_{k-1}, and a radius r_k small enough that ball k sits inside
    ball k-1, lam_k T^{n_k} maps ball k into ball k-1, and
    ``(1 + |lam_k| ||T^{n_k}||) r_k + ||lam_k T^{n_k} c_k - c_k|| <= 2^{1-k}``.
    Every point y of the last ball then satisfies
    ``||lam_k T^{n_k} y - y|| <= 2^{1-k}`` for each level (absolute norms);
    ``bounds[k-1]`` records that level's bound and the certificates are
    replayed at the final center.
    """
    c = ops.as_vector(seed_ball_center, op.dim)
    r = float(seed_radius)
    if r <= 0:
        raise RejectedInputError("seed radius must be positive")
    rng = np.random.default_rng(seed)
    trace = NestedBallTrace([c.copy()], [r], [], [])
    raw = []
    n_prev = params.n_min - 1
    structure = operator_structure(op)
    for k in range(1, depth + 1):
        target = min(2.0 ** (-k), r / 2)
        found = None
        tries = [c] + [c + (r / 2) * rng.uniform(0, 1) ** (1 / op.dim) * _unit(rng, op.dim) for _ in range(8)]
        for z in tries:
            nz = np.linalg.norm(z)
            if nz == 0:
                continue
            eps_rel = min(0.5, 0.5 * target / nz)
            p = DetectionParams(eps_rel, params.n_max, n_prev + 1)
            v = detect_super_recurrence(op, z, p, structure)
            if v.certified:
                found = (z, v.certificates[0])
                break
        if found is None:
            trace.complete = False
            trace.note = f"no return found at level {k}"
            break
        z, cert = found
        lam = cert.scalar
        tn = _power_norm(op, cert.n)
        rho = cert.residual * np.linalg.norm(z)
        image_center_gap = rho + np.linalg.norm(z - c)
        slack = [
            (2.0 ** (1 - k) - rho) / (1 + abs(lam) * tn),
            r - np.linalg.norm(z - c),
            (r - image_center_gap) / (abs(lam) * tn) if lam != 0 else np.inf,
            2.0 ** (-k) * trace.radii[0],
        ]
        r_new = 0.5 * min(slack)
        if r_new <= 0:
            trace.complete = False
            trace.note = f"could not fit a ball at level {k}"
            break
        c, r, n_prev = z, r_new, cert.n
        trace.centers.append(c.copy())
        trace.radii.append(r)
        trace.bounds.append(2.0 ** (1 - k))
        raw.append(cert)
    y = trace.point
    trace.certificates = [
        ReturnCertificate(ct.n, ct.lam, verify_certificate(op, y, ct), ct.log_scale) for ct in raw
    ]
    return trace


def _unit(rng, d):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


# -- hyperplane restriction -----------------------------------------------

@dataclass
class HyperplaneDecomposition:
    """X0 = ker(<functional, .>) with orthonormal ``basis`` columns; ``compressed`` is T on X0."""

    lam: complex
    functional: np.ndarray
    basis: np.ndarray
    compressed: OperatorSpec
    invariance_residual: float
    eigen_residual: float

    def scaled_restriction(self) -> OperatorSpec:
        """lam^{-1} T restricted to X0."""
        return ops.Scaled(1.0 / self.lam, self.compressed)

    def to_json(self) -> dict:
        return {
            "lambda": ops.scalar_to_json(self.lam),
            "functional": ops.vector_to_json(self.functional),
            "basis": [ops.vector_to_json(b) for b in self.basis.T],
            "compressed": ops.to_json(self.compressed),
            "invariance_residual": self.invariance_residual,
            "eigen_residual": self.eigen_residual,
        }


def hyperplane_restriction(op: OperatorSpec, lam: complex, tol: float = 1e-6) -> HyperplaneDecomposition:
    """T-invariant hyperplane X0 = ker(x0*) for a dual eigenvalue ``lam``.

    ``lam`` is an eigenvalue of the functional action x* -> x* o T, so the
    Hilbert adjoint satisfies ``T^H f = conj(lam) f`` (``f`` represents x0*).
    ``f`` comes from inverse iteration (3 random restarts); the basis of X0
    is Gram-Schmidt on the standard basis, and T is compressed onto it.
    """
    d = op.dim
    if d < 2:
        raise RejectedInputError("hyperplane restriction needs dim >= 2")
    lam = complex(lam)
    report = spec.spectrum(op)
    dist = np.abs(report.points - lam)
    j = int(np.argmin(dist))
    if dist[j] > tol * max(1.0, abs(lam)):
        raise RejectedInputError(f"{lam} is not an eigenvalue of the adjoint action (nearest {report.points[j]})")
    mu = complex(report.points[j])
    mult = min(report.multiplicities, key=lambda q: abs(q.eigenvalue - mu))
    if mult.geometric < mult.algebraic:
        raise InconclusiveError(f"eigenvalue {mu} is defective", {"multiplicity": mult})
    m = ops.materialize_dense(op)
    norm = max(1.0, float(np.linalg.norm(m, 2)))
    if np.count_nonzero(m - np.diag(np.diag(m))) == 0:
        f = np.zeros(d, dtype=np.complex128)
        f[int(np.argmin(np.abs(np.diag(m) - mu)))] = 1.0
        res = float(np.linalg.norm(m.conj().T @ f - np.conj(mu) * f))
    else:
        f, res = spec.inverse_iteration(m.conj().T, np.conj(mu), restarts=3)
        if f is None or res > 1e-10 * norm:
            raise InconclusiveError(f"inverse iteration residual {res:.3g} above 1e-10",
                                    {"residual": res})
    pivot = int(np.argmax(np.abs(f)))
    cols = []
    for i in range(d):
        if i == pivot:
            continue
        v = np.zeros(d, dtype=np.complex128)
        v[i] = 1.0
        for _ in range(2):
            v = v - np.vdot(f, v) * f
            for b in cols:
                v = v - np.vdot(b, v) * b
        cols.append(v / np.linalg.norm(v))
    basis = np.column_stack(cols)
    comp = basis.conj().T @ m @ basis
    inv_res = float(np.linalg.norm(m @ basis - basis @ comp))
    if np.count_nonzero(comp - np.diag(np.diag(comp))) == 0:
        compressed = ops.Diagonal(np.diag(comp))
    else:
        compressed = ops.Dense(comp)
    return HyperplaneDecomposition(mu, f, basis, compressed, inv_res, res)
