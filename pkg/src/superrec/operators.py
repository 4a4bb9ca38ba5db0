"""Symbolic operators on C^n.

Every operator is an immutable description (``Dense``, ``Diagonal``,
``WeightedBackwardShift``, ``DirectSum``, ``Scaled``, ``Power``,
``Polynomial``) that is applied structurally; the dense matrix is only built
on request by :func:`materialize_dense`.  Vectors are 1-D ``complex128``
numpy arrays with the Euclidean norm.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .exceptions import RejectedInputError

MAX_DIM = 64


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


def _check_finite(a, what):
    if not np.all(np.isfinite(a)):
        raise RejectedInputError(f"{what} contains NaN or inf")


def as_vector(v, dim: int | None = None) -> np.ndarray:
    """Coerce ``v`` to a finite complex vector, optionally of a given dimension."""
    x = np.asarray(v, dtype=np.complex128)
    if x.ndim != 1 or x.size == 0:
        raise RejectedInputError(f"expected a non-empty 1-D vector, got shape {x.shape}")
    _check_finite(x, "vector")
    if dim is not None and x.size != dim:
        raise RejectedInputError(f"dimension mismatch: operator has dim {dim}, vector has {x.size}")
    return x


@dataclass(frozen=True, eq=False)
class Dense:
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise RejectedInputError(f"dense matrix must be square and non-empty, got {m.shape}")
        _check_finite(m, "matrix")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class Diagonal:
    entries: np.ndarray

    def __post_init__(self):
        e = _frozen(self.entries).ravel()
        if e.size == 0:
            raise RejectedInputError("diagonal needs at least one entry")
        _check_finite(e, "diagonal entries")
        object.__setattr__(self, "entries", e)

    @property
    def dim(self) -> int:
        return self.entries.size


@dataclass(frozen=True, eq=False)
class WeightedBackwardShift:
    """Truncation of (x1, x2, ...) -> (w1 x2, w2 x3, ...) to ``dim`` coordinates.

    Truncations are nilpotent; they exist for illustration and any detection
    verdict on them is a truncation artifact.
    """

    weights: np.ndarray
    dim: int

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if int(self.dim) < 1:
            raise RejectedInputError("shift dim must be positive")
        if w.size != int(self.dim) - 1:
            raise RejectedInputError(f"shift of dim {self.dim} needs {int(self.dim) - 1} weights, got {w.size}")
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise RejectedInputError("shift weights must be positive and finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "dim", int(self.dim))


@dataclass(frozen=True, eq=False)
class DirectSum:
    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise RejectedInputError("direct sum needs at least one part")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self) -> int:
        return sum(p.dim for p in self.parts)


@dataclass(frozen=True, eq=False)
class Scaled:
    c: complex
    inner: "OperatorSpec"

    def __post_init__(self):
        c = complex(self.c)
        if c == 0 or not np.isfinite(c):
            raise RejectedInputError("scale factor must be nonzero and finite")
        object.__setattr__(self, "c", c)

    @property
    def dim(self) -> int:
        return self.inner.dim


@dataclass(frozen=True, eq=False)
class Power:
    p: int
    inner: "OperatorSpec"

    def __post_init__(self):
        if int(self.p) != self.p or int(self.p) < 1:
            raise RejectedInputError(f"power must be a positive integer, got {self.p}")
        object.__setattr__(self, "p", int(self.p))

    @property
    def dim(self) -> int:
        return self.inner.dim


@dataclass(frozen=True, eq=False)
class Polynomial:
    """p(T) = sum_k coeffs[k] T^k."""

    coeffs: np.ndarray
    inner: "OperatorSpec"

    def __post_init__(self):
        c = _frozen(self.coeffs).ravel()
        _check_finite(c, "polynomial coefficients")
        if c.size == 0 or not np.any(c != 0):
            raise RejectedInputError("polynomial needs a nonzero coefficient")
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.inner.dim


OperatorSpec = Union[Dense, Diagonal, WeightedBackwardShift, DirectSum, Scaled, Power, Polynomial]
_VARIANTS = (Dense, Diagonal, WeightedBackwardShift, DirectSum, Scaled, Power, Polynomial)


def is_operator(obj) -> bool:
    return isinstance(obj, _VARIANTS)


def apply(op: OperatorSpec, v) -> np.ndarray:
    """Return ``op @ v`` computed from the structure of ``op``."""
    x = as_vector(v, op.dim)
    return _apply(op, x)


def _apply(op, x):
    if isinstance(op, Dense):
        return op.matrix @ x
    if isinstance(op, Diagonal):
        return op.entries * x
    if isinstance(op, WeightedBackwardShift):
        out = np.zeros_like(x)
        out[:-1] = op.weights * x[1:]
        return out
    if isinstance(op, DirectSum):
        pieces, i = [], 0
        for part in op.parts:
            pieces.append(_apply(part, x[i:i + part.dim]))
            i += part.dim
        return np.concatenate(pieces)
    if isinstance(op, Scaled):
        return op.c * _apply(op.inner, x)
    if isinstance(op, Power):
        y = x
        for _ in range(op.p):
            y = _apply(op.inner, y)
        return y
    if isinstance(op, Polynomial):
        # Horner: (((c_m T + c_{m-1}) T + ...) T + c_0) x
        y = op.coeffs[-1] * x
        for c in op.coeffs[-2::-1]:
            y = _apply(op.inner, y) + c * x
        return y
    raise RejectedInputError(f"not an operator spec: {type(op).__name__}")


def adjoint(op: OperatorSpec) -> OperatorSpec:
    """Conjugate-transpose, kept structural wherever the variant allows."""
    if isinstance(op, Dense):
        return Dense(op.matrix.conj().T)
    if isinstance(op, Diagonal):
        return Diagonal(op.entries.conj())
    if isinstance(op, WeightedBackwardShift):
        return Dense(materialize_dense(op).conj().T)
    if isinstance(op, DirectSum):
        return DirectSum(tuple(adjoint(p) for p in op.parts))
    if isinstance(op, Scaled):
        return Scaled(op.c.conjugate(), adjoint(op.inner))
    if isinstance(op, Power):
        return Power(op.p, adjoint(op.inner))
    if isinstance(op, Polynomial):
        return Polynomial(op.coeffs.conj(), adjoint(op.inner))
    raise RejectedInputError(f"not an operator spec: {type(op).__name__}")


def materialize_dense(op: OperatorSpec) -> np.ndarray:
    """Dense matrix whose columns are ``apply(op, e_i)``."""
    if isinstance(op, Dense):
        return np.array(op.matrix)
    n = op.dim
    if n > MAX_DIM:
        raise RejectedInputError(f"dimension {n} exceeds {MAX_DIM}")
    eye = np.eye(n, dtype=np.complex128)
    return np.column_stack([_apply(op, eye[:, i]) for i in range(n)])


class NormEstimate(NamedTuple):
    value: float
    converged: bool


def operator_norm_estimate(op: OperatorSpec, iterations: int = 50) -> NormEstimate:
    """Estimate ||op||_2 by power iteration on the Gram matrix T*T.

    The iteration squares the (normalized) Gram matrix, so ``iterations``
    steps resolve the top singular value even for tiny spectral gaps.  The
    returned value is padded by a few ulps so that it can serve as an upper
    bound in residual inequalities.
    """
    m = materialize_dense(op)
    gram = m.conj().T @ m
    scale = np.linalg.norm(gram)
    if scale == 0:
        return NormEstimate(0.0, True)
    b = gram / scale
    for _ in range(iterations):
        nb = b @ b
        s = np.linalg.norm(nb)
        if s == 0:
            break
        nb /= s
        done = np.linalg.norm(nb - b) < 1e-15
        b = nb
        if done:
            break
    v = b[:, int(np.argmax(np.linalg.norm(b, axis=0)))]
    v = v / np.linalg.norm(v)
    for _ in range(3):
        w = gram @ v
        v = w / np.linalg.norm(w)
    gv = gram @ v
    rho = float(np.real(np.vdot(v, gv)))
    converged = bool(np.linalg.norm(gv - rho * v) <= 1e-10 * max(rho, 1e-300))
    n = m.shape[0]
    value = np.sqrt(max(rho, 0.0)) * (1 + 8 * n * np.finfo(float).eps)
    return NormEstimate(float(value), converged)


class DenseRangeResult(NamedTuple):
    dense: bool
    determinant: complex
    ratio: float

    def __bool__(self):
        return self.dense


def dense_range_check(op: OperatorSpec, tol: float = 1e-10) -> DenseRangeResult:
    """Decide surjectivity (dense range in finite dimension) from a scaled determinant.

    The determinant is divided by the product of row norms (Hadamard's bound),
    so the ratio lies in [0, 1] and is invariant under scaling of ``op``.
    """
    m = materialize_dense(op)
    det = complex(np.linalg.det(m))
    rows = np.linalg.norm(m, axis=1)
    if np.any(rows == 0):
        return DenseRangeResult(False, det, 0.0)
    # product of row norms in log space to dodge over/underflow
    ratio = float(np.exp(np.log(abs(det)) - np.sum(np.log(rows)))) if det != 0 else 0.0
    return DenseRangeResult(ratio > tol, det, ratio)


# -- JSON grammar ---------------------------------------------------------

def scalar_to_json(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def scalar_from_json(obj, path="scalar") -> complex:
    if isinstance(obj, bool):
        raise RejectedInputError(f"{path}: expected [re, im], got a boolean")
    if isinstance(obj, (int, float)):
        z = complex(obj)
    elif isinstance(obj, (list, tuple)) and len(obj) == 2 and all(
            isinstance(t, (int, float)) and not isinstance(t, bool) for t in obj):
        z = complex(obj[0], obj[1])
    else:
        raise RejectedInputError(f"{path}: expected [re, im], got {obj!r}")
    if not np.isfinite(z):
        raise RejectedInputError(f"{path}: non-finite scalar")
    return z


def vector_to_json(v) -> list:
    return [scalar_to_json(z) for z in np.asarray(v)]


def vector_from_json(obj, path="vector") -> np.ndarray:
    if not isinstance(obj, (list, tuple)) or not obj:
        raise RejectedInputError(f"{path}: expected a non-empty list of [re, im]")
    return np.array([scalar_from_json(z, f"{path}[{i}]") for i, z in enumerate(obj)])


def to_json(op: OperatorSpec) -> dict:
    """Serialize to the ``kind``-discriminated JSON grammar."""
    if isinstance(op, Dense):
        return {"kind": "dense", "matrix": [vector_to_json(row) for row in op.matrix]}
    if isinstance(op, Diagonal):
        return {"kind": "diagonal", "entries": vector_to_json(op.entries)}
    if isinstance(op, WeightedBackwardShift):
        return {"kind": "shift", "weights": [float(w) for w in op.weights], "dim": op.dim}
    if isinstance(op, DirectSum):
        return {"kind": "direct_sum", "parts": [to_json(p) for p in op.parts]}
    if isinstance(op, Scaled):
        return {"kind": "scaled", "c": scalar_to_json(op.c), "inner": to_json(op.inner)}
    if isinstance(op, Power):
        return {"kind": "power", "p": op.p, "inner": to_json(op.inner)}
    if isinstance(op, Polynomial):
        return {"kind": "polynomial", "coeffs": vector_to_json(op.coeffs), "inner": to_json(op.inner)}
    raise RejectedInputError(f"not an operator spec: {type(op).__name__}")


def _field(obj, key, path):
    if key not in obj:
        raise RejectedInputError(f"{path}: missing field '{key}'")
    return obj[key]


def from_json(obj, path: str = "operator") -> OperatorSpec:
    """Parse the JSON grammar; errors name the offending field path."""
    if not isinstance(obj, dict):
        raise RejectedInputError(f"{path}: expected an object, got {type(obj).__name__}")
    kind = _field(obj, "kind", path)
    try:
        if kind == "dense":
            rows = _field(obj, "matrix", path)
            if not isinstance(rows, list) or not rows:
                raise RejectedInputError(f"{path}.matrix: expected a non-empty list of rows")
            m = [vector_from_json(r, f"{path}.matrix[{i}]") for i, r in enumerate(rows)]
            if any(len(r) != len(m) for r in m):
                raise RejectedInputError(f"{path}.matrix: not square")
            return Dense(np.array(m))
        if kind == "diagonal":
            return Diagonal(vector_from_json(_field(obj, "entries", path), f"{path}.entries"))
        if kind == "shift":
            w = _field(obj, "weights", path)
            d = _field(obj, "dim", path)
            if not isinstance(w, list) or not isinstance(d, int) or isinstance(d, bool):
                raise RejectedInputError(f"{path}: shift needs a list of weights and an integer dim")
            return WeightedBackwardShift(np.array(w, dtype=float), d)
        if kind == "direct_sum":
            parts = _field(obj, "parts", path)
            if not isinstance(parts, list) or not parts:
                raise RejectedInputError(f"{path}.parts: expected a non-empty list")
            return DirectSum(tuple(from_json(p, f"{path}.parts[{i}]") for i, p in enumerate(parts)))
        if kind == "scaled":
            return Scaled(scalar_from_json(_field(obj, "c", path), f"{path}.c"),
                          from_json(_field(obj, "inner", path), f"{path}.inner"))
        if kind == "power":
            p = _field(obj, "p", path)
            if not isinstance(p, int) or isinstance(p, bool):
                raise RejectedInputError(f"{path}.p: expected a positive integer")
            return Power(p, from_json(_field(obj, "inner", path), f"{path}.inner"))
        if kind == "polynomial":
            return Polynomial(vector_from_json(_field(obj, "coeffs", path), f"{path}.coeffs"),
                              from_json(_field(obj, "inner", path), f"{path}.inner"))
    except RejectedInputError as exc:
        msg = str(exc)
        if msg.startswith(path):
            raise
        raise RejectedInputError(f"{path}: {msg}") from None
    raise RejectedInputError(f"{path}.kind: unknown kind {kind!r}")


def identity(n: int) -> Diagonal:
    return Diagonal(np.ones(n, dtype=np.complex128))


def direct_sum(*parts: OperatorSpec) -> DirectSum:
    return DirectSum(tuple(parts))


def as_operator(obj) -> OperatorSpec:
    """Accept an operator spec, a square matrix, or a JSON dict."""
    if is_operator(obj):
        return obj
    if isinstance(obj, dict):
        return from_json(obj)
    return Dense(np.asarray(obj, dtype=np.complex128))


def polynomial_of(coeffs: Sequence[complex], op: OperatorSpec) -> Polynomial:
    return Polynomial(np.asarray(coeffs, dtype=np.complex128), op)
