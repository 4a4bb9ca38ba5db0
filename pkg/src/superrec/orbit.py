"""Renormalized orbits and projective geometry on C^n."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .exceptions import RejectedInputError
from .operators import OperatorSpec


@dataclass
class OrbitRecord:
    """``T^n base = exp(log_magnitudes[n]) * directions[n]`` for n = 0..len-1.

    Steps are stored as arrays rather than a list of tuples; ``steps`` gives
    the tuple view.
    """

    base: np.ndarray
    directions: np.ndarray
    log_magnitudes: np.ndarray
    reached_kernel: bool = False

    def __len__(self):
        return len(self.log_magnitudes)

    @property
    def steps(self):
        return [(n, self.directions[n], float(self.log_magnitudes[n])) for n in range(len(self))]

    def vector(self, n: int) -> np.ndarray:
        """Reconstruct T^n base (may overflow for huge orbits; use the ledger instead)."""
        return np.exp(self.log_magnitudes[n]) * self.directions[n]

    def to_jsonl(self) -> str:
        lines = [json.dumps({"n": n, "direction": ops.vector_to_json(d), "log_magnitude": lm})
                 for n, d, lm in self.steps]
        if self.reached_kernel:
            lines.append(json.dumps({"n": len(self), "reached_kernel": True}))
        return "\n".join(lines) + "\n"


def iterate_orbit(op: OperatorSpec, x, N: int) -> OrbitRecord:
    """Orbit x, Tx, ..., T^N x with renormalization at every step.

    Each step applies ``op`` to the previous unit direction and adds the log
    of the resulting norm to the ledger, so magnitudes far outside the float
    range are still tracked.  If an image is exactly zero the record stops
    there with ``reached_kernel`` set.
    """
    x = ops.as_vector(x, op.dim)
    nx = np.linalg.norm(x)
    if nx == 0:
        raise RejectedInputError("orbit of the zero vector")
    dirs = np.empty((N + 1, x.size), dtype=np.complex128)
    logs = np.empty(N + 1)
    dirs[0] = x / nx
    logs[0] = np.log(nx)
    d = dirs[0]
    for n in range(1, N + 1):
        y = ops._apply(op, d)
        ny = math.sqrt(np.vdot(y, y).real)
        if ny == 0:
            return OrbitRecord(x, dirs[:n].copy(), logs[:n].copy(), reached_kernel=True)
        d = y / ny
        dirs[n] = d
        logs[n] = logs[n - 1] + np.log(ny)
    return OrbitRecord(x, dirs, logs)


def projective_gap(x, y) -> float:
    """sin of the angle between the complex lines through x and y.

    Equals min over complex lambda of ||lambda x/|x| - y/|y|||, and is 0
    exactly when x and y are complex-collinear.
    """
    x = ops.as_vector(x)
    y = ops.as_vector(y, x.size)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        raise RejectedInputError("projective gap of a zero vector")
    u, v = x / nx, y / ny
    # orthogonal component instead of sqrt(1 - c^2): no cancellation for tiny gaps
    return float(min(1.0, np.linalg.norm(v - np.vdot(u, v) * u)))


def best_scalar(x, y) -> complex:
    """argmin over lambda of ||lambda y - x||, i.e. <y, x> / <y, y>."""
    x = ops.as_vector(x)
    y = ops.as_vector(y, x.size)
    yy = np.vdot(y, y).real
    if yy == 0:
        raise RejectedInputError("best scalar against the zero vector")
    return complex(np.vdot(y, x) / yy)


def gaps_along(record: OrbitRecord, target=None) -> np.ndarray:
    """Projective gap between ``target`` (default: the base) and every orbit direction."""
    t = record.directions[0] if target is None else ops.as_vector(target, record.base.size)
    t = t / np.linalg.norm(t)
    d = record.directions
    proj = d @ t.conj()
    return np.minimum(1.0, np.linalg.norm(d - proj[:, None] * t[None, :], axis=1))
