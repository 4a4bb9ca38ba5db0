"""Operator-level classification and the seeded property suite.

``classify`` combines the spectral necessary conditions (dense range, one
circle for the spectrum and for the adjoint point spectrum), the
sufficient condition (diagonalizable with equal nonzero moduli) and
dynamic evidence from probe vectors.  Only spectral or dense-range facts
can produce ``not_super_recurrent``; probes can only promote to
``super_recurrent``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import generators as gen
from . import operators as ops
from . import recurrence as rec
from . import spectral as spec
from .exceptions import InconclusiveError
from .operators import OperatorSpec

SUPER_RECURRENT = "super_recurrent"
NOT_SUPER_RECURRENT = "not_super_recurrent"
INCONCLUSIVE = "inconclusive"

N_PROBES = 16
PROBE_THRESHOLD = 0.9
# orbit-scan cap per probe when no eigen route applies; keeps classification
# cheap on controls whose outcome is already fixed by the spectrum
PROBE_ORBIT_BUDGET = 2000


def sufficient_condition_check(op: OperatorSpec, tol: float = spec.DEFAULT_TOL,
                               report: Optional[spec.SpectrumReport] = None) -> spec.CheckResult:
    """PASS iff diagonalizable with all eigenvalue moduli equal (within tol) and nonzero."""
    report = spec.spectrum(op, tol) if report is None else report
    if report.diagonalizable is not True:
        why = "not diagonalizable" if report.diagonalizable is False else "diagonalizability undecided"
        return spec.CheckResult(False, note=why)
    circle = spec.component_circle_check(report, tol)
    if not circle.valid:
        return spec.CheckResult(False, note="zero spectrum")
    if not circle.passed:
        return spec.CheckResult(False, witness=circle.witness, note=circle.note)
    if np.min(report.moduli) == 0:
        return spec.CheckResult(False, note="zero eigenvalue")
    return spec.CheckResult(True, circle.radius)


def probe_vectors(dim: int, seed: int = 0, count: int = N_PROBES) -> list:
    """``count`` seeded random unit vectors followed by the standard basis."""
    rng = np.random.default_rng(seed)
    probes = [gen.random_probe(rng, dim) for _ in range(count)]
    probes += list(np.eye(dim, dtype=np.complex128))
    return probes


@dataclass
class SRecClassification:
    operator_id: str
    necessary_pass: bool
    sufficient_pass: bool
    dynamic_status: dict
    final: str
    evidence: dict = field(default_factory=dict)
    witness: Optional[dict] = None

    def to_json(self) -> dict:
        return {
            "operator_id": self.operator_id,
            "final": self.final,
            "necessary_pass": self.necessary_pass,
            "sufficient_pass": self.sufficient_pass,
            "dynamic_status": self.dynamic_status,
            "witness": self.witness,
            "evidence": self.evidence,
        }


def _spectral_witness(check: spec.CheckResult, kind: str) -> dict:
    return {"kind": kind, "eigenvalues": [ops.scalar_to_json(w) for w in check.witness], "note": check.note}


def replay_witness(op: OperatorSpec, witness: dict, tol: float = spec.DEFAULT_TOL) -> bool:
    """Recheck a refutation from scratch; True when it still refutes."""
    kind = witness.get("kind")
    if kind == "dense_range":
        return not ops.dense_range_check(op)
    if kind in ("circle", "adjoint_circle"):
        pts = [ops.scalar_from_json(w) for w in witness["eigenvalues"]]
        m = ops.materialize_dense(op)
        scale = max(1.0, float(np.linalg.norm(m, 2)))
        # both points must be (near) eigenvalues: smallest singular value of M - mu
        for mu in pts:
            if kind == "adjoint_circle":
                mu = np.conj(mu)
                smin = np.linalg.svd(m.conj().T - mu * np.eye(len(m)), compute_uv=False)[-1]
            else:
                smin = np.linalg.svd(m - mu * np.eye(len(m)), compute_uv=False)[-1]
            if smin > 1e-6 * scale:
                return False
        return spec.modulus_spread(pts) > tol
    return False


def classify(op: OperatorSpec, params: rec.DetectionParams = rec.DetectionParams(),
             operator_id: str = "", seed: int = 0, threshold: float = PROBE_THRESHOLD,
             n_probes: int = N_PROBES, orbit_budget: int = PROBE_ORBIT_BUDGET) -> SRecClassification:
    """Operator-level verdict from spectral conditions and probe certificates."""
    tol = spec.DEFAULT_TOL
    try:
        report = spec.spectrum(op, tol)
    except InconclusiveError as exc:
        return SRecClassification(operator_id, False, False, {"status": rec.INCONCLUSIVE},
                                  INCONCLUSIVE, {"error": str(exc)})
    dense = ops.dense_range_check(op)
    circle = spec.component_circle_check(report, tol)
    adjoint = spec.adjoint_point_spectrum_check(report, tol)
    suff = sufficient_condition_check(op, tol, report)
    necessary = bool(dense) and bool(circle) and bool(adjoint)

    structure = rec.operator_structure(op)
    probes = probe_vectors(op.dim, seed, n_probes)
    verdicts = rec.detect_super_recurrence_many(op, probes, params,
                                                structure if structure is not None else False, orbit_budget)
    flags = [v.certified for v in verdicts]
    frac = sum(flags) / len(flags)
    if not necessary:
        dyn = rec.REFUTED
    elif frac >= threshold:
        dyn = rec.CERTIFIED
    else:
        dyn = rec.INCONCLUSIVE
    dynamic = {
        "status": dyn,
        "certified": int(sum(flags)),
        "probes": len(flags),
        "fraction": frac,
        "random_certified": int(sum(flags[:n_probes])),
        "basis_certified": [bool(f) for f in flags[n_probes:]],
        "certificates": [v.best.to_json() if v.certified else None for v in verdicts],
    }

    witness = None
    if not dense:
        witness = {"kind": "dense_range", "determinant": ops.scalar_to_json(dense.determinant),
                   "ratio": dense.ratio}
    elif not circle.passed:
        witness = _spectral_witness(circle, "circle")
    elif not adjoint.passed:
        witness = _spectral_witness(adjoint, "adjoint_circle")

    if witness is not None:
        final = NOT_SUPER_RECURRENT
    elif necessary and (suff.passed or frac >= threshold):
        final = SUPER_RECURRENT
    else:
        final = INCONCLUSIVE
    evidence = {
        "spectrum": report.to_json(),
        "dense_range": {"dense": bool(dense), "ratio": dense.ratio},
        "circle": circle.to_json(),
        "adjoint": adjoint.to_json(),
        "sufficient": suff.to_json(),
    }
    return SRecClassification(operator_id, necessary, bool(suff.passed), dynamic, final, evidence, witness)


# -- property suite ---------------------------------------------------------

CHECKS = (
    "commutant_invariance",
    "polynomial_images",
    "similarity_transfer",
    "direct_sum_factors",
    "power_equivalence",
    "spectral_necessity",
    "hyperplane_recurrence",
    "dense_srec",
)

SUITE_PARAMS = rec.DetectionParams(1e-6)


@dataclass
class CaseResult:
    generator: str
    prop: str
    passed: bool
    witness: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"generator": self.generator, "property": self.prop, "pass": self.passed,
                "witness": self.witness}


@dataclass
class SuiteReport:
    seed: int
    dims: int
    cases: list

    @property
    def totals(self) -> dict:
        out = {}
        for c in self.cases:
            t = out.setdefault(c.prop, {"pass": 0, "fail": 0})
            t["pass" if c.passed else "fail"] += 1
        return out

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.cases)

    def to_json(self) -> dict:
        return {"seed": self.seed, "dims": self.dims, "cases": [c.to_json() for c in self.cases],
                "totals": self.totals, "all_pass": self.all_passed}

    def to_jsonl(self) -> str:
        rows = [dict(index=i, **c.to_json()) for i, c in enumerate(self.cases)]
        rows.append({"totals": self.totals, "all_pass": self.all_passed, "seed": self.seed, "dims": self.dims})
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "generator", "property", "pass", "witness_ref"])
        for i, c in enumerate(self.cases):
            w.writerow([i, c.generator, c.prop, int(c.passed), "" if c.passed else f"case-{i}"])
        return buf.getvalue()


def _dim(rng, dims):
    return int(rng.integers(2, max(2, dims) + 1))


def _fail_witness(op, **extra):
    return dict(operator=ops.to_json(op), **extra)


def check_commutant_invariance(rng, dims, params=SUITE_PARAMS) -> CaseResult:
    """For S = p(T): residual of (n, lam) at Sx <= ||S|| ||x|| / ||Sx|| * residual at x."""
    p = gen.equal_modulus(rng, _dim(rng, dims))
    x = gen.random_probe(rng, p.op.dim)
    s = ops.polynomial_of(gen.random_polynomial(rng), p.op)
    v = rec.detect_super_recurrence(p.op, x, params)
    cert = v.best if v.certified else rec.make_certificate(p.op, x, int(rng.integers(1, 50)))
    return commutant_inequality(p.op, s, x, cert, p.label)


def commutant_inequality(op, s, x, cert, label="pair", slack=1e-10) -> CaseResult:
    x = ops.as_vector(x, op.dim)
    sx = ops.apply(s, x)
    nsx = np.linalg.norm(sx)
    if nsx == 0:
        return CaseResult(label, "commutant_invariance", True, {"note": "Sx = 0, vacuous"})
    r_x = rec.verify_certificate(op, x, cert)
    r_sx = rec.verify_certificate(op, sx, cert)
    norm_s = ops.operator_norm_estimate(s).value
    bound = norm_s * np.linalg.norm(x) / nsx * r_x
    ok = bool(r_sx <= bound + slack)
    w = {"n": cert.n, "residual_x": r_x, "residual_sx": r_sx, "bound": float(bound)}
    if not ok:
        w.update(_fail_witness(op, certificate=cert.to_json(), S=ops.to_json(s)))
    return CaseResult(label, "commutant_invariance", ok, w)


def check_polynomial_images(rng, dims, params=SUITE_PARAMS) -> CaseResult:
    p = gen.equal_modulus(rng, _dim(rng, dims))
    x = gen.random_probe(rng, p.op.dim)
    poly = ops.polynomial_of(gen.random_polynomial(rng), p.op)
    v = rec.detect_super_recurrence(p.op, x, params)
    if not v.certified:
        return CaseResult(p.label, "polynomial_images", False,
                          _fail_witness(p.op, note="x not certified", detail=v.notes))
    px = ops.apply(poly, x)
    if np.linalg.norm(px) < 1e-12:
        return CaseResult(p.label, "polynomial_images", True, {"note": "p(T)x = 0, vacuous"})
    w = rec.detect_super_recurrence(p.op, px, params)
    out = {"n_x": v.best.n, "n_px": w.best.n if w.certified else None}
    if not w.certified:
        out.update(_fail_witness(p.op, vector=ops.vector_to_json(px), detail=w.notes))
    return CaseResult(p.label, "polynomial_images", w.certified, out)


def check_similarity_transfer(rng, dims, params=SUITE_PARAMS, index=0) -> CaseResult:
    d = _dim(rng, dims)
    kind = ("equal_modulus", "unequal_modulus", "jordan")[index % 3]
    p = gen.GENERATORS[kind](rng, d)
    phi = gen.random_similarity(rng, d, 100.0)
    a = classify(p.op, params)
    b = classify(gen.conjugate(p.op, phi), params)
    ok = a.final == b.final
    w = {"final": a.final, "final_conjugated": b.final}
    if not ok:
        w.update(_fail_witness(p.op, phi=[ops.vector_to_json(r) for r in phi]))
    return CaseResult(p.label, "similarity_transfer", ok, w)


def check_direct_sum_factors(rng, dims, params=SUITE_PARAMS, index=0) -> CaseResult:
    if index == 0:
        # the converse fails in general: modulus-mismatched sum of two super-recurrent pieces
        op = ops.direct_sum(ops.Diagonal([1.0]), ops.Diagonal([2.0]))
        c = classify(op, params)
        ok = c.final == NOT_SUPER_RECURRENT and replay_witness(op, c.witness or {})
        return CaseResult("control_diag(1)+diag(2)", "direct_sum_factors", ok,
                          {"final": c.final, "witness": c.witness})
    p = gen.direct_sum(rng, max(2, _dim(rng, dims)))
    x = gen.random_probe(rng, p.op.dim)
    v = rec.detect_super_recurrence(p.op, x, params)
    if not v.certified:
        return CaseResult(p.label, "direct_sum_factors", True, {"note": "sum not certified, vacuous"})
    parts, out, ok = p.op.parts, [], True
    start = 0
    for part in parts:
        xi = x[start:start + part.dim]
        start += part.dim
        if np.linalg.norm(xi) == 0:
            continue
        vi = rec.detect_super_recurrence(part, xi, params)
        out.append(vi.best.n if vi.certified else None)
        ok = ok and vi.certified
    w = {"n_sum": v.best.n, "n_factors": out}
    if not ok:
        w.update(_fail_witness(p.op, vector=ops.vector_to_json(x)))
    return CaseResult(p.label, "direct_sum_factors", ok, w)


def power_transfer(op, x, p, params=SUITE_PARAMS) -> dict:
    """Certificates moved between T and T^p in both directions."""
    tp = ops.Power(p, op)
    down = rec.detect_super_recurrence(tp, x, params)
    diff = None
    if down.certified:
        c = down.best
        moved = rec.ReturnCertificate(p * c.n, c.lam, 0.0, c.log_scale)
        diff = abs(rec.verify_certificate(op, x, moved) - c.residual)
    up = rec.detect_super_recurrence(op, x, params)
    lifted = rec.detect_super_recurrence(tp, x, params) if up.certified else None
    return {
        "p": p,
        "power_certified": down.certified,
        "transfer_difference": diff,
        "base_certified": up.certified,
        "lifted_certified": bool(lifted and lifted.certified),
    }


def check_power_equivalence(rng, dims, params=SUITE_PARAMS, index=0) -> CaseResult:
    p = gen.equal_modulus(rng, _dim(rng, dims))
    x = gen.random_probe(rng, p.op.dim)
    power = (2, 3, 5)[index % 3]
    t = power_transfer(p.op, x, power, params)
    ok = (t["power_certified"] and t["transfer_difference"] <= 1e-10
          and t["base_certified"] and t["lifted_certified"])
    if not ok:
        t.update(_fail_witness(p.op, vector=ops.vector_to_json(x)))
    return CaseResult(p.label, "power_equivalence", bool(ok), t)


def check_spectral_necessity(rng, dims, params=SUITE_PARAMS, index=0) -> CaseResult:
    kind = ("equal_modulus", "unequal_modulus", "jordan", "direct_sum")[index % 4]
    p = gen.GENERATORS[kind](rng, _dim(rng, dims))
    c = classify(p.op, params)
    frac = c.dynamic_status["fraction"]
    passes = bool(spec.CheckResult(**_check_args(c.evidence["circle"]))) and \
        bool(spec.CheckResult(**_check_args(c.evidence["adjoint"])))
    ok = frac < PROBE_THRESHOLD or passes
    w = {"fraction": frac, "spectral_pass": passes, "final": c.final}
    if not ok:
        w.update(_fail_witness(p.op))
    return CaseResult(p.label, "spectral_necessity", ok, w)


def _check_args(js):
    return {"passed": js["passed"], "valid": js["valid"]}


def hyperplane_case(op, rng, epsilon=1e-4, n_max=10 ** 5) -> dict:
    """Restrict to X0 for every eigenvalue; lam^-1 T0 must be certified recurrent."""
    report = spec.spectrum(op)
    params = rec.DetectionParams(epsilon, n_max)
    rows = []
    for mu in report.points:
        h = rec.hyperplane_restriction(op, mu)
        y = gen.random_probe(rng, op.dim - 1)
        v = rec.detect_recurrence(h.scaled_restriction(), y, params)
        rows.append({"lambda": ops.scalar_to_json(h.lam), "invariance_residual": h.invariance_residual,
                     "certified": v.certified, "n": v.best.n if v.certified else None})
    ok = all(r["certified"] and r["invariance_residual"] <= 1e-8 for r in rows)
    return {"ok": ok, "levels": rows}


def check_hyperplane_recurrence(rng, dims, params=SUITE_PARAMS) -> CaseResult:
    p = gen.equal_modulus(rng, max(3, _dim(rng, dims)) if dims >= 3 else 2)
    c = classify(p.op, params)
    if c.final != SUPER_RECURRENT:
        return CaseResult(p.label, "hyperplane_recurrence", False,
                          _fail_witness(p.op, note=f"operator classified {c.final}"))
    res = hyperplane_case(p.op, rng)
    w = {"restrictions": res["levels"]}
    if not res["ok"]:
        w.update(_fail_witness(p.op))
    return CaseResult(p.label, "hyperplane_recurrence", res["ok"], w)


def check_dense_srec(rng, dims, params=SUITE_PARAMS) -> CaseResult:
    p = gen.equal_modulus(rng, _dim(rng, dims))
    c = classify(p.op, params, seed=int(rng.integers(2 ** 31)))
    ok = c.final == SUPER_RECURRENT and c.dynamic_status["random_certified"] == N_PROBES
    w = {"final": c.final, "random_certified": c.dynamic_status["random_certified"]}
    if not ok:
        w.update(_fail_witness(p.op))
    return CaseResult(p.label, "dense_srec", ok, w)


_CHECK_FUNCS: dict[str, Callable] = {
    "commutant_invariance": check_commutant_invariance,
    "polynomial_images": check_polynomial_images,
    "similarity_transfer": check_similarity_transfer,
    "direct_sum_factors": check_direct_sum_factors,
    "power_equivalence": check_power_equivalence,
    "spectral_necessity": check_spectral_necessity,
    "hyperplane_recurrence": check_hyperplane_recurrence,
    "dense_srec": check_dense_srec,
}
_INDEXED = {"similarity_transfer", "direct_sum_factors", "power_equivalence", "spectral_necessity"}


def property_suite(seed: int = 42, dims: int = 6, cases: int = 50, checks=CHECKS,
                   params: rec.DetectionParams = SUITE_PARAMS) -> SuiteReport:
    """Run ``cases`` seeded cases of each named check on operators of dimension 2..dims.

    Case i of check j draws from its own child seed, so results do not
    depend on execution order.  Failures are data, never exceptions.
    """
    root = np.random.SeedSequence(seed)
    children = root.spawn(len(CHECKS))
    out = []
    for name, ss in zip(CHECKS, children):
        if name not in checks:
            continue
        fn = _CHECK_FUNCS[name]
        for i, case_ss in enumerate(ss.spawn(cases)):
            rng = np.random.default_rng(case_ss)
            kwargs = {"index": i} if name in _INDEXED else {}
            try:
                out.append(fn(rng, dims, params, **kwargs))
            except (InconclusiveError, ValueError) as exc:
                out.append(CaseResult("error", name, False, {"error": f"{type(exc).__name__}: {exc}"}))
    return SuiteReport(seed, dims, out)
