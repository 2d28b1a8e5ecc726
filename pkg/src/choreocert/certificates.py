"""Machine-checkable proof certificates.

A certificate is one text document: a JSON body in which every float is a
lossless hexadecimal string, followed by an informative block of comment
lines with decimal renderings.  Re-running with identical flags and rounding
backend reproduces the document bit for bit except the wall-clock field.

The verifier re-derives each iteration's operator image from the serialized
ingredients alone (candidate, box, defect enclosure, derivative enclosure,
preconditioner) and re-checks the inclusion logic, so a stored verdict can
be audited without any integration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .boxes import IntervalMatrix, IntervalVector
from .convexity import ConvexityCertificate
from .interval import Interval, rounding_backend
from .rootfind import CertificationOutcome, newton_operator, krawczyk_operator

SCHEMA_VERSION = 1
_COMMENT_HEADER = "# --- decimal rendering (informative) ---"


def _hex_vec(v: np.ndarray) -> list[str]:
    return [float(x).hex() for x in np.asarray(v, float)]


def _unhex_vec(data) -> np.ndarray:
    return np.array([float.fromhex(s) for s in data])


def _hex_float(x: float | None):
    return None if x is None else float(x).hex()


def _unhex_float(s):
    return None if s is None else float.fromhex(s)


@dataclass
class ProofCertificate:
    """Existence-proof record for one certification run."""

    problem_id: str
    n_bodies: int
    reduced_dim: int
    reduced_names: tuple[str, ...]
    size_parameter: float | None
    method: str
    h_point: float
    h_set: float
    order: int
    delta: float
    max_iter: int
    candidate: np.ndarray
    box: IntervalVector
    phi_at_candidate: IntervalVector | None
    dphi_on_box: IntervalMatrix | None
    preconditioner: np.ndarray | None
    operator_image: IntervalVector | None
    refined_box: IntervalVector | None
    verdict: str
    cause: str
    iterations: int
    trace: list[dict] = field(default_factory=list)
    crossing_time_point: Interval | None = None
    crossing_time_set: Interval | None = None
    steps_point: int = 0
    steps_set: int = 0
    crossing_notes: dict = field(default_factory=dict)
    wall_clock_seconds: float = 0.0
    rounding: str = ""

    def to_document(self) -> str:
        body = {
            "schema_version": SCHEMA_VERSION,
            "kind": "existence",
            "problem": {
                "id": self.problem_id,
                "n_bodies": self.n_bodies,
                "reduced_dim": self.reduced_dim,
                "reduced_names": list(self.reduced_names),
                "size_parameter": _hex_float(self.size_parameter),
            },
            "method": self.method,
            "parameters": {
                "h_point": _hex_float(self.h_point),
                "h_set": _hex_float(self.h_set),
                "order": self.order,
                "delta": _hex_float(self.delta),
                "max_iter": self.max_iter,
            },
            "candidate": _hex_vec(self.candidate),
            "box": self.box.to_hex(),
            "phi_at_candidate": (self.phi_at_candidate.to_hex()
                                 if self.phi_at_candidate is not None else None),
            "dphi_on_box": (self.dphi_on_box.to_hex()
                            if self.dphi_on_box is not None else None),
            "preconditioner": ([_hex_vec(row) for row in self.preconditioner]
                               if self.preconditioner is not None else None),
            "operator_image": (self.operator_image.to_hex()
                               if self.operator_image is not None else None),
            "refined_box": (self.refined_box.to_hex()
                            if self.refined_box is not None else None),
            "verdict": self.verdict,
            "cause": self.cause,
            "iterations": self.iterations,
            "trace": self.trace,
            "crossing_time_point": (list(self.crossing_time_point.to_hex())
                                    if self.crossing_time_point else None),
            "crossing_time_set": (list(self.crossing_time_set.to_hex())
                                  if self.crossing_time_set else None),
            "crossing_notes": {k: list(v.to_hex())
                               for k, v in sorted(self.crossing_notes.items())},
            "step_counts": {"point": self.steps_point, "set": self.steps_set},
            "wall_clock_seconds": self.wall_clock_seconds,
            "environment": {"rounding_backend": self.rounding or rounding_backend()},
        }
        text = json.dumps(body, sort_keys=True, indent=1)
        lines = [text, _COMMENT_HEADER]
        lines.append(f"# system: {self.problem_id}  method: {self.method}  "
                     f"verdict: {self.verdict}")
        lines.append("# candidate: ("
                     + ", ".join(f"{x:.17g}" for x in self.candidate) + ")")
        if self.size_parameter is not None:
            lines.append(f"# size parameter a = {self.size_parameter:.17g}")
        if self.phi_at_candidate is not None:
            for i, iv in enumerate(self.phi_at_candidate):
                lines.append(f"# defect[{i}] = [{iv.lo:.8e}, {iv.hi:.8e}]  "
                             f"diam {iv.diam():.3e}")
        if self.operator_image is not None:
            for i, iv in enumerate(self.operator_image):
                lines.append(f"# image[{i}] = [{iv.lo:.17g}, {iv.hi:.17g}]")
        return "\n".join(lines) + "\n"


def trace_to_json(outcome: CertificationOutcome) -> list[dict]:
    out = []
    for rec in outcome.trace:
        out.append({
            "index": rec.index,
            "x": _hex_vec(rec.x),
            "X": rec.X.to_hex(),
            "f_x": rec.f_x.to_hex(),
            "df_X": rec.df_X.to_hex(),
            "C": ([_hex_vec(row) for row in rec.C]
                  if rec.C is not None else None),
            "image": rec.image.to_hex(),
            "relation": rec.relation,
        })
    return out


def parse_document(text: str) -> dict:
    """JSON body of a certificate document (comments ignored)."""
    body, _ = json.JSONDecoder().raw_decode(text)
    return body


@dataclass
class VerificationReport:
    ok: bool
    messages: list[str] = field(default_factory=list)

    def add(self, ok: bool, msg: str) -> None:
        self.messages.append(("ok   " if ok else "FAIL ") + msg)
        if not ok:
            self.ok = False


def reverify_document(text: str) -> VerificationReport:
    """Re-check a stored verdict from serialized intervals only.

    Recomputes every iteration's operator image from the stored defect and
    derivative enclosures (bit-identical arithmetic, no integration) and
    re-evaluates the inclusion relations and the chaining between
    iterations.
    """
    body = parse_document(text)
    rep = VerificationReport(ok=True)
    if body.get("kind") == "convexity":
        return _reverify_convexity(body, rep)
    if body.get("kind") != "existence":
        rep.add(False, f"unknown certificate kind {body.get('kind')!r}")
        return rep

    method = body["method"]
    verdict = body["verdict"]
    trace = body["trace"]
    if not trace:
        rep.add(verdict == "Inconclusive",
                "no iterations recorded; only Inconclusive is acceptable")
        return rep

    from .errors import EmptyIntersection

    prev_X = IntervalVector.from_hex(body["box"])
    shrink_emptied = False
    for rec in trace:
        idx = rec["index"]
        x = _unhex_vec(rec["x"])
        X = IntervalVector.from_hex(rec["X"])
        f_x = IntervalVector.from_hex(rec["f_x"])
        df_X = IntervalMatrix.from_hex(rec["df_X"])
        image = IntervalVector.from_hex(rec["image"])

        rep.add(X.subset(prev_X), f"iter {idx}: box is nested in its predecessor")
        rep.add(X.contains_point(x), f"iter {idx}: candidate lies in the box")

        if method == "newton":
            recomputed = newton_operator(x, f_x, df_X)
        else:
            C = np.array([_unhex_vec(r) for r in rec["C"]])
            recomputed = krawczyk_operator(x, X, f_x, df_X, C)
        rep.add(recomputed == image,
                f"iter {idx}: operator image reproduces bit-for-bit")

        if image.subset_interior(X):
            relation = "interior"
        elif image.disjoint(X):
            relation = "disjoint"
        elif X.subset(image):
            relation = "inflating"
        else:
            relation = "overlap"
        rep.add(relation == rec["relation"],
                f"iter {idx}: relation {rec['relation']!r} re-derived")
        shrink_emptied = False
        try:
            prev_X = X.intersect(image)
        except EmptyIntersection:
            shrink_emptied = True
            prev_X = X

    final = trace[-1]["relation"]
    expected = {"interior": "UniqueZero", "disjoint": "NoZero",
                "inflating": "Inconclusive"}.get(final, "Inconclusive")
    if final == "overlap" and shrink_emptied:
        # the loop ends NoZero when the shrink intersection comes up empty
        expected = "NoZero"
    rep.add(verdict == expected,
            f"final verdict {verdict!r} matches last relation {final!r}")

    if verdict == "UniqueZero":
        image = IntervalVector.from_hex(trace[-1]["image"])
        X = IntervalVector.from_hex(trace[-1]["X"])
        rep.add(image.subset_interior(X),
                "certified image strictly inside the certified box")
    return rep


# --- convexity certificates ------------------------------------------------

def convexity_to_document(cert: ConvexityCertificate,
                          wall_clock_seconds: float = 0.0) -> str:
    checks = []
    for c in cert.checks:
        checks.append({
            "step": c.step,
            "body": c.body,
            "axis": c.derivs.axis,
            "condition": c.condition,
            "rate": [c.derivs.independent_rate.lo.hex(),
                     c.derivs.independent_rate.hi.hex()],
            "slope": [c.derivs.slope.lo.hex(), c.derivs.slope.hi.hex()],
            "second": [c.derivs.second.lo.hex(), c.derivs.second.hi.hex()],
            "third": [c.derivs.third.lo.hex(), c.derivs.third.hi.hex()],
            "passed": c.passed,
        })
    body = {
        "schema_version": SCHEMA_VERSION,
        "kind": "convexity",
        "problem": cert.problem,
        "parameters": {"h": _hex_float(cert.h), "order": cert.order},
        "passed": cert.passed,
        "failure": cert.failure,
        "steps_checked": cert.steps_checked,
        "origin_in_first_step": cert.origin_in_first_step,
        "crossing_time": (list(map(_hex_float,
                                   (cert.crossing_time.lo, cert.crossing_time.hi)))
                          if cert.crossing_time else None),
        "checks": checks,
        "wall_clock_seconds": wall_clock_seconds,
        "environment": {"rounding_backend": rounding_backend()},
    }
    lines = [json.dumps(body, sort_keys=True, indent=1), _COMMENT_HEADER]
    lines.append(f"# convexity of {cert.problem}: "
                 f"{'PASS' if cert.passed else 'FAIL'} over "
                 f"{cert.steps_checked} steps at h={cert.h}, order={cert.order}")
    for c in cert.checks:
        if c.step in (1, 2, 37):
            gd = c.derivs
            lines.append(
                f"# step {c.step} body {c.body} [{gd.axis}, {c.condition}]: "
                f"rate [{gd.independent_rate.lo:.6g},{gd.independent_rate.hi:.6g}] "
                f"second [{gd.second.lo:.6g},{gd.second.hi:.6g}] "
                f"third [{gd.third.lo:.6g},{gd.third.hi:.6g}]")
    return "\n".join(lines) + "\n"


def _reverify_convexity(body: dict, rep: VerificationReport) -> VerificationReport:
    for c in body["checks"]:
        second = Interval.from_hex(*c["second"])
        third = Interval.from_hex(*c["third"])
        rate = Interval.from_hex(*c["rate"])
        where = f"step {c['step']} body {c['body']}"
        rep.add(not rate.contains_zero(), f"{where}: graph axis is valid")
        if c["condition"] == "inflection":
            rep.add(second.contains_zero() and not third.contains_zero(),
                    f"{where}: unique-inflection condition re-checked")
        else:
            rep.add(not second.contains_zero(),
                    f"{where}: nonvanishing-curvature condition re-checked")
    rep.add(bool(body["passed"]) == all(c["passed"] for c in body["checks"]),
            "stored verdict consistent with stored checks")
    return rep
