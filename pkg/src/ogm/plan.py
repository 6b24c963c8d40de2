"""Measurement plans: which bases to draw, how often, and how to weight outcomes.

Every scheme reduces to one of three weighting rules for a term ``Q`` and a
drawn basis ``P``:

* ``member``  (l1, ldf): ``1/K(P)`` if ``Q`` is a member of the group of ``P``
* ``cover``   (ogm, external): ``1/chi(Q)`` if ``P`` covers ``Q``
* ``product`` (cs-uniform, lbcs): ``prod_i 1/K_i(Q_i)`` if ``P`` covers ``Q``

``chi(Q)`` is always the probability that the drawn basis yields a usable
outcome for ``Q`` under the rule in force, so each weight has mean one.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ParseError, PlanError
from .pauli import PauliString, covers, parse_pauli

FORMAT_VERSION = 1
PROB_TOL = 1e-12

SCHEME_KIND = {
    "l1": "member",
    "ldf": "member",
    "ogm": "cover",
    "external": "cover",
    "cs-uniform": "product",
    "lbcs": "product",
}
PRODUCT_LETTERS = "XYZ"


@dataclass(frozen=True)
class Group:
    members: tuple
    basis: PauliString
    weight: float = 0.0


@dataclass(frozen=True)
class PlanDiagnostics:
    diag_cost: float
    final_cost: float
    uncovered_bias_bound: float
    group_count: int
    optimizer_iterations: int = 0

    def to_dict(self):
        return {
            "diag_cost": self.diag_cost,
            "final_cost": self.final_cost,
            "uncovered_bias_bound": self.uncovered_bias_bound,
            "group_count": self.group_count,
            "optimizer_iterations": self.optimizer_iterations,
        }


@dataclass(frozen=True, eq=False)
class MeasurementPlan:
    scheme: str
    n: int
    groups: tuple = ()
    probabilities: np.ndarray = None
    product_dist: np.ndarray = None
    mode: str = "iid"
    uncovered: tuple = ()
    diagnostics: PlanDiagnostics = field(default=None, compare=False)

    def __post_init__(self):
        if self.scheme not in SCHEME_KIND:
            raise PlanError(f"unknown scheme {self.scheme!r}")
        if self.kind == "product":
            pd = np.asarray(self.product_dist, dtype=float)
            if pd.shape != (self.n, 3):
                raise PlanError(f"product_dist must have shape ({self.n}, 3)")
            if np.any(pd < 0) or np.any(np.abs(pd.sum(axis=1) - 1.0) > PROB_TOL):
                raise PlanError("each per-qubit distribution must be non-negative and sum to 1")
            object.__setattr__(self, "product_dist", pd)
            object.__setattr__(self, "probabilities", np.zeros(0))
            return
        k = np.asarray(self.probabilities, dtype=float)
        if k.shape != (len(self.groups),):
            raise PlanError("one probability per group is required")
        if len(self.groups) == 0:
            raise PlanError("plan has no groups")
        if np.any(k < 0) or abs(k.sum() - 1.0) > PROB_TOL:
            raise PlanError(f"probabilities must be non-negative and sum to 1 (sum={k.sum()!r})")
        bases = [g.basis for g in self.groups]
        if len(set(bases)) != len(bases):
            raise PlanError("plan bases must be distinct")
        for g in self.groups:
            if g.basis.n != self.n:
                raise PlanError(f"basis {g.basis.text} does not act on {self.n} qubits")
            for q in g.members:
                if not covers(q, g.basis):
                    raise PlanError(f"member {q.text} is not covered by basis {g.basis.text}")
        object.__setattr__(self, "probabilities", k)
        object.__setattr__(self, "_basis_index", {b: i for i, b in enumerate(bases)})

    @property
    def kind(self) -> str:
        return SCHEME_KIND[self.scheme]

    @property
    def bases(self) -> list:
        return [g.basis for g in self.groups]

    def basis_index(self, basis: PauliString) -> int:
        try:
            return self._basis_index[basis]
        except KeyError:
            raise PlanError(f"basis {basis.text} is not part of the plan") from None

    def with_probabilities(self, k, **changes):
        return replace(self, probabilities=np.asarray(k, dtype=float), **changes)


def _normalized(k):
    k = np.asarray(k, dtype=float)
    return k / k.sum()


def normalize_probabilities(k):
    """Renormalize and fold the rounding residue into the largest entry."""
    k = _normalized(k)
    k[np.argmax(k)] += 1.0 - k.sum()
    return k


def chi(plan: MeasurementPlan, paulis) -> np.ndarray:
    """Probability that a drawn basis yields a usable outcome, per term."""
    paulis = list(paulis)
    if plan.kind == "product":
        out = np.ones(len(paulis))
        for j, q in enumerate(paulis):
            for i in range(q.n):
                c = q.letter(i)
                if c != "I":
                    out[j] *= plan.product_dist[i, PRODUCT_LETTERS.index(c)]
        return out
    if not paulis:
        return np.zeros(0)
    if plan.kind == "member":
        out = np.zeros(len(paulis))
        pos = {q: j for j, q in enumerate(paulis)}
        for g, k in zip(plan.groups, plan.probabilities):
            for q in g.members:
                if q in pos:
                    out[pos[q]] += k
        return out
    cov = kernels.cover_matrix(paulis, plan.bases)
    return cov.astype(float) @ plan.probabilities


def usable_matrix(plan: MeasurementPlan, paulis, bases) -> np.ndarray:
    """Boolean ``U[b, j]``: basis ``bases[b]`` yields an outcome credited to term ``j``."""
    paulis, bases = list(paulis), list(bases)
    if plan.kind == "member":
        out = np.zeros((len(bases), len(paulis)), dtype=bool)
        pos = {q: j for j, q in enumerate(paulis)}
        for b, basis in enumerate(bases):
            g = plan.groups[plan.basis_index(basis)]
            for q in g.members:
                if q in pos:
                    out[b, pos[q]] = True
        return out
    return kernels.cover_matrix(paulis, bases).T if paulis and bases else np.zeros((len(bases), len(paulis)), dtype=bool)


def f_matrix(plan: MeasurementPlan, paulis, bases) -> np.ndarray:
    """``F[b, j] = f(bases[b], paulis[j], K)``, zero where the term gets no credit."""
    paulis, bases = list(paulis), list(bases)
    use = usable_matrix(plan, paulis, bases)
    if plan.kind == "member":
        kb = np.array([plan.probabilities[plan.basis_index(b)] for b in bases])
        with np.errstate(divide="ignore"):
            inv = np.where(kb > 0, 1.0 / np.where(kb > 0, kb, 1.0), 0.0)
        return use * inv[:, None]
    c = chi(plan, paulis)
    if np.any(use & (c[None, :] <= 0)):
        raise PlanError("a term is credited by a basis but has zero measurement probability")
    inv = np.where(c > 0, 1.0 / np.where(c > 0, c, 1.0), 0.0)
    return use * inv[None, :]


def covered_mask(plan: MeasurementPlan, paulis) -> np.ndarray:
    return chi(plan, paulis) > 0


# ---------------------------------------------------------------- JSON I/O

def plan_to_dict(plan: MeasurementPlan) -> dict:
    d = {
        "format_version": FORMAT_VERSION,
        "scheme": plan.scheme,
        "n": plan.n,
        "mode": plan.mode,
        "groups": [
            {
                "basis": g.basis.text,
                "probability": float(k),
                "weight": float(g.weight),
                "members": [q.text for q in g.members],
            }
            for g, k in zip(plan.groups, plan.probabilities)
        ],
        "product_dist": None if plan.product_dist is None else [[float(v) for v in row] for row in plan.product_dist],
        "uncovered": [q.text for q in plan.uncovered],
    }
    if plan.diagnostics is not None:
        d["diagnostics"] = plan.diagnostics.to_dict()
    return d


def plan_from_dict(d: dict) -> MeasurementPlan:
    try:
        if d.get("format_version") != FORMAT_VERSION:
            raise ParseError(f"unsupported plan format_version {d.get('format_version')!r}")
        groups = tuple(
            Group(tuple(parse_pauli(t) for t in g["members"]), parse_pauli(g["basis"]), float(g.get("weight", 0.0)))
            for g in d["groups"]
        )
        diag = d.get("diagnostics")
        return MeasurementPlan(
            scheme=d["scheme"],
            n=int(d["n"]),
            groups=groups,
            probabilities=np.array([g["probability"] for g in d["groups"]], dtype=float),
            product_dist=None if d.get("product_dist") is None else np.array(d["product_dist"], dtype=float),
            mode=d.get("mode", "iid"),
            uncovered=tuple(parse_pauli(t) for t in d.get("uncovered", [])),
            diagnostics=None if diag is None else PlanDiagnostics(**diag),
        )
    except (KeyError, TypeError) as e:
        raise ParseError(f"malformed plan document: {e}") from None


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def save_plan(plan: MeasurementPlan, path):
    Path(path).write_text(dumps(plan_to_dict(plan)))


def load_plan(path) -> MeasurementPlan:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from None
    return plan_from_dict(data)
