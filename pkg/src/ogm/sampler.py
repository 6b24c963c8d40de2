"""Turning a plan and a shot budget into a concrete list of bases to measure."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ParseError, PlanError
from .observable import Observable
from .pauli import PauliString, parse_pauli
from .plan import Group, MeasurementPlan, PlanDiagnostics

FORMAT_VERSION = 1
RESIDUAL_RULES = ("systematic", "bernoulli")

# (x, z) bit pairs for X, Y, Z in PRODUCT_LETTERS order
_LETTER_X = np.array([1, 1, 0], dtype=np.uint64)
_LETTER_Z = np.array([0, 1, 1], dtype=np.uint64)


@dataclass(frozen=True)
class FixedMeasurementList:
    """Bases with positive shot counts; ``total`` is the budget ``T``."""

    n: int
    entries: tuple

    def __post_init__(self):
        for basis, shots in self.entries:
            if basis.n != self.n:
                raise PlanError(f"basis {basis.text} does not act on {self.n} qubits")
            if int(shots) != shots or shots < 1:
                raise PlanError(f"shot count for {basis.text} must be a positive integer, got {shots!r}")

    @property
    def total(self) -> int:
        return int(sum(s for _, s in self.entries))

    @property
    def bases(self) -> list:
        return [b for b, _ in self.entries]

    @property
    def shots(self) -> np.ndarray:
        return np.array([s for _, s in self.entries], dtype=np.int64)

    def shots_for(self, basis: PauliString) -> int:
        return int(sum(s for b, s in self.entries if b == basis))

    def coverage(self, obs: Observable) -> np.ndarray:
        """``s_j``: number of shots whose basis covers term ``j``."""
        if not self.entries or obs.m == 0:
            return np.zeros(obs.m, dtype=np.int64)
        cov = kernels.cover_matrix(obs.paulis, self.bases)
        return cov.astype(np.int64) @ self.shots


def _check_budget(T):
    if int(T) != T or T < 1:
        raise PlanError(f"sample budget T must be a positive integer, got {T!r}")
    return int(T)


def draw_iid(plan: MeasurementPlan, T: int, seed: int = 0) -> FixedMeasurementList:
    """``T`` independent basis draws from the plan, aggregated by basis.

    Explicit plans keep group order; product plans list bases by text.
    """
    T = _check_budget(T)
    rng = np.random.default_rng(seed)
    if plan.kind != "product":
        counts = rng.multinomial(T, plan.probabilities)
        return FixedMeasurementList(plan.n, tuple((g.basis, int(c)) for g, c in zip(plan.groups, counts) if c))
    x = np.zeros(T, dtype=np.uint64)
    z = np.zeros(T, dtype=np.uint64)
    for i in range(plan.n):
        letters = rng.choice(3, size=T, p=plan.product_dist[i])
        bit = np.uint64(1 << (plan.n - 1 - i))
        x |= _LETTER_X[letters] * bit
        z |= _LETTER_Z[letters] * bit
    keys, counts = np.unique(np.stack([x, z], axis=1), axis=0, return_counts=True)
    entries = [(PauliString(plan.n, int(kx), int(kz)), int(c)) for (kx, kz), c in zip(keys, counts)]
    entries.sort(key=lambda e: e[0].text)
    return FixedMeasurementList(plan.n, tuple(entries))


def _systematic(residual, extra_total, rng):
    """One uniform offset, ``extra_total`` evenly spaced points; basis ``j`` gains one shot w.p. ``r_j``."""
    out = np.zeros(residual.size, dtype=np.int64)
    if extra_total <= 0:
        return out
    edges = np.cumsum(residual)
    edges *= extra_total / edges[-1]
    points = rng.random() + np.arange(extra_total)
    idx = np.searchsorted(edges, points, side="right")
    np.add.at(out, np.minimum(idx, residual.size - 1), 1)
    return out


def _bernoulli(residual, extra_total, kt, rng):
    """Independent residual draws, then top up or trim to hit the budget."""
    out = (rng.random(residual.size) < residual).astype(np.int64)
    short = extra_total - int(out.sum())
    if short > 0:
        # top-up: one shot each to bases whose share K_j*T is below one, then cycle
        light = [j for j in range(residual.size) if kt[j] < 1.0] or list(range(residual.size))
        for step in range(short):
            out[light[step % len(light)]] += 1
    elif short < 0:
        # trim from the lightest bases first, never below their floor allocation
        for j in range(residual.size - 1, -1, -1):
            while short < 0 and out[j] > 0:
                out[j] -= 1
                short += 1
    return out


def partial_derandomize(plan: MeasurementPlan, T: int, seed: int = 0,
                        residual: str = "systematic") -> FixedMeasurementList:
    """Deterministic ``floor(K_j T)`` shots per basis plus randomly placed residual shots.

    Bases are visited by descending ``K`` (ties keep plan order). Under both
    residual rules basis ``j`` gains its extra shot with probability
    ``K_j T - floor(K_j T)`` and the list holds exactly ``T`` shots.

    Args:
        plan: plan with explicit groups.
        T: shot budget.
        seed: RNG seed for the residual draws.
        residual: ``"systematic"`` spaces the residual shots along the
            cumulative residual mass with a single uniform offset, which
            keeps the expected count of every basis at ``K_j T``.
            ``"bernoulli"`` draws each residual independently and then tops
            up or trims to ``T``; the correction perturbs the expectations.
    """
    T = _check_budget(T)
    if plan.kind == "product":
        raise PlanError("partial derandomization needs a plan with explicit groups")
    if residual not in RESIDUAL_RULES:
        raise PlanError(f"unknown residual rule {residual!r}; choose from {RESIDUAL_RULES}")
    k = plan.probabilities
    order = sorted(range(k.size), key=lambda j: (-k[j], j))
    kt = k[order] * T
    base = np.floor(kt).astype(np.int64)
    extra_total = T - int(base.sum())
    frac = kt - base
    rng = np.random.default_rng(seed)
    if residual == "systematic":
        extra = _systematic(frac, extra_total, rng)
    else:
        extra = _bernoulli(frac, extra_total, kt, rng)
    shots = base + extra
    entries = tuple((plan.groups[j].basis, int(s)) for j, s in zip(order, shots) if s > 0)
    return FixedMeasurementList(plan.n, entries)


def plan_from_list(mlist: FixedMeasurementList, obs: Observable) -> MeasurementPlan:
    """An ``external`` plan with ``K(P) = shots(P) / T``; members are the covered terms."""
    if not mlist.entries:
        raise PlanError("measurement list is empty")
    merged = {}
    for b, s in mlist.entries:
        merged[b] = merged.get(b, 0) + s
    bases = list(merged)
    k = np.array([merged[b] for b in bases], dtype=float)
    k /= k.sum()
    cov = kernels.cover_matrix(obs.paulis, bases) if obs.m else np.zeros((0, len(bases)), dtype=bool)
    paulis = obs.paulis
    groups = []
    for s, b in enumerate(bases):
        members = tuple(paulis[j] for j in np.flatnonzero(cov[:, s]))
        groups.append(Group(members, b, float(np.abs(obs.coeffs[cov[:, s]]).sum())))
    c = cov.astype(float) @ k
    on = c > 0
    w2 = obs.coeffs ** 2
    diag = float(np.sum(w2[on] / c[on]))
    uncovered = tuple(paulis[j] for j in np.flatnonzero(~on))
    diagnostics = PlanDiagnostics(diag, diag, float(np.abs(obs.coeffs[~on]).sum()), len(groups), 0)
    return MeasurementPlan("external", obs.n, tuple(groups), k, uncovered=uncovered, diagnostics=diagnostics)


def list_to_dict(mlist: FixedMeasurementList) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "n": mlist.n,
        "total": mlist.total,
        "entries": [{"basis": b.text, "shots": int(s)} for b, s in mlist.entries],
    }


def list_from_dict(d) -> FixedMeasurementList:
    # a bare [{basis, shots}, ...] array is accepted as well
    if isinstance(d, list):
        d = {"format_version": FORMAT_VERSION, "entries": d}
    try:
        if d.get("format_version") != FORMAT_VERSION:
            raise ParseError(f"unsupported list format_version {d.get('format_version')!r}")
        entries = tuple((parse_pauli(e["basis"]), int(e["shots"])) for e in d["entries"])
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(f"malformed measurement list: {e}") from None
    if not entries and "n" not in d:
        raise ParseError("empty measurement list without a qubit count")
    n = int(d.get("n", entries[0][0].n if entries else 0))
    return FixedMeasurementList(n, entries)


def save_list(mlist: FixedMeasurementList, path):
    Path(path).write_text(json.dumps(list_to_dict(mlist), indent=2) + "\n")


def load_list(path) -> FixedMeasurementList:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from None
    return list_from_dict(data)
