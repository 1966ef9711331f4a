"""Lin-2-k instances: data model, text parser and classical objectives."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

BRUTEFORCE_LIMIT = 10**7


class Kind(str, Enum):
    EQUATION = "E"
    INEQUATION = "I"


class InstanceError(ValueError):
    """Malformed instance text or data. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class NonHomogeneousInstance(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Constraint:
    i: int
    j: int
    w: float
    c: int
    kind: Kind

    @property
    def key(self) -> tuple[int, int, int, Kind]:
        return (self.i, self.j, self.c, self.kind)


@dataclass(frozen=True)
class CspInstance:
    """A weighted system of constraints x_i^{-1} x_j (=|!=) omega^c over Z_k.

    Indices are 1-based and every stored constraint has i < j.
    """

    k: int
    num_vars: int
    constraints: tuple[Constraint, ...] = field(default_factory=tuple)

    @property
    def is_homogeneous(self) -> bool:
        return all(con.c == 0 for con in self.constraints)

    def equations(self) -> list[Constraint]:
        return [con for con in self.constraints if con.kind is Kind.EQUATION]

    def inequations(self) -> list[Constraint]:
        return [con for con in self.constraints if con.kind is Kind.INEQUATION]

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "num_vars": self.num_vars,
            "constraints": [
                {"i": con.i, "j": con.j, "w": con.w, "c": con.c, "kind": con.kind.value}
                for con in self.constraints
            ],
        }

    def permuted(self, perm: Sequence[int]) -> "CspInstance":
        """Relabel variable v as perm[v-1] (perm is a permutation of 1..N)."""
        raw = [(perm[con.i - 1], perm[con.j - 1], con.w, con.c, con.kind) for con in self.constraints]
        return make_instance(self.k, self.num_vars, raw)


def smooth_constant(k: int) -> float:
    """a_k = |1 - omega^{floor(k/2)}|^2, the squared diameter of the root simplex."""
    return float(abs(1.0 - np.exp(2j * np.pi * (k // 2) / k)) ** 2)


def make_instance(
    k: int,
    num_vars: int,
    raw: Iterable[tuple[int, int, float, int, Kind | str]],
) -> CspInstance:
    """Normalise raw constraints: orient i < j, reduce shifts, merge duplicates."""
    if k < 2:
        raise InstanceError(f"modulus k must be >= 2, got {k}")
    if num_vars < 1:
        raise InstanceError(f"number of variables must be >= 1, got {num_vars}")
    merged: dict[tuple[int, int, int, Kind], float] = {}
    for i, j, w, c, kind in raw:
        kind = Kind(kind)
        _check_constraint(k, num_vars, i, j, w, c, None)
        if i > j:
            i, j, c = j, i, -c
        key = (i, j, c % k, kind)
        merged[key] = merged.get(key, 0.0) + float(w)
    cons = tuple(Constraint(i, j, w, c, kind) for (i, j, c, kind), w in merged.items())
    return CspInstance(k, num_vars, cons)


def _check_constraint(k, n, i, j, w, c, line):
    if not (1 <= i <= n and 1 <= j <= n):
        raise InstanceError(f"index out of range 1..{n}: ({i}, {j})", line)
    if i == j:
        raise InstanceError(f"self-loop on variable {i}", line)
    if not np.isfinite(w) or w < 0:
        raise InstanceError(f"weight must be a nonnegative number, got {w}", line)
    if not 0 <= c < k:
        raise InstanceError(f"shift c must lie in 0..{k - 1}, got {c}", line)


def parse_instance(text: str | bytes) -> CspInstance:
    """Parse the line-oriented ``lin2k <k> <N>`` format."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    header: tuple[int, int] | None = None
    raw = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if header is None:
            if len(parts) != 3 or parts[0] != "lin2k":
                raise InstanceError("header must read 'lin2k <k> <N>'", lineno)
            try:
                header = (int(parts[1]), int(parts[2]))
            except ValueError:
                raise InstanceError("header fields k and N must be integers", lineno) from None
            if header[0] < 2 or header[1] < 1:
                raise InstanceError("header requires k >= 2 and N >= 1", lineno)
            continue
        if len(parts) != 5 or parts[0] not in ("E", "I"):
            raise InstanceError("constraint must read '<E|I> <i> <j> <w> <c>'", lineno)
        try:
            i, j, c = int(parts[1]), int(parts[2]), int(parts[4])
            w = float(parts[3])
        except ValueError:
            raise InstanceError("could not parse constraint fields", lineno) from None
        _check_constraint(header[0], header[1], i, j, w, c, lineno)
        raw.append((i, j, w, c, parts[0]))
    if header is None:
        raise InstanceError("missing header line 'lin2k <k> <N>'", 1)
    return make_instance(header[0], header[1], raw)


def format_instance(inst: CspInstance) -> str:
    lines = [f"lin2k {inst.k} {inst.num_vars}"]
    for con in inst.constraints:
        lines.append(f"{con.kind.value} {con.i} {con.j} {con.w!r} {con.c}")
    return "\n".join(lines) + "\n"


def instance_from_json(data: str | dict) -> CspInstance:
    if isinstance(data, str):
        data = json.loads(data)
    raw = [(d["i"], d["j"], d["w"], d["c"], d["kind"]) for d in data["constraints"]]
    return make_instance(int(data["k"]), int(data["num_vars"]), raw)


def _arrays(inst: CspInstance):
    i = np.array([con.i - 1 for con in inst.constraints], dtype=np.int64)
    j = np.array([con.j - 1 for con in inst.constraints], dtype=np.int64)
    w = np.array([con.w for con in inst.constraints], dtype=float)
    c = np.array([con.c for con in inst.constraints], dtype=np.int64)
    eq = np.array([con.kind is Kind.EQUATION for con in inst.constraints], dtype=bool)
    return i, j, w, c, eq


def _values(inst: CspInstance, assignments: np.ndarray, smooth: bool) -> np.ndarray:
    """Objective for each row of an (M, N) integer array of exponents."""
    k = inst.k
    if not inst.constraints:
        return np.zeros(assignments.shape[0])
    i, j, w, c, eq = _arrays(inst)
    diff = (assignments[:, j] - assignments[:, i] - c[None, :]) % k
    if smooth:
        dist = np.abs(np.exp(2j * np.pi * diff / k) - 1.0) ** 2 / smooth_constant(k)
        score = np.where(eq[None, :], 1.0 - dist, dist)
    else:
        hit = diff == 0
        score = np.where(eq[None, :], hit, ~hit).astype(float)
    return score @ w


def objective_of_assignment(inst: CspInstance, assignment: Sequence[int], smooth: bool = False) -> float:
    """Classical objective at x_v = omega^{assignment[v-1]}."""
    a = np.asarray(assignment, dtype=np.int64)
    if a.shape != (inst.num_vars,):
        raise InstanceError(f"assignment must have length {inst.num_vars}, got {a.shape}")
    return float(_values(inst, a[None, :], smooth)[0])


def objective_by_indicator(inst: CspInstance, assignment: Sequence[int]) -> float:
    """Standard objective through (1/k) sum_s omega^{-cs} x_i^{-s} x_j^s."""
    k = inst.k
    x = np.exp(2j * np.pi * np.asarray(assignment) / k)
    total = 0.0
    for con in inst.constraints:
        ind = sum(
            np.exp(-2j * np.pi * con.c * s / k) * x[con.i - 1] ** (-s) * x[con.j - 1] ** s
            for s in range(k)
        ).real / k
        total += con.w * (ind if con.kind is Kind.EQUATION else 1.0 - ind)
    return float(total)


def classical_value_bruteforce(inst: CspInstance, smooth: bool = False) -> float:
    """Exact classical optimum by enumerating all k^N assignments.

    x_1 is pinned to 1: a global shift x -> omega x leaves every
    x_i^{-1} x_j unchanged, so the enumeration is k times smaller.
    """
    k, n = inst.k, inst.num_vars
    if k**n > BRUTEFORCE_LIMIT:
        raise BudgetExceeded(f"k^N = {k}^{n} exceeds enumeration limit {BRUTEFORCE_LIMIT}")
    if n == 1 or not inst.constraints:
        return float(_values(inst, np.zeros((1, n), dtype=np.int64), smooth)[0])
    best = -np.inf
    chunk = 1 << 16
    rest = itertools.product(range(k), repeat=n - 1)
    while True:
        block = list(itertools.islice(rest, chunk))
        if not block:
            break
        arr = np.zeros((len(block), n), dtype=np.int64)
        arr[:, 1:] = block
        best = max(best, float(_values(inst, arr, smooth).max()))
    return best
