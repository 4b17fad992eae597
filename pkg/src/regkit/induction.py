"""Cauchy-iteration engine: execute and verify the chain-building step.

Given a mapping Phi from ladder levels to subsets of a finite metric
space, sequences a_n (down to 0, a_0 = t) and b_n (summable), the engine
checks the step condition d(u, Phi(a_{n+1})) < b_n on the admissible
region and constructs a chain x_0 = x, x_1, ... landing in Phi(0) within
distance sum(b_n).

Off-ladder a_n values snap to the nearest level not below a_n; values at
or below the strictness tolerance snap to level 0.  The chain search is
a depth-first traversal ordered by (distance, index), so the certified /
failed verdict coincides with an exhaustive path search while the
reported trace is the greedy-first chain.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .metric import FiniteMetricSpace
from .policy import DEFAULT_POLICY, INF, NumericPolicy
from .svmap import LadderError, ParamSetValuedMap, TLadder


class PreconditionError(ValueError):
    pass


@dataclass
class LevelMap:
    """Phi: R+ => X sampled on a ladder; fibres are x-index sets."""

    space: FiniteMetricSpace
    ladder: TLadder
    fibres: dict[int, np.ndarray]  # level index -> sorted x indices

    def fibre(self, level_idx: int) -> np.ndarray:
        return self.fibres.get(level_idx, np.empty(0, dtype=int))

    @classmethod
    def from_table(cls, space, ladder, table: dict[int, Iterable[int]]) -> "LevelMap":
        fib = {int(k): np.array(sorted(set(int(i) for i in v)), dtype=int)
               for k, v in table.items()}
        return cls(space, ladder, fib)

    @classmethod
    def from_param_map(cls, F: ParamSetValuedMap, y: int) -> "LevelMap":
        """Phi(tau) := F_tau^{-1}(y)."""
        fib = {k: F.inverse_at_level_idx(k, y) for k in range(len(F.ladder))}
        return cls(F.X, F.ladder, fib)


@dataclass
class Seq:
    kind: str          # "geometric" | "explicit"
    first: float = 0.0
    ratio: float = 0.0
    table: tuple = ()

    def value(self, n: int) -> float:
        if self.kind == "geometric":
            return self.first * self.ratio ** n
        return float(self.table[n]) if n < len(self.table) else 0.0

    @classmethod
    def geometric(cls, first: float, ratio: float) -> "Seq":
        if first <= 0 or not (0 < ratio < 1):
            raise PreconditionError("geometric sequence needs first>0, ratio in (0,1)")
        return cls("geometric", first=first, ratio=ratio)

    @classmethod
    def explicit(cls, table: Iterable[float]) -> "Seq":
        tab = tuple(float(v) for v in table)
        if any(v <= 0 for v in tab):
            raise PreconditionError("explicit sequence entries must be positive")
        return cls("explicit", table=tab)


@dataclass
class SequenceSpec:
    a: Seq
    b: Seq
    horizon: int = 64

    def b_total(self) -> float:
        """sum(b_n): analytic tail for geometric specs, truncation otherwise."""
        if self.b.kind == "geometric":
            return self.b.first / (1.0 - self.b.ratio)
        return float(sum(self.b.table))

    def b_partial(self, n: int) -> float:
        return float(sum(self.b.value(i) for i in range(n)))

    def tail_bound(self, n: int) -> float:
        if self.b.kind == "geometric":
            return self.b.first * self.b.ratio ** n / (1.0 - self.b.ratio)
        return float(sum(self.table_rest(n)))

    def table_rest(self, n: int):
        return self.b.table[n:] if self.b.kind == "explicit" else ()


@dataclass
class StepRecord:
    n: int
    a_n: float
    level: float
    x_n: int
    b_n: float
    n_candidates: int


@dataclass
class IterationTrace:
    steps: list[StepRecord] = field(default_factory=list)
    witness: Optional[int] = None
    bound: float = INF
    status: str = "pending"   # certified | precondition_failed | horizon_exhausted
    failed_condition: str = ""
    failed_at: int = -1
    message: str = ""

    @property
    def certified(self) -> bool:
        return self.status == "certified"


def _snap(ladder: TLadder, a: float, tol: float) -> int:
    """Ladder index for a_n: smallest level >= a_n, level 0 when a_n <= tol."""
    if a <= tol:
        return 0
    return ladder.snap_up(a, tol)


@dataclass
class PreReport:
    ok: bool
    checks: list[tuple[str, bool, str]] = field(default_factory=list)
    witness: Optional[tuple[int, int]] = None  # (n, u) of first (A3) violation

    def __bool__(self):
        return self.ok


def verify_preconditions(phi: LevelMap, t: float, x: int, seqs: SequenceSpec,
                         restrict_U: Optional[set[int]] = None,
                         policy: NumericPolicy = DEFAULT_POLICY) -> PreReport:
    """Check summability, a_0 = t, a_n down to 0, and the step condition."""
    checks: list[tuple[str, bool, str]] = []
    tol = policy.tol_strict
    ladder = phi.ladder

    total = seqs.b_total()
    checks.append(("A4", np.isfinite(total), f"sum b_n = {total}"))

    a0 = seqs.a.value(0)
    a_ok = abs(a0 - t) <= tol
    msg = f"a_0 = {a0}, t = {t}"
    prev = a0
    reached_zero = False
    for n in range(1, seqs.horizon + 1):
        an = seqs.a.value(n)
        if an > prev + tol:
            a_ok, msg = False, f"a_{n} = {an} increases"
            break
        prev = an
        if an <= tol:
            reached_zero = True
            break
    if a_ok and not reached_zero:
        a_ok, msg = False, "a_n does not reach 0 within horizon"
    checks.append(("A2", a_ok, msg))

    t_idx = ladder.index_of(t, tol)
    start = phi.fibre(t_idx)
    in_phi = int(x) in set(start.tolist())
    if not in_phi:
        raise PreconditionError(f"x={x} not in Phi(t={t})")
    if restrict_U is not None and int(x) not in restrict_U:
        raise PreconditionError(f"x={x} not in the restriction set")

    witness = None
    a3_ok, a3_msg = True, ""
    rowx = phi.space.dist_row(x)
    for n in range(seqs.horizon):
        a_n = seqs.a.value(n)
        a_next = seqs.a.value(n + 1)
        try:
            lev_n = _snap(ladder, a_n, tol)
            lev_next = _snap(ladder, a_next, tol)
        except LadderError as e:
            raise PreconditionError(f"resolution error at n={n}: {e}") from e
        b_n = seqs.b.value(n)
        fib = phi.fibre(lev_n)
        nxt = phi.fibre(lev_next)
        if restrict_U is not None:
            fib = np.array([i for i in fib if i in restrict_U], dtype=int)
            nxt = np.array([i for i in nxt if i in restrict_U], dtype=int)
        if n == 0:
            region = fib[fib == x]
        else:
            rad = seqs.b_partial(n)
            region = fib[rowx[fib] < rad - tol] if fib.size else fib
        if region.size == 0:
            continue  # vacuous step
        for u in region.tolist():
            du = phi.space.dist_row(u)[nxt].min() if nxt.size else INF
            if not policy.lt(du, b_n):
                a3_ok = False
                witness = (n, int(u))
                a3_msg = f"d(u={u}, Phi(a_{n + 1})) = {du} >= b_{n} = {b_n}"
                break
        if not a3_ok or lev_next == 0:
            break
    checks.append(("A3", a3_ok, a3_msg))
    return PreReport(ok=all(c[1] for c in checks), checks=checks, witness=witness)


def run_induction(phi: LevelMap, t: float, x: int, seqs: SequenceSpec,
                  restrict_U: Optional[set[int]] = None,
                  policy: NumericPolicy = DEFAULT_POLICY) -> IterationTrace:
    """Execute the chain construction; returns a trace with verdict.

    Depth-first over admissible successors, ordered by (distance, index),
    with dead-state memoization: certifies exactly when some admissible
    chain reaches Phi(0), and the reported chain is the greedy-first one.
    """
    tol = policy.tol_strict
    ladder = phi.ladder
    trace = IterationTrace(bound=seqs.b_total())
    t_idx = ladder.index_of(t, tol)
    if int(x) not in set(phi.fibre(t_idx).tolist()):
        raise PreconditionError(f"x={x} not in Phi(t={t})")
    if restrict_U is not None and int(x) not in restrict_U:
        raise PreconditionError(f"x={x} not in the restriction set")

    levels = []
    for n in range(seqs.horizon + 1):
        try:
            lev = _snap(ladder, seqs.a.value(n), tol)
        except LadderError as e:
            raise PreconditionError(f"resolution error at n={n}: {e}") from e
        levels.append(lev)
        if lev == 0:
            break
    if levels[-1] != 0:
        trace.status = "horizon_exhausted"
        trace.message = "a_n did not reach ladder level 0 within horizon"
        return trace

    depth_cap = len(levels) - 1
    dead: set[tuple[int, int]] = set()
    deepest = [0]
    path: list[tuple[int, int]] = []  # (x_n, n_candidates)

    def successors(n: int, xn: int) -> list[int]:
        b_n = seqs.b.value(n)
        nxt = phi.fibre(levels[n + 1])
        if restrict_U is not None:
            nxt = np.array([i for i in nxt if i in restrict_U], dtype=int)
        if nxt.size == 0:
            return []
        drow = phi.space.dist_row(xn)[nxt]
        ok = nxt[drow < b_n - tol]
        order = np.lexsort((ok, phi.space.dist_row(xn)[ok]))
        return ok[order].tolist()

    def dfs(n: int, xn: int) -> bool:
        deepest[0] = max(deepest[0], n)
        if n == depth_cap:
            path.append((xn, 0))
            return True
        if (n, xn) in dead:
            return False
        cands = successors(n, xn)
        path.append((xn, len(cands)))
        for c in cands:
            if dfs(n + 1, c):
                return True
        path.pop()
        dead.add((n, xn))
        return False

    found = dfs(0, int(x))
    for n, (xn, ncand) in enumerate(path):
        trace.steps.append(StepRecord(
            n=n, a_n=seqs.a.value(n), level=float(ladder.levels[levels[n]]),
            x_n=int(xn), b_n=seqs.b.value(n), n_candidates=ncand))
    if not found:
        trace.status = "precondition_failed"
        trace.failed_condition = "A3"
        trace.failed_at = deepest[0]
        if deepest[0] == depth_cap - 1:
            trace.message = ("no admissible step into Phi(0): "
                             "outer-semicontinuity violation at ladder resolution")
        else:
            trace.message = f"no admissible successor at step {deepest[0]}"
        return trace

    z = trace.steps[-1].x_n
    # independent confirmation: z in Phi(0) and d(x, z) < sum b_n
    in_zero = int(z) in set(phi.fibre(0).tolist())
    dz = phi.space.d(int(x), int(z))
    if in_zero and policy.lt(dz, trace.bound):
        trace.status = "certified"
        trace.witness = int(z)
        trace.message = f"z={z}, d(x,z)={dz} < {trace.bound}"
    else:
        trace.status = "precondition_failed"
        trace.failed_condition = "bound"
        trace.message = f"chain landed at z={z} but d(x,z)={dz} vs bound {trace.bound}"
    return trace
