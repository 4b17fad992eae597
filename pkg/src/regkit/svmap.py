"""Set-valued mappings F: X x R+ => Y on a finite parameter ladder.

Two backings share one query API: an explicit graph of (x, level, y)
triples, and the lazy embedding of a plain mapping F: X => Y where the
t-fibre is the (open or closed) t-enlargement of F(x).  The embedding is
never materialized as triples, so fine ladders stay cheap.

The distance-like quantity delta(y, F, x) = inf{t > 0 | y in F(x, t)} is
resolved on the ladder: the returned value is the smallest positive
ladder level witnessing membership, which over-estimates the continuum
infimum by at most one ladder gap for monotone mappings.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .metric import FiniteMetricSpace
from .policy import DEFAULT_POLICY, INF, NumericPolicy


class LadderError(ValueError):
    pass


@dataclass
class TLadder:
    """Strictly increasing finite list of parameter levels starting at 0."""

    levels: np.ndarray

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        if lv.size == 0 or lv[0] != 0.0:
            raise LadderError("ladder must start at 0")
        if (np.diff(lv) <= 0).any():
            raise LadderError("ladder levels must be strictly increasing")
        self.levels = lv

    def __len__(self):
        return len(self.levels)

    @property
    def positive(self) -> np.ndarray:
        return self.levels[1:]

    def index_of(self, t: float, tol: float = 1e-12) -> int:
        i = int(np.searchsorted(self.levels, t))
        for j in (i - 1, i, i + 1):
            if 0 <= j < len(self.levels) and abs(self.levels[j] - t) <= tol:
                return j
        raise LadderError(f"level {t} not on ladder")

    def snap_up(self, t: float, tol: float = 1e-12) -> int:
        """Index of the smallest level >= t (level 0 when t <= tol)."""
        if t <= tol:
            return 0
        i = int(np.searchsorted(self.levels, t - tol))
        if i >= len(self.levels):
            raise LadderError(f"value {t} above ladder top {self.levels[-1]}")
        return i

    def max_gap(self) -> float:
        return float(np.diff(self.levels).max())

    @classmethod
    def uniform(cls, top: float, steps: int) -> "TLadder":
        return cls(np.linspace(0.0, top, steps + 1))


@dataclass
class PlainSetValuedMap:
    """F: X => Y given by an explicit graph of (x, y) pairs."""

    X: FiniteMetricSpace
    Y: FiniteMetricSpace
    graph: set[tuple[int, int]]

    def __post_init__(self):
        self.graph = {(int(a), int(b)) for a, b in self.graph}
        for (a, b) in self.graph:
            self.X._check(a)
            self.Y._check(b)
        self._images = [np.array(sorted(b for a, b in self.graph if a == xi), dtype=int)
                        for xi in range(self.X.n)]
        self._preimages = [np.array(sorted(a for a, b in self.graph if b == yi), dtype=int)
                           for yi in range(self.Y.n)]

    def image(self, x: int) -> np.ndarray:
        return self._images[x]

    def preimage(self, y: int) -> np.ndarray:
        return self._preimages[y]

    def dist_to_image(self, y: int, x: int) -> float:
        """d(y, F(x)); +inf when F(x) is empty."""
        img = self._images[x]
        if img.size == 0:
            return INF
        return float(self.Y.dist_row(y)[img].min())

    def dist_to_image_matrix(self) -> np.ndarray:
        """Matrix D[x, y] = d(y, F(x))."""
        D = np.full((self.X.n, self.Y.n), INF)
        for xi in range(self.X.n):
            img = self._images[xi]
            if img.size:
                for yi in range(self.Y.n):
                    D[xi, yi] = self.Y.dist_row(yi)[img].min()
        return D

    def dist_to_preimage(self, x: int, y: int) -> float:
        pre = self._preimages[y]
        if pre.size == 0:
            return INF
        return float(self.X.dist_row(x)[pre].min())


class ParamSetValuedMap:
    """F: X x R+ => Y over a finite t-ladder."""

    def __init__(self, X: FiniteMetricSpace, Y: FiniteMetricSpace, ladder: TLadder,
                 graph: Optional[Iterable[tuple[int, int, int]]] = None,
                 embedded: Optional[tuple[np.ndarray, bool, PlainSetValuedMap]] = None,
                 monotone: bool = False,
                 policy: NumericPolicy = DEFAULT_POLICY):
        self.X, self.Y, self.ladder, self.policy = X, Y, ladder, policy
        self.monotone = monotone
        self._embed = embedded  # (dist matrix D[x,y], closed flag, plain map)
        if embedded is not None:
            self.graph = None
            self.monotone = True
            return
        triples = {(int(a), int(t), int(b)) for a, t, b in (graph or ())}
        for (a, t, b) in triples:
            X._check(a)
            Y._check(b)
            if not (0 <= t < len(ladder)):
                raise LadderError(f"level index {t} off ladder")
        self.graph = triples
        self._inv: dict[tuple[int, int], list[int]] = {}
        self._fib: dict[tuple[int, int], list[int]] = {}
        self._xy_levels: dict[tuple[int, int], list[int]] = {}
        for (a, t, b) in sorted(triples):
            self._inv.setdefault((t, b), []).append(a)
            self._fib.setdefault((a, t), []).append(b)
            self._xy_levels.setdefault((a, b), []).append(t)
        if monotone:
            self._validate_monotone()

    def _validate_monotone(self):
        nlev = len(self.ladder)
        for (a, b), lvls in self._xy_levels.items():
            pos = [t for t in lvls if t > 0]
            if pos and set(range(min(pos), nlev)) - set(pos):
                raise ValueError(
                    f"monotonicity flag violated for pair ({a},{b})")

    # -- membership and fibres ------------------------------------------

    def contains(self, x: int, t_idx: int, y: int) -> bool:
        if self._embed is not None:
            D, closed, plain = self._embed
            t = self.ladder.levels[t_idx]
            if t_idx == 0:
                return (x, y) in plain.graph
            d = D[x, y]
            return self.policy.le(d, t) if closed else self.policy.lt(d, t)
        return (x, t_idx, y) in self.graph

    def fibre(self, x: int, t_idx: int) -> np.ndarray:
        """F(x, t) as sorted y indices."""
        if self._embed is not None:
            D, closed, plain = self._embed
            if t_idx == 0:
                return plain.image(x)
            t = self.ladder.levels[t_idx]
            row = D[x]
            tol = self.policy.tol_strict
            mask = (row <= t + tol) if closed else (row < t - tol)
            return np.nonzero(mask)[0]
        return np.asarray(self._fib.get((x, t_idx), []), dtype=int)

    def inverse_at_level_idx(self, t_idx: int, y: int) -> np.ndarray:
        """F_t^{-1}(y) as sorted x indices, t given by ladder index."""
        if self._embed is not None:
            D, closed, plain = self._embed
            if t_idx == 0:
                return plain.preimage(y)
            t = self.ladder.levels[t_idx]
            col = D[:, y]
            tol = self.policy.tol_strict
            mask = (col <= t + tol) if closed else (col < t - tol)
            return np.nonzero(mask)[0]
        return np.asarray(self._inv.get((t_idx, y), []), dtype=int)

    def inverse_at_level(self, t: float, y: int) -> np.ndarray:
        return self.inverse_at_level_idx(self.ladder.index_of(t), y)

    def delta(self, y: int, x: int) -> float:
        """Smallest positive ladder level t with y in F(x, t); +inf if none."""
        if self._embed is not None:
            D, closed, plain = self._embed
            d = D[x, y]
            if d == INF:
                return INF
            tol = self.policy.tol_strict
            lv = self.ladder.positive
            mask = (lv >= d - tol) if closed else (lv > d + tol)
            hit = np.nonzero(mask)[0]
            return float(lv[hit[0]]) if hit.size else INF
        lvls = [t for t in self._xy_levels.get((x, y), []) if t > 0]
        return float(self.ladder.levels[min(lvls)]) if lvls else INF

    def delta_matrix(self) -> np.ndarray:
        """Matrix Dl[x, y] = delta(y, F, x), vectorized for embedded maps."""
        if self._embed is not None:
            D, closed, _ = self._embed
            lv = self.ladder.positive
            tol = self.policy.tol_strict
            finite = np.where(np.isfinite(D), D, 0.0)
            if closed:
                idx = np.searchsorted(lv, finite - tol, side="left")
            else:
                idx = np.searchsorted(lv, finite + tol, side="right")
            out = np.full(D.shape, INF)
            ok = np.isfinite(D) & (idx < lv.size)
            out[ok] = lv[np.minimum(idx, lv.size - 1)][ok]
            return out
        out = np.full((self.X.n, self.Y.n), INF)
        for (x, y), lvls in self._xy_levels.items():
            pos = [t for t in lvls if t > 0]
            if pos:
                out[x, y] = self.ladder.levels[min(pos)]
        return out

    def dist_to_inverse(self, x: int, t_idx: int, y: int) -> float:
        inv = self.inverse_at_level_idx(t_idx, y)
        if inv.size == 0:
            return INF
        return float(self.X.dist_row(x)[inv].min())

    def level0_inverse_of_ball(self, y: int, radius: float) -> set[int]:
        """F_0^{-1}(B(y, radius)) over the open Y-ball (strict, tol semantics)."""
        tol = self.policy.tol_strict
        yrow = self.Y.dist_row(y)
        if radius == 0:
            ball = np.array([y], dtype=int)
        else:
            ball = np.nonzero(yrow < radius - tol)[0]
        bset = set(ball.tolist())
        out: set[int] = set()
        for xi in range(self.X.n):
            if bset & set(self.fibre(xi, 0).tolist()):
                out.add(xi)
        return out

    def level0_image_of_ball(self, u: int, radius: float) -> set[int]:
        """F_0(B(u, radius)) over the open ball (strict, tol semantics)."""
        tol = self.policy.tol_strict
        row = self.X.dist_row(u)
        if radius == 0:
            xs = [u]
        else:
            xs = np.nonzero(row < radius - tol)[0]
        out: set[int] = set()
        for xi in xs:
            out.update(self.fibre(int(xi), 0).tolist())
        return out


def embed_plain(F: PlainSetValuedMap, ladder: TLadder, closed: bool = False,
                policy: NumericPolicy = DEFAULT_POLICY) -> ParamSetValuedMap:
    """Embed a plain mapping as (x, t) -> t-enlargement of F(x)."""
    D = F.dist_to_image_matrix()
    return ParamSetValuedMap(F.X, F.Y, ladder, embedded=(D, closed, F),
                             policy=policy)


# -- outer semicontinuity at 0 ---------------------------------------------

@dataclass
class OscReport:
    holds: bool
    witness: Optional[int] = None
    level_profile: dict = field(default_factory=dict)

    def __bool__(self):
        return self.holds


def outer_semicontinuity_at_zero(F: ParamSetValuedMap, y: int,
                                 resolution: int = 1) -> OscReport:
    """Check Limsup_{t->0} F_t^{-1}(y) inside F_0^{-1}(y), at ladder resolution.

    The limsup is operationalized at the smallest positive ladder level;
    `resolution` extra levels are reported for sensitivity, not for the
    verdict.
    """
    pos = F.ladder.positive
    if pos.size == 0:
        raise LadderError("no positive ladder levels")
    K = max(1, min(resolution, pos.size))
    tol = F.policy.tol_strict
    zero_set = set(F.inverse_at_level_idx(0, y).tolist())
    first = F.inverse_at_level_idx(1, y)
    profile = {float(F.ladder.levels[k]): len(F.inverse_at_level_idx(k, y))
               for k in range(1, K + 1)}
    for z in first.tolist():
        # d(z, F_{t_min}^{-1}(y)) = 0 <= tol for members of the fibre itself
        if z not in zero_set:
            near = any(F.X.d(z, w) <= tol for w in zero_set)
            if not near:
                return OscReport(False, witness=int(z), level_profile=profile)
    return OscReport(True, level_profile=profile)


# -- embedding audit --------------------------------------------------------

@dataclass
class ClauseResult:
    clause: str
    status: str  # "pass" | "fail" | "not_applicable"
    witness: Optional[tuple] = None
    detail: str = ""


@dataclass
class AuditReport:
    clauses: list[ClauseResult]

    @property
    def ok(self) -> bool:
        return all(c.status != "fail" for c in self.clauses)

    def by_name(self, name: str) -> ClauseResult:
        return next(c for c in self.clauses if c.clause == name)


def prop41_audit(F: PlainSetValuedMap, ladder: TLadder,
                 policy: NumericPolicy = DEFAULT_POLICY) -> AuditReport:
    """Exhaustive audit of the plain-map embedding identities.

    Checks, by enumeration over the finite data: the level-0 fibres
    coincide with F; the ladder delta tracks d(y, F(x)) within one gap
    (exactly at representable boundaries for the closed embedding); the
    inverse-image identities for open and closed enlargements; and the
    image-space inclusion used by the image-space certifier.
    """
    Fo = embed_plain(F, ladder, closed=False, policy=policy)
    Fc = embed_plain(F, ladder, closed=True, policy=policy)
    D = Fo._embed[0]
    gap = ladder.max_gap()
    tol = policy.tol_strict
    out: list[ClauseResult] = []

    # (i) level-0 fibres equal F (closure trivial on finite spaces)
    bad = None
    for xi in range(F.X.n):
        img = set(F.image(xi).tolist())
        if set(Fo.fibre(xi, 0).tolist()) != img or set(Fc.fibre(xi, 0).tolist()) != img:
            bad = (xi,)
            break
    out.append(ClauseResult("i", "fail" if bad else "pass", bad))

    # Independent re-derivation of d(y, F(x)) through Y-ball enumeration:
    # member[x, y'] and the Y distance table, masked-min over images.
    member = np.zeros((F.X.n, F.Y.n), dtype=bool)
    for (a, b) in F.graph:
        member[a, b] = True
    dY = np.stack([F.Y.dist_row(j) for j in range(F.Y.n)])  # dY[y, y']
    dplain = np.full((F.X.n, F.Y.n), INF)
    for xi in range(F.X.n):
        if member[xi].any():
            dplain[xi] = dY[:, member[xi]].min(axis=1)

    # (ii) delta within one ladder gap of d(y, F(x)); exact at closed boundaries
    bad = None
    detail = ""
    for G, name in ((Fo, "open"), (Fc, "closed")):
        dl = G.delta_matrix()
        inf_mismatch = (dl == INF) != (dplain == INF)
        fin = np.isfinite(dplain) & np.isfinite(dl)
        off = fin & ((dl < dplain - tol) | (dl > dplain + gap + tol))
        if inf_mismatch.any() or off.any():
            w = np.argwhere(inf_mismatch | off)[0]
            bad, detail = (name, int(w[0]), int(w[1])), "delta off by more than one gap"
            break
        if name == "closed":
            # exact equality when d(y, F(x)) sits on a positive ladder level
            on_level = fin & (np.abs(
                ladder.levels[np.clip(np.searchsorted(ladder.levels, dplain.clip(max=1e300)),
                                      0, len(ladder.levels) - 1)] - dplain) <= tol) & (dplain > tol)
            diff = np.where(fin, dl, 0.0) - np.where(fin, dplain, 0.0)
            exact_bad = on_level & (np.abs(diff) > tol)
            if exact_bad.any():
                w = np.argwhere(exact_bad)[0]
                bad, detail = (name, int(w[0]), int(w[1])), "closed delta missed boundary"
                break
    out.append(ClauseResult("ii", "fail" if bad else "pass", bad, detail))

    # (iii), (iv), (vi): inverse-image identities, one boolean sweep per level
    bad3 = bad4 = bad6 = None
    # level 0: plain preimages must coincide with level-0 inverses
    for yi in range(F.Y.n):
        if set(Fo.inverse_at_level_idx(0, yi).tolist()) != set(np.nonzero(member[:, yi])[0].tolist()):
            bad3 = (yi, 0.0)
            break
    for k in range(1, len(ladder)):
        t = ladder.levels[k]
        via_open = dplain < t - tol       # x in F^{-1}(B(y, t)), open ball
        via_closed = dplain <= t + tol
        inv_open = np.zeros_like(via_open)
        inv_closed = np.zeros_like(via_open)
        for yi in range(F.Y.n):
            inv_open[Fo.inverse_at_level_idx(k, yi), yi] = True
            inv_closed[Fc.inverse_at_level_idx(k, yi), yi] = True
        if bad3 is None and (via_open != inv_open).any():
            w = np.argwhere(via_open != inv_open)[0]
            bad3 = (int(w[1]), float(t))
        if bad4 is None and (via_closed & ~inv_closed).any():
            w = np.argwhere(via_closed & ~inv_closed)[0]
            bad4 = (int(w[1]), float(t))
        if bad6 is None:
            if (via_open & ~inv_open).any():
                bad6 = ("open", float(t))
            elif (via_open & ~inv_closed).any():
                bad6 = ("closed", float(t))
    out.append(ClauseResult("iii", "fail" if bad3 else "pass", bad3))
    out.append(ClauseResult("iv", "fail" if bad4 else "pass", bad4))
    out.append(ClauseResult("vi", "fail" if bad6 else "pass", bad6))

    out.append(ClauseResult("vii", "not_applicable", None,
                            "upper semicontinuity is vacuous on finite spaces"))
    return AuditReport(out)
