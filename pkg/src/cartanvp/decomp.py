"""Decomposable (k+1)-forms given by their one-form factors.

Handles the three point conditions on the factor set (independence,
constant transversal-annihilator dimension, trivial vertical annihilator),
row-reduction of the fiber block to the two normal forms (identity pivot
block with residual base rows, or identity block with a residual
w-column block), and the hatted wedge products chi_s.

Decomposability of a raw form is never detected; callers supply factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import linalg as la
from . import symexpr as sx
from .errors import DegreeMismatchError, DivisionByZeroError, RankDeficientLError
from .forms import BundleChart, DiffForm, coord_field, interior, wedge_all, zero_form
from .symexpr import DEFAULT_SEED, Expr

__all__ = ["FactorSet", "Def8Verdict", "classify", "normalize", "chi_forms"]


@dataclass(frozen=True)
class FactorSet:
    """k+1 one-forms with the bookkeeping of their normal-form reduction.

    After normalization, row i reads dz^{sigma(i)} + B_{im} dx^m
    (+ G_{im} dw^m when the chart has a residual block), and any remaining
    rows are pure base rows C_{im} dx^m.  `multiplier` relates the wedge
    of the normalized factors to the wedge of the originals.
    """

    chart: BundleChart
    alphas: tuple[DiffForm, ...]
    normalized: bool = False
    z_order: tuple[int, ...] = ()  # absolute chart index of the pivot coordinate per z-row
    B: Optional[tuple[tuple[Expr, ...], ...]] = None
    C: Optional[tuple[tuple[Expr, ...], ...]] = None
    G: Optional[tuple[tuple[Expr, ...], ...]] = None
    multiplier: Expr = sx.ONE
    pivot_permutation: tuple[tuple[int, int], ...] = ()  # (row, fiber column) picks

    def __post_init__(self):
        k = self.chart.k
        if len(self.alphas) != k + 1:
            raise DegreeMismatchError(
                f"need k+1 = {k + 1} factors, got {len(self.alphas)}"
            )
        for a in self.alphas:
            if a.chart != self.chart:
                raise DegreeMismatchError("factor on a different chart")
            if a.degree != 1:
                raise DegreeMismatchError("factors must be one-forms")

    @property
    def h(self) -> int:
        return len(self.C) if self.C is not None else 0

    def eta(self) -> DiffForm:
        return wedge_all(list(self.alphas))

    def coefficient_matrix(self) -> list[list[Expr]]:
        ch = self.chart
        return [[a.terms.get((i,), sx.ZERO) for i in range(ch.dim)] for a in self.alphas]

    def fiber_block(self) -> list[list[Expr]]:
        ch = self.chart
        return [[a.terms.get((i,), sx.ZERO) for i in range(ch.k, ch.dim)] for a in self.alphas]

    def base_block(self) -> list[list[Expr]]:
        ch = self.chart
        return [[a.terms.get((i,), sx.ZERO) for i in range(ch.k)] for a in self.alphas]


@dataclass(frozen=True)
class Def8Verdict:
    nondegenerate: bool
    compatible: bool
    adapted: bool
    q: Optional[int]  # annihilator dimension at samples, when constant
    r: Optional[int]  # transversal dimension at samples, when constant
    vertical_dim: Optional[int]
    witnesses: dict = field(default_factory=dict, compare=False)


def classify(fs: FactorSet, box=None, seed: int = DEFAULT_SEED) -> Def8Verdict:
    """Sampled point conditions on the factors.

    nondegenerate: the (k+1) x n coefficient matrix has full row rank at
    all samples; compatible: the transversal-annihilator dimension is
    constant; adapted: no vertical field annihilates eta anywhere.
    """
    ch = fs.chart
    full = fs.coefficient_matrix()
    fiber = fs.fiber_block()
    flat = [e for row in full for e in row]
    assignments = la.make_assignments(flat, box=box, seed=seed, count=la.SAMPLE_COUNT)
    k1 = ch.k + 1
    nond, ranks_q, ranks_r, ranks_v = True, set(), set(), set()
    witnesses: dict = {"degenerate": [], "rank_changes": []}
    seen = []
    for a in assignments:
        arr = la.eval_matrix(full, a)
        arrL = la.eval_matrix(fiber, a)
        rk = la.numeric_rank(arr)
        q = ch.dim - rk
        v = (ch.dim - ch.k) - la.numeric_rank(arrL)
        r = q - v
        seen.append((q, v, r))
        ranks_q.add(q)
        ranks_v.add(v)
        ranks_r.add(r)
        if rk < k1:
            nond = False
            witnesses["degenerate"].append(a.label())
    compatible = len(ranks_r) == 1
    if not compatible:
        majority = max(ranks_r, key=lambda x: [t[2] for t in seen].count(x))
        witnesses["rank_changes"] = [
            a.label() for a, t in zip(assignments, seen) if t[2] != majority
        ]
    adapted = ranks_v == {0}
    return Def8Verdict(
        nondegenerate=nond,
        compatible=compatible,
        adapted=adapted,
        q=ranks_q.pop() if len(ranks_q) == 1 else None,
        r=ranks_r.pop() if len(ranks_r) == 1 else None,
        vertical_dim=ranks_v.pop() if len(ranks_v) == 1 else None,
        witnesses=witnesses,
    )


def normalize(fs: FactorSet, box=None, seed: int = DEFAULT_SEED) -> FactorSet:
    """Row-reduce the fiber block to an identity pivot block.

    Row operations only (never coordinate changes); the factor span is
    unchanged, so the wedge changes by the recorded nonzero multiplier.
    Pivots prefer the primary fiber block, greedily by sampled magnitude
    at the box center, ties broken by (row, column).
    """
    ch = fs.chart
    k1 = ch.k + 1
    nfib = ch.dim - ch.k
    rows = [[sx.canon(a.terms.get((i,), sx.ZERO)) for i in range(ch.dim)] for a in fs.alphas]
    target_pivots = min(nfib, k1)
    center = la.make_assignments(
        [e for row in rows for e in row], box=box, seed=seed, count=1
    )[0]
    multiplier = sx.ONE
    pivots: list[tuple[int, int]] = []  # (row, absolute column)
    used_rows: set[int] = set()
    used_cols: set[int] = set()
    col_ranges = (
        range(ch.k, ch.k + ch.p),  # primary fiber block first
        range(ch.k + ch.p, ch.dim),
    )
    for _ in range(target_pivots):
        best = None
        for cols in col_ranges:
            for i in range(k1):
                if i in used_rows:
                    continue
                for j in cols:
                    if j in used_cols:
                        continue
                    e = rows[i][j]
                    if e.is_const_zero():
                        continue
                    try:
                        mag = abs(la.eval_expr(e, center))
                    except (DivisionByZeroError, OverflowError, ValueError):
                        mag = 0.0
                    if mag > la.RANK_TOL and sx.is_zero(e, box=box, seed=seed).is_nonzero:
                        if best is None or mag > best[0]:
                            best = (mag, i, j)
            if best is not None:
                break
        if best is None:
            break
        _, pi, pj = best
        pivot = rows[pi][pj]
        multiplier = multiplier / pivot
        rows[pi] = [sx.canon(e / pivot) for e in rows[pi]]
        for i in range(k1):
            if i == pi:
                continue
            f = rows[i][pj]
            if not f.is_const_zero():
                rows[i] = [sx.canon(a - f * b) for a, b in zip(rows[i], rows[pi])]
        pivots.append((pi, pj))
        used_rows.add(pi)
        used_cols.add(pj)
    if len(pivots) < target_pivots:
        raise RankDeficientLError(
            f"fiber block rank {len(pivots)} below required {target_pivots}"
        )
    if ch.s > 0 and len(pivots) < k1:
        raise RankDeficientLError("residual-block chart needs a full k+1 pivot set")
    # order: pivot rows ascending by pivot column, then the pure base rows
    pivots_sorted = sorted(pivots, key=lambda t: t[1])
    order = [pi for pi, _ in pivots_sorted] + [
        i for i in range(k1) if i not in used_rows
    ]
    swap_sign = _permutation_sign_of(order)
    multiplier = sx.canon(multiplier * sx.num(swap_sign))
    new_rows = [rows[i] for i in order]
    z_order = tuple(pj for _, pj in pivots_sorted)
    alphas = tuple(
        DiffForm(ch, 1, {(j,): c for j, c in enumerate(row)}) for row in new_rows
    )
    nz = len(z_order)
    B = tuple(tuple(new_rows[i][j] for j in range(ch.k)) for i in range(nz))
    C = tuple(tuple(new_rows[i][j] for j in range(ch.k)) for i in range(nz, k1))
    wcols = [j for j in range(ch.k, ch.dim) if j not in z_order]
    G = tuple(tuple(new_rows[i][j] for j in wcols) for i in range(nz)) if wcols else None
    return FactorSet(
        chart=ch,
        alphas=alphas,
        normalized=True,
        z_order=z_order,
        B=B,
        C=C if C else None,
        G=G,
        multiplier=multiplier,
        pivot_permutation=tuple(pivots_sorted),
    )


def _permutation_sign_of(order: Sequence[int]) -> int:
    inv = 0
    for a in range(len(order)):
        for b in range(a + 1, len(order)):
            if order[a] > order[b]:
                inv += 1
    return -1 if inv % 2 else 1


def chi_forms(fs: FactorSet) -> list[DiffForm]:
    """chi_s = (-1)^(s-1) * wedge of all factors but the s-th.

    Self-checks the contraction identities: d/dz^a -| eta = chi_a on the
    pivot coordinates, and d/dw^m -| eta = sum_j G_{jm} chi_j on the
    residual block.
    """
    if not fs.normalized:
        raise ValueError("chi forms are defined for a normalized factor set")
    ch = fs.chart
    alphas = fs.alphas
    eta = fs.eta()
    out = []
    for s in range(1, len(alphas) + 1):
        rest = [alphas[i] for i in range(len(alphas)) if i != s - 1]
        chi = wedge_all(rest) if rest else zero_form(ch, 0)
        if (s - 1) % 2:
            chi = -chi
        out.append(chi)
    for row, col in enumerate(fs.z_order):
        lhs = interior(coord_field(ch, ch.coords[col]), eta)
        if lhs != out[row]:
            raise AssertionError("contraction identity fails on a pivot coordinate")
    if fs.G is not None:
        wcols = [j for j in range(ch.k, ch.dim) if j not in fs.z_order]
        for m, col in enumerate(wcols):
            lhs = interior(coord_field(ch, ch.coords[col]), eta)
            rhs = zero_form(ch, ch.k)
            for jrow in range(len(fs.z_order)):
                rhs = rhs + out[jrow] * fs.G[jrow][m]
            if lhs != rhs:
                raise AssertionError("residual-block contraction identity fails")
    return out
