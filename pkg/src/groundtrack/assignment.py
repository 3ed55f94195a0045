"""Gated minimum-cost assignment with deterministic tie-breaking.

`solve_assignment` returns, among one-to-one matchings that use only pairs
with cost <= max_cost, one of maximum cardinality; among those, minimum total
cost; among those, the lexicographically smallest (row, col) pair list. The
first two levels are solved in a single pass by running the assignment kernel
on lexicographic (cardinality, cost) pair values, which avoids the precision
loss of big-M cost shifting. The final level is resolved by a fix-and-verify
sweep over dual-tight candidate edges.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels

__all__ = ["solve_assignment", "assignment_value"]


def _solve_padded(cost: np.ndarray, adm: np.ndarray):
    """Run the pair-cost kernel on the (M+N) square padding of a gated matrix.

    Admissible real cells cost (-1, c); forbidden real cells and all padding
    cells cost (0, 0), so cardinality dominates and padding is free.
    """
    m, n = cost.shape
    size = m + n
    prim = np.zeros((size, size), dtype=np.float64)
    sec = np.zeros((size, size), dtype=np.float64)
    prim[:m, :n][adm] = -1.0
    sec[:m, :n][adm] = cost[adm]
    col4row, u_p, u_s, v_p, v_s = kernels.lsap_pair(prim, sec)
    pairs = []
    for r in range(m):
        c = int(col4row[r])
        if c < n and adm[r, c]:
            pairs.append((r, c))
    return pairs, (u_p, u_s, v_p, v_s)


def assignment_value(cost: np.ndarray, pairs: list[tuple[int, int]]) -> tuple[int, float]:
    """(cardinality, total cost) of a pair list, summed in row order."""
    total = 0.0
    for r, c in sorted(pairs):
        total += float(cost[r, c])
    return len(pairs), total


def solve_assignment(
    cost, max_cost: float = math.inf
) -> list[tuple[int, int]]:
    """Solve the gated assignment problem described in the module docstring.

    `cost` is an M x N array-like of finite reals. Pairs with cost > max_cost
    never appear in the result.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        raise ValueError(f"cost must be 2-dimensional, got shape {cost.shape}")
    m, n = cost.shape
    if m == 0 or n == 0:
        return []
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix contains non-finite entries")

    adm = cost <= max_cost
    if not adm.any():
        return []

    pairs, duals = _solve_padded(cost, adm)
    k_star, c_star = assignment_value(cost, pairs)
    return _lex_refine(cost, adm, pairs, duals, k_star, c_star)


def _lex_refine(cost, adm, pairs, duals, k_star, c_star):
    """Rewrite `pairs` into the lexicographically smallest optimal matching.

    Rows are settled in index order. A row's candidate columns are restricted
    to dual-tight admissible cells (a necessary optimality condition), tried
    in ascending order; a candidate below the current partner is accepted only
    if re-solving the residual problem certifies that overall optimality is
    preserved. Matched rows whose tight set is a single column, the generic
    case, settle without any extra solve.
    """
    m, n = cost.shape
    u_p, u_s, v_p, v_s = duals
    tol = 1e-9 * (1.0 + float(np.max(np.abs(cost[adm]))))

    current = dict(pairs)
    fixed: list[tuple[int, int]] = []
    fixed_cost = 0.0
    used_cols: set[int] = set()

    for r in range(m):
        cur_c = current.get(r)
        chosen = None
        for c in range(n):
            if c in used_cols or not adm[r, c]:
                continue
            if cur_c == c:
                chosen = c
                break
            if c > (cur_c if cur_c is not None else n):
                break
            # Tightness under the padded problem's duals: cardinality part
            # exact, cost part within floating-point slack.
            if (-1.0 - u_p[r] - v_p[c]) != 0.0:
                continue
            if abs(cost[r, c] - u_s[r] - v_s[c]) > tol:
                continue
            witness = _verify_fix(
                cost, adm, used_cols, fixed, fixed_cost, r, c, k_star, c_star, tol
            )
            if witness is not None:
                chosen = c
                current = dict(fixed)
                current[r] = c
                current.update(witness)
                break
        if chosen is not None:
            fixed.append((r, chosen))
            fixed_cost += float(cost[r, chosen])
            used_cols.add(chosen)

    return fixed


def _verify_fix(cost, adm, used_cols, fixed, fixed_cost, r, c, k_star, c_star, tol):
    """Check whether forcing (r, c) on top of `fixed` still reaches the optimum.

    Returns the residual witness matching (in original indices) on success,
    None otherwise.
    """
    m, n = cost.shape
    fixed_rows = {fr for fr, _ in fixed}
    rows = [i for i in range(m) if i != r and i not in fixed_rows]
    cols = [j for j in range(n) if j != c and j not in used_cols]
    target_k = k_star - len(fixed) - 1
    target_cost = c_star - fixed_cost - float(cost[r, c])

    if not rows or not cols:
        if target_k != 0:
            return None
        return {} if abs(target_cost) <= tol else None

    sub = cost[np.ix_(rows, cols)]
    sub_adm = adm[np.ix_(rows, cols)]
    if not sub_adm.any():
        if target_k != 0:
            return None
        return {} if abs(target_cost) <= tol else None

    sub_pairs, _ = _solve_padded(sub, sub_adm)
    k_res, c_res = assignment_value(sub, sub_pairs)
    if k_res != target_k or abs(c_res - target_cost) > tol:
        return None
    return {rows[i]: cols[j] for i, j in sub_pairs}
