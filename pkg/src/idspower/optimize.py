"""Budgeted selection of the default library set maximizing index mass.

0/1 knapsack over the libraries: maximize the sum of chosen index values
subject to the cost budget.  The DP route is exact over decimal-scaled
integer costs; ties on the objective break toward minimal total cost, then
the lexicographically smallest member set in declaration order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .coopgame import IndexVector
from .model import Configuration, as_fraction

DEFAULT_SCALE_CAP = 10**6
EXHAUSTIVE_LIMIT = 20


@dataclass(frozen=True)
class SelectionResult:
    chosen: Configuration
    chosen_indices: tuple[int, ...]
    objective: Fraction | float
    budget_used: Fraction
    method: str


def _validate(index: IndexVector, costs: Sequence, budget) -> tuple[list[Fraction], Fraction]:
    if len(costs) != len(index):
        raise ValueError("indices and costs must have the same length")
    costs = [as_fraction(c, f"costs[{k}]") for k, c in enumerate(costs)]
    for k, c in enumerate(costs):
        if c < 0:
            raise ValueError(f"negative cost for library {index.library_ids[k]!r}")
    for k, v in enumerate(index.values):
        if v < 0:
            raise ValueError(f"negative index value for library {index.library_ids[k]!r}")
    budget = as_fraction(budget, "budget")
    if budget < 0:
        raise ValueError(f"budget must be nonnegative, got {budget}")
    return costs, budget


def _better(a, b) -> bool:
    """Tie-break order: higher objective, then lower cost, then lex-smaller member set."""
    if a[0] != b[0]:
        return a[0] > b[0]
    if a[1] != b[1]:
        return a[1] < b[1]
    return a[2] < b[2]


def _result(index: IndexVector, costs: Sequence[Fraction], members: tuple[int, ...],
            method: str) -> SelectionResult:
    objective = sum((index.values[k] for k in members), Fraction(0))
    used = sum((costs[k] for k in members), Fraction(0))
    return SelectionResult(
        chosen=Configuration(frozenset(index.library_ids[k] for k in members)),
        chosen_indices=members,
        objective=objective,
        budget_used=used,
        method=method,
    )


def _decimal_scale(costs: Sequence[Fraction]) -> int | None:
    """Smallest power of ten making all costs integral, or None if none exists."""
    power = 0
    for c in costs:
        d = c.denominator
        twos = fives = 0
        while d % 2 == 0:
            d //= 2
            twos += 1
        while d % 5 == 0:
            d //= 5
            fives += 1
        if d != 1:
            return None
        power = max(power, twos, fives)
    return power


def exhaustive_oracle(index: IndexVector, costs: Sequence, budget) -> SelectionResult:
    """Brute-force optimum over all subsets; the verification oracle for the DP."""
    costs, budget = _validate(index, costs, budget)
    n = len(index)
    if n > EXHAUSTIVE_LIMIT:
        raise ValueError(f"exhaustive search limited to {EXHAUSTIVE_LIMIT} libraries, got {n}")
    best = (Fraction(0), Fraction(0), ())
    for mask in range(1 << n):
        members = tuple(k for k in range(n) if mask >> k & 1)
        cost = sum((costs[k] for k in members), Fraction(0))
        if cost > budget:
            continue
        objective = sum((index.values[k] for k in members), Fraction(0))
        candidate = (objective, cost, members)
        if _better(candidate, best):
            best = candidate
    return _result(index, costs, best[2], "exhaustive")


def _greedy(index: IndexVector, costs: Sequence[Fraction], budget: Fraction) -> SelectionResult:
    n = len(index)
    def key(k):
        free = costs[k] == 0 and index.values[k] > 0
        ratio = index.values[k] / costs[k] if costs[k] > 0 else Fraction(0)
        return (0 if free else 1, -ratio, k)
    chosen: list[int] = []
    remaining = budget
    for k in sorted(range(n), key=key):
        if index.values[k] <= 0:
            continue
        if costs[k] <= remaining:
            chosen.append(k)
            remaining -= costs[k]
    return _result(index, costs, tuple(sorted(chosen)), "greedy")


def _dp(index: IndexVector, costs: Sequence[Fraction], budget: Fraction,
        scale_cap: int) -> SelectionResult:
    power = _decimal_scale(costs)
    if power is None:
        raise ValueError(
            "costs are not decimal fractions and cannot be scaled to integers; "
            "use method='exhaustive' or method='greedy'"
        )
    factor = 10 ** power
    scaled = [int(c * factor) for c in costs]
    capacity = min(int(budget * factor), sum(scaled))
    if capacity + 1 > scale_cap:
        raise ValueError(
            f"scaled budget needs {capacity + 1} DP columns, above the cap of {scale_cap}; "
            "use method='greedy'"
        )
    empty = (Fraction(0), Fraction(0), ())
    table = [empty] * (capacity + 1)
    for k, c in enumerate(scaled):
        value = index.values[k]
        cost = costs[k]
        for w in range(capacity, c - 1, -1):
            prior = table[w - c]
            candidate = (prior[0] + value, prior[1] + cost, prior[2] + (k,))
            if _better(candidate, table[w]):
                table[w] = candidate
    return _result(index, costs, table[capacity][2], "dp")


def optimize_default_config(
    index: IndexVector,
    costs: Sequence,
    budget,
    method: str = "dp",
    scale_cap: int = DEFAULT_SCALE_CAP,
) -> SelectionResult:
    """Pick the affordable library set with maximal total index value.

    ``dp`` is exact over decimal costs; ``exhaustive`` enumerates subsets
    (up to 20 libraries); ``greedy`` is a density heuristic with no
    optimality guarantee, available when the DP scale cap is exceeded.
    """
    costs_f, budget_f = _validate(index, costs, budget)
    if method == "dp":
        return _dp(index, costs_f, budget_f, scale_cap)
    if method == "exhaustive":
        return exhaustive_oracle(index, costs, budget)
    if method == "greedy":
        return _greedy(index, costs_f, budget_f)
    raise ValueError(f"unknown method {method!r}")
