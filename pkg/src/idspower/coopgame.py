"""Per-sequence cooperative games and exact indices of power.

Reaching threshold detectability turns each attack sequence into a weighted
voting game over the libraries: a coalition wins when its summed per-library
effectiveness reaches the threshold.  Shapley values and normalized
Banzhaf-Coleman indices are computed exactly, either by coalition
enumeration (bitmask subsets) or by a subset-sum generating-function DP
over integer-scaled weights.  Both routes return identical rationals.
"""

from __future__ import annotations

import math
import os
import warnings as _warnings
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .metrics import effectiveness, weighted_effectiveness
from .model import AttackSequence, Configuration, Scenario

DEFAULT_ENUM_LIMIT = 24
DEFAULT_DENOMINATOR_BOUND = 10**6
ENUM_LIMIT_ENV = "IDSPOWER_ENUM_LIMIT"


class GameSizeError(ValueError):
    """Too many libraries for coalition enumeration."""


class DenominatorBoundWarning(UserWarning):
    """Weights do not fit the configured integer scaling; a slower path was used."""


class IndexKind(Enum):
    SHAPLEY = "shapley"
    BANZHAF = "banzhaf"


def enumeration_limit(limit: int | None = None) -> int:
    """Effective enumeration limit: explicit argument, else env override, else default."""
    if limit is not None:
        return limit
    env = os.environ.get(ENUM_LIMIT_ENV)
    return int(env) if env else DEFAULT_ENUM_LIMIT


@dataclass(frozen=True)
class SequenceGame:
    """Weighted voting game induced by one attack sequence.

    ``weights[k]`` is library k's effectiveness against the sequence (the
    tp-weighted variant when built with ``weighted=True``); a coalition wins
    when its weight sum reaches ``threshold``.
    """

    library_ids: tuple[str, ...]
    weights: tuple[Fraction, ...]
    threshold: Fraction
    sequence_id: str | None = None

    def __post_init__(self):
        if any(w < 0 for w in self.weights):
            raise ValueError("game weights must be nonnegative")
        if not 0 < self.threshold <= 1:
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        if len(self.library_ids) != len(self.weights):
            raise ValueError("library_ids and weights must have equal length")

    @property
    def n(self) -> int:
        return len(self.weights)

    @cached_property
    def scaled(self) -> tuple[tuple[int, ...], int, int]:
        """(integer weights, integer quota, common denominator)."""
        denom = math.lcm(self.threshold.denominator, *(w.denominator for w in self.weights)) \
            if self.weights else self.threshold.denominator
        ints = tuple(int(w * denom) for w in self.weights)
        return ints, int(self.threshold * denom), denom

    def wins(self, member_indices) -> bool:
        """Exact threshold test for a coalition given as library indices."""
        return sum((self.weights[k] for k in member_indices), Fraction(0)) >= self.threshold

    def grand_coalition_wins(self) -> bool:
        return sum(self.weights, Fraction(0)) >= self.threshold


@dataclass(frozen=True)
class IndexVector:
    """Per-library power values, with swing counts where an exact route produced them."""

    kind: IndexKind
    library_ids: tuple[str, ...]
    values: tuple[Fraction, ...] | tuple[float, ...]
    swing_counts: tuple[int, ...] | None = None
    degenerate: bool = False
    approximate: bool = False
    raw: tuple | None = None

    def __len__(self) -> int:
        return len(self.values)


def build_game(seq: AttackSequence, scenario: Scenario, weighted: bool = False) -> SequenceGame:
    """Game weights are the per-library (tp-weighted) effectiveness terms."""
    eff = weighted_effectiveness if weighted else effectiveness
    vf = scenario.value_function
    return SequenceGame(
        library_ids=scenario.library_ids,
        weights=tuple(eff(seq, lib, vf) for lib in scenario.libraries),
        threshold=scenario.omega,
        sequence_id=seq.id,
    )


def is_effective(config: Configuration, game: SequenceGame) -> bool:
    """Whether the configuration reaches the threshold (boundary counts as winning)."""
    index = {lib_id: k for k, lib_id in enumerate(game.library_ids)}
    try:
        members = [index[lib_id] for lib_id in config.members]
    except KeyError as exc:
        raise ValueError(f"unknown library id {exc.args[0]!r}") from None
    return game.wins(members)


# ---------------------------------------------------------------------------
# Coalition enumeration


def _check_limit(game: SequenceGame, limit: int | None) -> None:
    cap = enumeration_limit(limit)
    if game.n > cap:
        raise GameSizeError(
            f"coalition enumeration over {game.n} libraries exceeds the limit of {cap}; "
            "use shapley_dp/banzhaf_dp or approx_index"
        )


def _others_subset_sums(weights: Sequence[int], i: int) -> tuple[list[int], list[int]]:
    """Subset sums over all 2^(n-1) coalitions excluding player i.

    Returns (sums, positions) where positions maps bit positions back to
    original player indices.
    """
    positions = [k for k in range(len(weights)) if k != i]
    others = [weights[k] for k in positions]
    sums = [0] * (1 << len(others))
    for mask in range(1, len(sums)):
        low = mask & -mask
        sums[mask] = sums[mask ^ low] + others[low.bit_length() - 1]
    return sums, positions


def _swing_counts_by_size(
    game: SequenceGame, i: int, collect: bool = False
) -> tuple[list[int], list[tuple[int, ...]] | None]:
    """Counts of swing coalitions for player i, grouped by the size of R - {i}."""
    ints, quota, _ = game.scaled
    n = game.n
    counts = [0] * n
    witnesses: list[tuple[int, ...]] | None = [] if collect else None
    w_i = ints[i]
    if w_i == 0:
        return counts, witnesses
    lo, hi = quota - w_i, quota - 1
    sums, positions = _others_subset_sums(ints, i)
    for mask, s in enumerate(sums):
        if lo <= s <= hi:
            counts[mask.bit_count()] += 1
            if collect:
                coalition = [positions[b] for b in range(n - 1) if mask >> b & 1]
                coalition.append(i)
                witnesses.append(tuple(sorted(coalition)))
    return counts, witnesses


def swings(
    game: SequenceGame, lib_index: int, witnesses: bool = False, limit: int | None = None
) -> tuple[int, tuple[tuple[int, ...], ...] | None]:
    """Number of coalitions that win with the library and lose without it.

    With ``witnesses=True`` also returns the swing coalitions as sorted
    tuples of library indices (the library itself included).
    """
    _check_limit(game, limit)
    counts, found = _swing_counts_by_size(game, lib_index, collect=witnesses)
    return sum(counts), tuple(found) if witnesses else None


def _shapley_coefficients(n: int) -> list[Fraction]:
    """coeff[r] = r! (n-1-r)! / n! for a swing whose coalition-minus-player has size r."""
    n_fact = math.factorial(n)
    return [
        Fraction(math.factorial(r) * math.factorial(n - 1 - r), n_fact) for r in range(n)
    ]


def shapley_exact(game: SequenceGame, limit: int | None = None) -> IndexVector:
    """Exact Shapley values by coalition enumeration."""
    _check_limit(game, limit)
    coeff = _shapley_coefficients(game.n)
    values = []
    thetas = []
    for i in range(game.n):
        counts, _ = _swing_counts_by_size(game, i)
        values.append(sum((coeff[r] * c for r, c in enumerate(counts) if c), Fraction(0)))
        thetas.append(sum(counts))
    return IndexVector(
        kind=IndexKind.SHAPLEY,
        library_ids=game.library_ids,
        values=tuple(values),
        swing_counts=tuple(thetas),
        degenerate=not game.grand_coalition_wins(),
    )


def _normalized_banzhaf(game: SequenceGame, thetas: list[int]) -> IndexVector:
    total = sum(thetas)
    if total == 0:
        values = tuple(Fraction(0) for _ in thetas)
    else:
        values = tuple(Fraction(t, total) for t in thetas)
    return IndexVector(
        kind=IndexKind.BANZHAF,
        library_ids=game.library_ids,
        values=values,
        swing_counts=tuple(thetas),
        degenerate=total == 0,
    )


def banzhaf(game: SequenceGame, limit: int | None = None) -> IndexVector:
    """Normalized Banzhaf-Coleman index by coalition enumeration."""
    _check_limit(game, limit)
    thetas = []
    for i in range(game.n):
        counts, _ = _swing_counts_by_size(game, i)
        thetas.append(sum(counts))
    return _normalized_banzhaf(game, thetas)


# ---------------------------------------------------------------------------
# Subset-sum generating-function DP


def _scaling_for_dp(game: SequenceGame, denominator_bound: int):
    ints, quota, denom = game.scaled
    if denom > denominator_bound:
        _warnings.warn(
            f"common weight denominator {denom} exceeds the bound {denominator_bound}; "
            "falling back to coalition enumeration",
            DenominatorBoundWarning,
            stacklevel=3,
        )
        return None
    return ints, quota


def _window_total(counts: Sequence[int], lo: int, hi: int) -> int:
    lo = max(lo, 0)
    hi = min(hi, len(counts) - 1)
    return sum(counts[lo:hi + 1]) if lo <= hi else 0


def banzhaf_dp(
    game: SequenceGame,
    denominator_bound: int = DEFAULT_DENOMINATOR_BOUND,
    limit: int | None = None,
) -> IndexVector:
    """Banzhaf-Coleman index via subset-sum counting; exact and identical to `banzhaf`.

    Swing counts for player i are window sums of the subset-sum distribution
    of the other players, obtained by dividing i out of the full product.
    """
    scaled = _scaling_for_dp(game, denominator_bound)
    if scaled is None:
        return banzhaf(game, limit=limit)
    ints, quota = scaled
    total = sum(ints)
    counts = [0] * (total + 1)
    counts[0] = 1
    for w in ints:
        if w == 0:
            for s in range(total + 1):
                counts[s] *= 2
        else:
            for s in range(total, w - 1, -1):
                counts[s] += counts[s - w]

    thetas = []
    for i, w in enumerate(ints):
        if w == 0:
            thetas.append(0)
            continue
        others = [0] * (total + 1)
        for s in range(total + 1):
            others[s] = counts[s] - (others[s - w] if s >= w else 0)
        thetas.append(_window_total(others, quota - w, quota - 1))
    return _normalized_banzhaf(game, thetas)


def shapley_dp(
    game: SequenceGame,
    denominator_bound: int = DEFAULT_DENOMINATOR_BOUND,
    limit: int | None = None,
) -> IndexVector:
    """Shapley value via size-resolved subset-sum counting; identical to `shapley_exact`."""
    scaled = _scaling_for_dp(game, denominator_bound)
    if scaled is None:
        return shapley_exact(game, limit=limit)
    ints, quota = scaled
    n = game.n
    total = sum(ints)
    # counts[r][s]: subsets of all players with size r and weight sum s
    counts = [[0] * (total + 1) for _ in range(n + 1)]
    counts[0][0] = 1
    for k, w in enumerate(ints):
        for r in range(min(k, n - 1) + 1, 0, -1):
            row, prev = counts[r], counts[r - 1]
            if w == 0:
                for s in range(total + 1):
                    row[s] += prev[s]
            else:
                for s in range(total, w - 1, -1):
                    row[s] += prev[s - w]

    coeff = _shapley_coefficients(n)
    values = []
    thetas = []
    for i, w in enumerate(ints):
        if w == 0:
            values.append(Fraction(0))
            thetas.append(0)
            continue
        lo, hi = quota - w, quota - 1
        phi = Fraction(0)
        theta = 0
        prev_row = None  # others[r-1]
        for r in range(n):
            full = counts[r]
            if prev_row is None:
                row = full.copy()
            else:
                row = [0] * (total + 1)
                for s in range(total + 1):
                    row[s] = full[s] - (prev_row[s - w] if s >= w else 0)
            window = _window_total(row, lo, hi)
            if window:
                phi += coeff[r] * window
                theta += window
            prev_row = row
        values.append(phi)
        thetas.append(theta)
    return IndexVector(
        kind=IndexKind.SHAPLEY,
        library_ids=game.library_ids,
        values=tuple(values),
        swing_counts=tuple(thetas),
        degenerate=not game.grand_coalition_wins(),
    )


def is_dummy(game: SequenceGame, lib_index: int,
             denominator_bound: int = DEFAULT_DENOMINATOR_BOUND) -> bool:
    """True when the library contributes to no swing (its index is forced to 0)."""
    ints, quota, denom = game.scaled
    w = ints[lib_index]
    if w == 0:
        return True
    if denom > denominator_bound:
        count, _ = swings(game, lib_index)
        return count == 0
    total = sum(ints)
    counts = [0] * (total + 1)
    counts[0] = 1
    for k, wk in enumerate(ints):
        if k == lib_index:
            continue
        if wk == 0:
            for s in range(total + 1):
                counts[s] *= 2
        else:
            for s in range(total, wk - 1, -1):
                counts[s] += counts[s - wk]
    return _window_total(counts, quota - w, quota - 1) == 0


def aggregate_indices(
    per_sequence: Sequence[IndexVector], weights: Sequence[Fraction]
) -> IndexVector:
    """Occurrence-weighted sum of per-sequence index vectors."""
    if not per_sequence:
        raise ValueError("no index vectors to aggregate")
    kinds = {v.kind for v in per_sequence}
    if len(kinds) > 1:
        raise ValueError("cannot aggregate mixed index kinds")
    lengths = {len(v) for v in per_sequence}
    if len(lengths) > 1:
        raise ValueError("cannot aggregate vectors of different lengths")
    if len(per_sequence) != len(weights):
        raise ValueError("one weight per index vector required")
    if any(p < 0 for p in weights):
        raise ValueError("aggregation weights must be nonnegative")
    total = sum(weights)
    if abs(total - 1) > Fraction(1, 10**9):
        raise ValueError(f"aggregation weights must sum to 1, got {total}")

    n = len(per_sequence[0])
    values = [sum((p * v.values[k] for p, v in zip(weights, per_sequence)), Fraction(0))
              for k in range(n)]
    if all(v.swing_counts is not None for v in per_sequence):
        swing_counts = tuple(
            sum(v.swing_counts[k] for v in per_sequence) for k in range(n)
        )
    else:
        swing_counts = None
    return IndexVector(
        kind=per_sequence[0].kind,
        library_ids=per_sequence[0].library_ids,
        values=tuple(values),
        swing_counts=swing_counts,
        degenerate=all(v.degenerate for v in per_sequence),
        approximate=any(v.approximate for v in per_sequence),
    )
