"""Multilinear extension of sequence games and the large-N normal approximation.

The extension interpolates the characteristic function at the hypercube
vertices and equals the expectation of the coalition outcome when each
library joins independently with probability x_i.  Exact Shapley and
Banzhaf-Coleman indices fall out of its diagonal partial derivatives; for
large library counts the swing probability window is approximated by a
normal random variable with a continuity correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .coopgame import (
    GameSizeError,
    IndexKind,
    IndexVector,
    SequenceGame,
    _shapley_coefficients,
    enumeration_limit,
)

DEFAULT_QUADRATURE_NODES = 64


@dataclass(frozen=True)
class MLEGame:
    """A sequence game together with the evaluation mode for its extension."""

    game: SequenceGame
    eval_mode: str = "exact-sum"  # "exact-sum" | "normal-approx"

    def __post_init__(self):
        if self.eval_mode not in ("exact-sum", "normal-approx"):
            raise ValueError(f"unknown eval_mode {self.eval_mode!r}")

    @property
    def n(self) -> int:
        return self.game.n


@dataclass(frozen=True)
class ApproxParams:
    """Tuning knobs for the normal approximation.

    ``quadrature_nodes`` is the number of composite-Simpson subintervals on
    [0,1] (bumped to the next even number if odd).  The continuity
    correction defaults to half the granularity (gcd) of the integer-scaled
    weights, which is the classic 1/2 for cardinality value functions; it is
    expressed in integer-scaled weight units.  ``variance`` selects whether
    weights enter the variance linearly or squared.
    """

    quadrature_nodes: int = DEFAULT_QUADRATURE_NODES
    continuity_correction: float | Fraction | None = None
    variance: str = "linear"  # "linear" | "squared"

    def __post_init__(self):
        if self.quadrature_nodes < 2:
            raise ValueError("quadrature_nodes must be at least 2")
        if self.continuity_correction is not None and self.continuity_correction < 0:
            raise ValueError("continuity_correction must be nonnegative")
        if self.variance not in ("linear", "squared"):
            raise ValueError(f"unknown variance mode {self.variance!r}")


def _check_exact(g: MLEGame, limit: int | None = None) -> None:
    if g.eval_mode != "exact-sum":
        raise ValueError("operation requires exact-sum mode")
    cap = enumeration_limit(limit)
    if g.n > cap:
        raise GameSizeError(
            f"exact extension over {g.n} libraries exceeds the limit of {cap}; "
            "use approx_index"
        )


def mle_evaluate(g: MLEGame, x: Sequence[Fraction | float], limit: int | None = None):
    """Evaluate the extension: sum over coalitions of membership products times outcomes.

    Exact when ``x`` holds Fractions; interpolates the characteristic
    function at every 0/1 vertex.
    """
    _check_exact(g, limit)
    if len(x) != g.n:
        raise ValueError(f"expected {g.n} coordinates, got {len(x)}")
    for xi in x:
        if not 0 <= xi <= 1:
            raise ValueError(f"coordinates must lie in [0, 1], got {xi}")
    ints, quota, _ = g.game.scaled
    n = g.n
    total = 0
    for mask in range(1 << n):
        s = 0
        prob = 1
        for k in range(n):
            if mask >> k & 1:
                s += ints[k]
                prob *= x[k]
            else:
                prob *= 1 - x[k]
        if s >= quota and prob:
            total += prob
    return total


def _marginal_sums(ints: Sequence[int], i: int) -> list[int]:
    """Subset sums over coalitions of all players except i, indexed by bitmask."""
    others = [w for k, w in enumerate(ints) if k != i]
    sums = [0] * (1 << len(others))
    for mask in range(1, len(sums)):
        low = mask & -mask
        sums[mask] = sums[mask ^ low] + others[low.bit_length() - 1]
    return sums


def shapley_via_mle(g: MLEGame, limit: int | None = None) -> IndexVector:
    """Shapley values from the diagonal integral of the extension's partials.

    Each swing monomial t^r (1-t)^(n-1-r) integrates in closed form to
    r!(n-1-r)!/n!, so the result is an exact rational equal to the
    enumeration route.
    """
    _check_exact(g, limit)
    game = g.game
    ints, quota, _ = game.scaled
    n = game.n
    coeff = _shapley_coefficients(n)
    values = []
    thetas = []
    for i in range(n):
        w = ints[i]
        phi = Fraction(0)
        theta = 0
        if w > 0:
            for mask, s in enumerate(_marginal_sums(ints, i)):
                if s < quota <= s + w:
                    phi += coeff[mask.bit_count()]
                    theta += 1
        values.append(phi)
        thetas.append(theta)
    return IndexVector(
        kind=IndexKind.SHAPLEY,
        library_ids=game.library_ids,
        values=tuple(values),
        swing_counts=tuple(thetas),
        degenerate=not game.grand_coalition_wins(),
    )


def bc_via_mle(g: MLEGame, limit: int | None = None) -> IndexVector:
    """Banzhaf-Coleman index from the extension's partials at the all-1/2 point.

    The raw power of library i is its swing count divided by 2^(n-1);
    normalized values equal the enumeration route.
    """
    _check_exact(g, limit)
    game = g.game
    ints, quota, _ = game.scaled
    n = game.n
    scale = Fraction(1, 2 ** (n - 1)) if n else Fraction(1)
    thetas = []
    for i in range(n):
        w = ints[i]
        theta = 0
        if w > 0:
            for s in _marginal_sums(ints, i):
                if s < quota <= s + w:
                    theta += 1
        thetas.append(theta)
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
        raw=tuple(t * scale for t in thetas),
    )


def aggregate_mle(
    games: Sequence[MLEGame], p: Sequence[Fraction], x: Sequence[Fraction | float],
    limit: int | None = None,
):
    """Occurrence-weighted sum of extensions; linear, so indices aggregate the same way."""
    if not games:
        raise ValueError("no games to aggregate")
    if len(games) != len(p):
        raise ValueError("one weight per game required")
    sizes = {g.n for g in games}
    if len(sizes) > 1:
        raise ValueError("games must share the same library count")
    total = sum(p)
    if abs(total - 1) > Fraction(1, 10**9):
        raise ValueError(f"aggregation weights must sum to 1, got {total}")
    return sum(pj * mle_evaluate(g, x, limit=limit) for pj, g in zip(p, games))


# ---------------------------------------------------------------------------
# Normal approximation


def _phi(z: float) -> float:
    """Standard normal CDF."""
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def _window_probability(
    t: float, w_i: int, sum_others: int, sumsq_others: int,
    quota: float, cc: float, squared: bool,
) -> float:
    """P(window) for the normal surrogate of the other libraries' weight sum."""
    if w_i == 0:
        return 0.0
    lo = quota - cc
    hi = quota + w_i - cc
    mu = t * sum_others
    var = t * (1.0 - t) * (sumsq_others if squared else sum_others)
    if var <= 0.0:
        return 1.0 if lo <= mu <= hi else 0.0
    sigma = math.sqrt(var)
    return _phi((hi - mu) / sigma) - _phi((lo - mu) / sigma)


def approx_index(
    game: SequenceGame, kind: IndexKind, params: ApproxParams | None = None
) -> IndexVector:
    """Approximate indices by the normal swing-window probability.

    Banzhaf-Coleman evaluates the window at t = 1/2 and normalizes; Shapley
    integrates it over t in [0,1] by composite Simpson.  Results are floats
    flagged ``approximate``.
    """
    params = params or ApproxParams()
    if game.n < 2:
        raise ValueError("normal approximation needs at least 2 libraries")
    ints, quota_int, _ = game.scaled
    quota = float(quota_int)
    positive = [w for w in ints if w > 0]
    if params.continuity_correction is not None:
        cc = float(params.continuity_correction)
    else:
        cc = math.gcd(*positive) / 2.0 if positive else 0.0
    total = sum(ints)
    total_sq = sum(w * w for w in ints)
    squared = params.variance == "squared"

    def window(i: int, t: float) -> float:
        w = ints[i]
        return _window_probability(
            t, w, total - w, total_sq - w * w, quota, cc, squared
        )

    if kind is IndexKind.BANZHAF:
        raw = tuple(window(i, 0.5) for i in range(game.n))
        total_raw = sum(raw)
        if total_raw == 0.0:
            values = tuple(0.0 for _ in raw)
        else:
            values = tuple(r / total_raw for r in raw)
        return IndexVector(
            kind=kind,
            library_ids=game.library_ids,
            values=values,
            degenerate=total_raw == 0.0,
            approximate=True,
            raw=raw,
        )

    intervals = params.quadrature_nodes + (params.quadrature_nodes % 2)
    h = 1.0 / intervals
    values = []
    for i in range(game.n):
        acc = window(i, 0.0) + window(i, 1.0)
        for j in range(1, intervals):
            acc += (4.0 if j % 2 else 2.0) * window(i, j * h)
        values.append(acc * h / 3.0)
    return IndexVector(
        kind=IndexKind.SHAPLEY,
        library_ids=game.library_ids,
        values=tuple(values),
        degenerate=not game.grand_coalition_wins(),
        approximate=True,
    )


def aggregate_weight_game(games: Sequence[SequenceGame]) -> SequenceGame:
    """Single game whose weights are the plain per-library sums across sequences.

    This is the literal summed-weight reading of the approximation setup,
    provided for comparison with the per-sequence default.
    """
    if not games:
        raise ValueError("no games to combine")
    ids = {g.library_ids for g in games}
    thresholds = {g.threshold for g in games}
    if len(ids) > 1 or len(thresholds) > 1:
        raise ValueError("games must share libraries and threshold")
    n = games[0].n
    weights = tuple(
        sum((g.weights[k] for g in games), Fraction(0)) for k in range(n)
    )
    return SequenceGame(
        library_ids=games[0].library_ids,
        weights=weights,
        threshold=games[0].threshold,
    )
