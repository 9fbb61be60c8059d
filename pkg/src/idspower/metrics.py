"""Detectability and efficiency metrics for (sequence, configuration) pairs.

Detectability is the value-weighted fraction of a sequence covered by a
configuration; efficiency is the value-weighted fraction of the
configuration's coverage that is useful against the sequence.  Both have
true-positive-weighted variants.  All results are exact rationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .model import AttackSequence, Configuration, Scenario, ValueFunction, coverage


class MetricError(ValueError):
    """A metric is undefined for the given inputs."""


@dataclass(frozen=True)
class MetricReport:
    """All four metrics for one (sequence, configuration) pair plus the tradeoff sum."""

    sequence_id: str
    eta: Fraction
    eta_weighted: Fraction
    zeta: Fraction
    zeta_weighted: Fraction
    tradeoff_sum: Fraction | float  # 1/eta + 1/zeta; math.inf when either metric is 0
    tradeoff_ok: bool  # the lower bound 1/eta + 1/zeta >= 1


def value(attack_ids, vf: ValueFunction) -> Fraction:
    """v(A): additive value of a set of attacks; v(empty) = 0."""
    return vf.value(attack_ids)


def _sequence_value(seq: AttackSequence, vf: ValueFunction) -> Fraction:
    v_seq = vf.value(seq.attack_set)
    if v_seq == 0:
        raise MetricError(f"undefined effectiveness: sequence {seq.id!r} has zero value")
    return v_seq


def _alpha_value(attack_ids, lib, vf: ValueFunction) -> Fraction:
    """Value of a set with each attack weighted by the library's tp rate for it."""
    return sum((vf.value([a]) * lib.tp_rate(a) for a in attack_ids), Fraction(0))


def effectiveness(seq: AttackSequence, lib, vf: ValueFunction) -> Fraction:
    """Fraction of the sequence's value this one library can detect."""
    return vf.value(seq.attack_set & lib.scope) / _sequence_value(seq, vf)


def weighted_effectiveness(seq: AttackSequence, lib, vf: ValueFunction) -> Fraction:
    """Effectiveness with each in-scope attack discounted by its tp rate."""
    return _alpha_value(seq.attack_set & lib.scope, lib, vf) / _sequence_value(seq, vf)


def detectability(
    seq: AttackSequence, config: Configuration, scenario: Scenario,
    vf: ValueFunction | None = None,
) -> Fraction:
    """Fraction of the sequence's value covered by the configuration."""
    vf = vf or scenario.value_function
    covered = coverage(config, scenario)
    return vf.value(seq.attack_set & covered) / _sequence_value(seq, vf)


def weighted_detectability(
    seq: AttackSequence, config: Configuration, scenario: Scenario,
    vf: ValueFunction | None = None,
) -> Fraction:
    """Detectability with per-attack tp discounting.

    Computed per member library as v_alpha(seq ∩ scope) / v(seq); when all tp
    rates within a library are equal this reduces to rate * effectiveness.
    Disjoint scopes make the per-library sum exact.
    """
    vf = vf or scenario.value_function
    v_seq = _sequence_value(seq, vf)
    total = Fraction(0)
    for lib_id in config.members:
        lib = scenario.library(lib_id)
        total += _alpha_value(seq.attack_set & lib.scope, lib, vf)
    return total / v_seq


def efficiency(
    seq: AttackSequence, config: Configuration, scenario: Scenario,
    vf: ValueFunction | None = None,
) -> Fraction:
    """Fraction of the configuration's coverage value that is useful against the sequence."""
    vf = vf or scenario.value_function
    covered = coverage(config, scenario)
    v_cov = vf.value(covered)
    if v_cov == 0:
        raise MetricError("efficiency undefined for empty coverage")
    return vf.value(seq.attack_set & covered) / v_cov


def weighted_efficiency(
    seq: AttackSequence, config: Configuration, scenario: Scenario,
    vf: ValueFunction | None = None,
) -> Fraction:
    """Efficiency with per-attack tp discounting of the useful coverage."""
    vf = vf or scenario.value_function
    covered = coverage(config, scenario)
    v_cov = vf.value(covered)
    if v_cov == 0:
        raise MetricError("efficiency undefined for empty coverage")
    total = Fraction(0)
    for lib_id in config.members:
        lib = scenario.library(lib_id)
        total += _alpha_value(seq.attack_set & lib.scope, lib, vf)
    return total / v_cov


def tradeoff_check(
    seq: AttackSequence, config: Configuration, scenario: Scenario,
    vf: ValueFunction | None = None,
) -> MetricReport:
    """Compute all metrics and the tradeoff lower bound 1/eta + 1/zeta >= 1.

    An empty coverage makes efficiency undefined; it is reported as 0 here so
    the check degenerates to an infinite sum (vacuously true).
    """
    vf = vf or scenario.value_function
    eta = detectability(seq, config, scenario, vf)
    eta_w = weighted_detectability(seq, config, scenario, vf)
    try:
        zeta = efficiency(seq, config, scenario, vf)
        zeta_w = weighted_efficiency(seq, config, scenario, vf)
    except MetricError:
        zeta = Fraction(0)
        zeta_w = Fraction(0)
    if eta == 0 or zeta == 0:
        tradeoff: Fraction | float = math.inf
    else:
        tradeoff = 1 / eta + 1 / zeta
    return MetricReport(
        sequence_id=seq.id,
        eta=eta,
        eta_weighted=eta_w,
        zeta=zeta,
        zeta_weighted=zeta_w,
        tradeoff_sum=tradeoff,
        tradeoff_ok=tradeoff >= 1,
    )
