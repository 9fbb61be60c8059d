"""Domain types, scenario ingestion and validation.

All types are immutable after construction and all operations are pure,
so everything in this module is safe to share across threads.  Numeric
fields are exact :class:`fractions.Fraction` values; floats in input
documents are interpreted by their decimal literal (``0.6`` becomes 3/5).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, Mapping

WEIGHT_SUM_TOLERANCE = Fraction(1, 10**9)


class ScenarioError(Exception):
    """Base class for scenario ingestion failures."""


class ScenarioParseError(ScenarioError):
    """The document is not well-formed (bad JSON, wrong structure or types)."""


class ScenarioValidationError(ScenarioError):
    """One or more scenario invariants are violated.

    ``errors`` lists every violation found, not just the first.
    """

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def as_fraction(value: Any, context: str = "value") -> Fraction:
    """Convert a JSON scalar (int, float or string like ``"2/3"``) to an exact Fraction."""
    if isinstance(value, bool):
        raise ScenarioParseError(f"{context}: expected a number, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # decimal semantics, not binary: 0.6 -> 3/5
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ScenarioParseError(f"{context}: cannot parse {value!r} as a rational") from exc
    raise ScenarioParseError(f"{context}: expected a number, got {type(value).__name__}")


@dataclass(frozen=True)
class Attack:
    id: str
    damage: Fraction = Fraction(1)


@dataclass(frozen=True)
class Library:
    """A detection library: what it can detect, what it costs, how reliably it fires."""

    id: str
    cost: Fraction
    scope: frozenset[str]
    tp: Mapping[str, Fraction] = field(default_factory=dict)

    def tp_rate(self, attack_id: str) -> Fraction:
        """True-positive rate for an attack; 0 outside scope, default 1 inside."""
        if attack_id not in self.scope:
            return Fraction(0)
        return self.tp.get(attack_id, Fraction(1))

    def fn_rate(self, attack_id: str) -> Fraction:
        return Fraction(1) - self.tp_rate(attack_id)


@dataclass(frozen=True)
class AttackSequence:
    """An ordered multi-stage attack.  Order matters only for display and splitting."""

    id: str
    attacks: tuple[str, ...]
    weight: Fraction = Fraction(1)

    @cached_property
    def attack_set(self) -> frozenset[str]:
        return frozenset(self.attacks)


@dataclass(frozen=True)
class ValueFunction:
    """Additive set value: v(A) = sum of per-attack weights (cardinality when all 1)."""

    weights: Mapping[str, Fraction]

    def value(self, attack_ids: Iterable[str]) -> Fraction:
        total = Fraction(0)
        for a in attack_ids:
            try:
                total += self.weights[a]
            except KeyError:
                raise ValueError(f"unknown attack id {a!r}") from None
        return total


@dataclass(frozen=True)
class Configuration:
    """A coalition of libraries."""

    members: frozenset[str]

    @classmethod
    def of(cls, *library_ids: str) -> "Configuration":
        return cls(frozenset(library_ids))


@dataclass(frozen=True)
class Scenario:
    libraries: tuple[Library, ...]
    attacks: tuple[Attack, ...]
    sequences: tuple[AttackSequence, ...]
    omega: Fraction
    budget: Fraction
    value_function: ValueFunction
    warnings: tuple[str, ...] = ()

    @cached_property
    def _attack_map(self) -> dict[str, Attack]:
        return {a.id: a for a in self.attacks}

    @cached_property
    def _library_map(self) -> dict[str, Library]:
        return {l.id: l for l in self.libraries}

    @cached_property
    def library_ids(self) -> tuple[str, ...]:
        return tuple(l.id for l in self.libraries)

    def attack(self, attack_id: str) -> Attack:
        try:
            return self._attack_map[attack_id]
        except KeyError:
            raise ValueError(f"unknown attack id {attack_id!r}") from None

    def library(self, library_id: str) -> Library:
        try:
            return self._library_map[library_id]
        except KeyError:
            raise ValueError(f"unknown library id {library_id!r}") from None

    def sequence(self, sequence_id: str) -> AttackSequence:
        for seq in self.sequences:
            if seq.id == sequence_id:
                return seq
        raise ValueError(f"unknown sequence id {sequence_id!r}")

    def full_configuration(self) -> Configuration:
        return Configuration(frozenset(self.library_ids))


# ---------------------------------------------------------------------------
# Ingestion


_TOP_LEVEL_KEYS = {"attacks", "libraries", "sequences", "omega", "budget", "value_weights"}
_REQUIRED_KEYS = {"attacks", "libraries", "sequences", "omega", "budget"}


def _require_dict(obj: Any, context: str) -> dict:
    if not isinstance(obj, dict):
        raise ScenarioParseError(f"{context}: expected an object, got {type(obj).__name__}")
    return obj


def _require_list(obj: Any, context: str) -> list:
    if not isinstance(obj, list):
        raise ScenarioParseError(f"{context}: expected a list, got {type(obj).__name__}")
    return obj


def _require_str(obj: Any, context: str) -> str:
    if not isinstance(obj, str):
        raise ScenarioParseError(f"{context}: expected a string, got {type(obj).__name__}")
    return obj


def _check_keys(entry: dict, allowed: set[str], required: set[str], context: str) -> None:
    unknown = sorted(set(entry) - allowed)
    if unknown:
        raise ScenarioParseError(f"{context}: unknown key(s) {', '.join(unknown)}")
    missing = sorted(required - set(entry))
    if missing:
        raise ScenarioParseError(f"{context}: missing key(s) {', '.join(missing)}")


def parse_scenario_document(document: str | bytes | dict) -> Scenario:
    """Parse a scenario document into a Scenario without validating invariants."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ScenarioParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    else:
        doc = document
    doc = _require_dict(doc, "document")
    _check_keys(doc, _TOP_LEVEL_KEYS, _REQUIRED_KEYS, "document")

    attacks = []
    for i, entry in enumerate(_require_list(doc["attacks"], "attacks")):
        ctx = f"attacks[{i}]"
        entry = _require_dict(entry, ctx)
        _check_keys(entry, {"id", "damage"}, {"id"}, ctx)
        attacks.append(Attack(
            id=_require_str(entry["id"], f"{ctx}.id"),
            damage=as_fraction(entry.get("damage", 1), f"{ctx}.damage"),
        ))

    libraries = []
    for i, entry in enumerate(_require_list(doc["libraries"], "libraries")):
        ctx = f"libraries[{i}]"
        entry = _require_dict(entry, ctx)
        _check_keys(entry, {"id", "cost", "scope", "tp"}, {"id", "cost", "scope"}, ctx)
        scope = frozenset(
            _require_str(a, f"{ctx}.scope[{k}]")
            for k, a in enumerate(_require_list(entry["scope"], f"{ctx}.scope"))
        )
        tp = {
            _require_str(a, f"{ctx}.tp key"): as_fraction(rate, f"{ctx}.tp[{a}]")
            for a, rate in _require_dict(entry.get("tp", {}), f"{ctx}.tp").items()
        }
        libraries.append(Library(
            id=_require_str(entry["id"], f"{ctx}.id"),
            cost=as_fraction(entry["cost"], f"{ctx}.cost"),
            scope=scope,
            tp=tp,
        ))

    sequences = []
    for i, entry in enumerate(_require_list(doc["sequences"], "sequences")):
        ctx = f"sequences[{i}]"
        entry = _require_dict(entry, ctx)
        _check_keys(entry, {"id", "attacks", "weight"}, {"id", "attacks", "weight"}, ctx)
        sequences.append(AttackSequence(
            id=_require_str(entry["id"], f"{ctx}.id"),
            attacks=tuple(
                _require_str(a, f"{ctx}.attacks[{k}]")
                for k, a in enumerate(_require_list(entry["attacks"], f"{ctx}.attacks"))
            ),
            weight=as_fraction(entry["weight"], f"{ctx}.weight"),
        ))

    value_weights = {
        _require_str(a, "value_weights key"): as_fraction(w, f"value_weights[{a}]")
        for a, w in _require_dict(doc.get("value_weights", {}), "value_weights").items()
    }
    weights = {a.id: value_weights.get(a.id, Fraction(1)) for a in attacks}
    weights.update({a: w for a, w in value_weights.items() if a not in weights})

    return Scenario(
        libraries=tuple(libraries),
        attacks=tuple(attacks),
        sequences=tuple(sequences),
        omega=as_fraction(doc["omega"], "omega"),
        budget=as_fraction(doc["budget"], "budget"),
        value_function=ValueFunction(weights),
    )


def validate_scenario(scenario: Scenario, strict_scopes: bool = True) -> tuple[list[str], list[str]]:
    """Check every scenario invariant; returns (errors, warnings)."""
    errors: list[str] = []
    warnings: list[str] = []
    attack_ids = {a.id for a in scenario.attacks}

    seen: set[str] = set()
    for a in scenario.attacks:
        if a.id in seen:
            errors.append(f"duplicate attack id {a.id!r}")
        seen.add(a.id)
        if a.damage < 0:
            errors.append(f"attack {a.id!r}: damage must be nonnegative, got {a.damage}")

    seen = set()
    claimed: dict[str, str] = {}
    for lib in scenario.libraries:
        if lib.id in seen:
            errors.append(f"duplicate library id {lib.id!r}")
        seen.add(lib.id)
        if lib.cost < 0:
            errors.append(f"library {lib.id!r}: cost must be nonnegative, got {lib.cost}")
        for a in sorted(lib.scope):
            if a not in attack_ids:
                errors.append(f"library {lib.id!r}: scope references unknown attack id {a!r}")
            elif a in claimed:
                msg = f"overlapping scopes: attack {a!r} claimed by both {claimed[a]!r} and {lib.id!r}"
                if strict_scopes:
                    errors.append(msg)
                else:
                    warnings.append(msg + " (indices are only guaranteed for disjoint scopes)")
            else:
                claimed[a] = lib.id
        for a, rate in sorted(lib.tp.items()):
            if a not in lib.scope:
                errors.append(f"library {lib.id!r}: tp rate given for attack {a!r} outside its scope")
            if not 0 <= rate <= 1:
                errors.append(f"library {lib.id!r}: tp rate for {a!r} must be in [0,1], got {rate}")

    seen = set()
    for seq in scenario.sequences:
        if seq.id in seen:
            errors.append(f"duplicate sequence id {seq.id!r}")
        seen.add(seq.id)
        if not seq.attacks:
            errors.append(f"sequence {seq.id!r}: must contain at least one attack")
        if len(seq.attacks) != len(seq.attack_set):
            errors.append(f"sequence {seq.id!r}: duplicate attack ids within the sequence")
        for a in seq.attacks:
            if a not in attack_ids:
                errors.append(f"sequence {seq.id!r}: references unknown attack id {a!r}")
        if seq.weight < 0:
            errors.append(f"sequence {seq.id!r}: weight must be nonnegative, got {seq.weight}")

    if scenario.sequences and all(s.weight >= 0 for s in scenario.sequences):
        total = sum((s.weight for s in scenario.sequences), Fraction(0))
        if total == 0:
            errors.append("sequence weights sum to zero; cannot normalize")
        elif total != 1 and abs(total - 1) > WEIGHT_SUM_TOLERANCE:
            warnings.append(f"sequence weights sum to {total}; normalized to 1")

    for a, w in sorted(scenario.value_function.weights.items()):
        if a not in attack_ids:
            errors.append(f"value_weights references unknown attack id {a!r}")
        if w <= 0:
            errors.append(f"value weight for {a!r} must be positive, got {w}")

    if not 0 < scenario.omega <= 1:
        errors.append(f"omega must be in (0, 1], got {scenario.omega}")
    elif scenario.omega <= Fraction(1, 2):
        warnings.append(
            f"omega = {scenario.omega} <= 1/2: characteristic functions may not be superadditive"
        )
    if scenario.budget < 0:
        errors.append(f"budget must be nonnegative, got {scenario.budget}")

    return errors, warnings


def load_scenario(document: str | bytes | dict, strict_scopes: bool = True) -> Scenario:
    """Parse and validate a scenario document.

    Raises :class:`ScenarioParseError` for malformed documents and
    :class:`ScenarioValidationError` listing every violated invariant.
    Sequence weights summing to a positive value other than 1 are
    normalized, with a warning recorded on the scenario.
    """
    scenario = parse_scenario_document(document)
    errors, warnings = validate_scenario(scenario, strict_scopes=strict_scopes)
    if errors:
        raise ScenarioValidationError(errors)

    sequences = scenario.sequences
    if sequences:
        total = sum((s.weight for s in sequences), Fraction(0))
        if total != 1:
            sequences = tuple(
                AttackSequence(s.id, s.attacks, s.weight / total) for s in sequences
            )

    return Scenario(
        libraries=scenario.libraries,
        attacks=scenario.attacks,
        sequences=sequences,
        omega=scenario.omega,
        budget=scenario.budget,
        value_function=scenario.value_function,
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Coverage / split / cost / damage primitives


def coverage(config: Configuration, scenario: Scenario) -> frozenset[str]:
    """Union of the member libraries' detection scopes."""
    covered: set[str] = set()
    for lib_id in config.members:
        covered |= scenario.library(lib_id).scope
    return frozenset(covered)


def split_sequence(
    seq: AttackSequence, config: Configuration, scenario: Scenario
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Partition a sequence into (detectable, undetectable) parts, preserving order."""
    covered = coverage(config, scenario)
    detectable = tuple(a for a in seq.attacks if a in covered)
    undetectable = tuple(a for a in seq.attacks if a not in covered)
    return detectable, undetectable


def config_cost(config: Configuration, scenario: Scenario) -> Fraction:
    """Total cost of a configuration (costs are independent, so they add)."""
    return sum((scenario.library(lib_id).cost for lib_id in config.members), Fraction(0))


def sequence_damage(seq: AttackSequence, scenario: Scenario) -> Fraction:
    """Total damage of a sequence; independent of attack order."""
    return sum((scenario.attack(a).damage for a in seq.attacks), Fraction(0))
