"""Deterministic report payloads shared by the HTTP service and the CLI.

Builders return plain JSON-ready dicts: rationals are rendered exactly
("2/3"), floats by their shortest round-trip form, and row order always
follows declaration order, so a fixed scenario and flags produce
byte-identical reports.
"""

from __future__ import annotations

import dataclasses
import json
import math
import warnings as _warnings
from fractions import Fraction
from importlib import resources

from . import coopgame, metrics, mle, optimize
from .coopgame import IndexKind, IndexVector, SequenceGame
from .model import Configuration, Scenario, as_fraction, load_scenario

RANK_METHODS = ("auto", "enumerate", "dp", "normal-approx")
OPTIMIZE_METHODS = ("dp", "exhaustive", "greedy")


def fmt(value, decimal: int | None = None) -> str:
    """Render a rational (exactly) or a float (shortest round-trip) as a string."""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return repr(value) if decimal is None else f"{value:.{decimal}f}"
    if decimal is not None:
        return f"{float(value):.{decimal}f}"
    return str(value)


def scenario_summary(scenario: Scenario) -> dict:
    return {
        "libraries": len(scenario.libraries),
        "attacks": len(scenario.attacks),
        "sequences": len(scenario.sequences),
        "omega": fmt(scenario.omega),
        "budget": fmt(scenario.budget),
    }


def bundled_scenario_document() -> dict:
    """The attack-tree case study shipped with the package."""
    text = resources.files("idspower.data").joinpath("attack_tree.json").read_text()
    return json.loads(text)


def _reference_tables() -> dict:
    text = resources.files("idspower.data").joinpath("attack_tree_reference.json").read_text()
    return json.loads(text)


def validate_report(scenario: Scenario) -> dict:
    return {
        "valid": True,
        "errors": [],
        "warnings": list(scenario.warnings),
        "summary": scenario_summary(scenario),
    }


def metrics_report(scenario: Scenario, config_ids: list[str] | None) -> dict:
    """Per-sequence metric table for one configuration (all libraries by default)."""
    if config_ids is None:
        config = scenario.full_configuration()
    else:
        for lib_id in config_ids:
            scenario.library(lib_id)  # raises for unknown ids
        config = Configuration(frozenset(config_ids))
    members = [lib_id for lib_id in scenario.library_ids if lib_id in config.members]
    rows = []
    for seq in scenario.sequences:
        report = metrics.tradeoff_check(seq, config, scenario)
        rows.append({
            "sequence": seq.id,
            "eta": fmt(report.eta),
            "eta_weighted": fmt(report.eta_weighted),
            "zeta": fmt(report.zeta),
            "zeta_weighted": fmt(report.zeta_weighted),
            "tradeoff_sum": fmt(report.tradeoff_sum),
            "tradeoff_ok": report.tradeoff_ok,
        })
    return {
        "config": members,
        "warnings": list(scenario.warnings),
        "rows": rows,
    }


def _dummy_flags(vector: IndexVector) -> list[bool]:
    if vector.swing_counts is not None:
        return [c == 0 for c in vector.swing_counts]
    source = vector.raw if vector.raw is not None else vector.values
    return [v == 0 for v in source]


def _vector_rows(vector: IndexVector) -> list[dict]:
    dummies = _dummy_flags(vector)
    return [
        {
            "library": lib_id,
            "value": fmt(vector.values[k]),
            "swings": vector.swing_counts[k] if vector.swing_counts is not None else None,
            "dummy": dummies[k],
        }
        for k, lib_id in enumerate(vector.library_ids)
    ]


def _solve_game(game: SequenceGame, kind: IndexKind, method: str,
                params: mle.ApproxParams) -> IndexVector:
    if method == "enumerate":
        return coopgame.shapley_exact(game) if kind is IndexKind.SHAPLEY else coopgame.banzhaf(game)
    if method in ("dp", "auto"):
        return coopgame.shapley_dp(game) if kind is IndexKind.SHAPLEY else coopgame.banzhaf_dp(game)
    if method == "normal-approx":
        return mle.approx_index(game, kind, params)
    raise ValueError(f"unknown method {method!r}")


def _zero_vector(scenario: Scenario, kind: IndexKind) -> IndexVector:
    n = len(scenario.libraries)
    return IndexVector(
        kind=kind,
        library_ids=scenario.library_ids,
        values=tuple(Fraction(0) for _ in range(n)),
        swing_counts=tuple(0 for _ in range(n)),
        degenerate=True,
    )


def compute_rank(
    scenario: Scenario,
    kind: IndexKind,
    method: str = "auto",
    weighted: bool = False,
    params: mle.ApproxParams | None = None,
    aggregate_weights: bool = False,
) -> tuple[IndexVector, list[tuple[str, IndexVector]], list[str]]:
    """Aggregate and per-sequence index vectors plus computation warnings."""
    if method not in RANK_METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {', '.join(RANK_METHODS)}")
    if aggregate_weights and method != "normal-approx":
        raise ValueError("aggregate_weights applies only to method 'normal-approx'")
    params = params or mle.ApproxParams()
    notes: list[str] = []
    with _warnings.catch_warnings(record=True) as caught:
        _warnings.simplefilter("always")
        games = [build for seq in scenario.sequences
                 for build in [coopgame.build_game(seq, scenario, weighted=weighted)]]
        if aggregate_weights:
            combined = mle.aggregate_weight_game(games)
            aggregate = mle.approx_index(combined, kind, params)
            per_sequence: list[tuple[str, IndexVector]] = []
            notes.append("weights summed across sequences before approximation")
        elif not games:
            aggregate = _zero_vector(scenario, kind)
            per_sequence = []
            notes.append("scenario has no sequences; all indices are 0")
        else:
            vectors = [_solve_game(g, kind, method, params) for g in games]
            per_sequence = [(seq.id, v) for seq, v in zip(scenario.sequences, vectors)]
            for seq_id, v in per_sequence:
                if v.degenerate:
                    notes.append(f"sequence {seq_id!r}: no winning coalition; indices are 0")
            aggregate = coopgame.aggregate_indices(
                vectors, [seq.weight for seq in scenario.sequences]
            )
    notes.extend(str(w.message) for w in caught)
    return aggregate, per_sequence, notes


def rank_report(
    scenario: Scenario,
    kind: IndexKind,
    method: str = "auto",
    weighted: bool = False,
    per_sequence: bool = False,
    params: mle.ApproxParams | None = None,
    aggregate_weights: bool = False,
) -> dict:
    aggregate, sequence_vectors, notes = compute_rank(
        scenario, kind, method, weighted, params, aggregate_weights
    )
    payload = {
        "index": kind.value,
        "method": method,
        "weighted": weighted,
        "omega": fmt(scenario.omega),
        "approximate": aggregate.approximate,
        "aggregate": _vector_rows(aggregate),
        "per_sequence": None,
        "warnings": list(scenario.warnings) + notes,
    }
    if per_sequence:
        payload["per_sequence"] = [
            {"sequence": seq_id, "degenerate": v.degenerate, "rows": _vector_rows(v)}
            for seq_id, v in sequence_vectors
        ]
    return payload


def optimize_report(
    scenario: Scenario,
    kind: IndexKind = IndexKind.SHAPLEY,
    method: str = "dp",
    budget=None,
    rank_method: str = "auto",
    weighted: bool = False,
) -> dict:
    if method not in OPTIMIZE_METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {', '.join(OPTIMIZE_METHODS)}")
    budget = scenario.budget if budget is None else as_fraction(budget, "budget")
    aggregate, _, notes = compute_rank(scenario, kind, rank_method, weighted)
    costs = [lib.cost for lib in scenario.libraries]
    selection = optimize.optimize_default_config(aggregate, costs, budget, method=method)
    chosen_ids = [lib_id for lib_id in scenario.library_ids if lib_id in selection.chosen.members]
    detect_rows = []
    for seq in scenario.sequences:
        eta = metrics.detectability(seq, selection.chosen, scenario)
        detect_rows.append({"sequence": seq.id, "eta": fmt(eta)})
    return {
        "index": kind.value,
        "method": selection.method,
        "budget": fmt(budget),
        "chosen": chosen_ids,
        "objective": fmt(selection.objective),
        "budget_used": fmt(selection.budget_used),
        "residual_budget": fmt(budget - selection.budget_used),
        "per_sequence_detectability": detect_rows,
        "warnings": list(scenario.warnings) + notes,
    }


def reproduce_report() -> dict:
    """Recompute the bundled case study's index tables and budgeted selection.

    Each computed row is compared against the shipped reference tables;
    mismatching reference rows are reported alongside the recomputed values
    rather than silently replaced.
    """
    scenario = load_scenario(bundled_scenario_document())
    reference = _reference_tables()
    notes: list[str] = []
    tables = []
    for kind in (IndexKind.SHAPLEY, IndexKind.BANZHAF):
        _, sequence_vectors, _ = compute_rank(scenario, kind, method="enumerate")
        rows = []
        for seq_id, vector in sequence_vectors:
            computed = [fmt(v) for v in vector.values]
            expected = reference[kind.value][seq_id]
            match = [Fraction(c) for c in computed] == [Fraction(e) for e in expected]
            rows.append({
                "sequence": seq_id,
                "computed": computed,
                "reference": expected,
                "match": match,
            })
            if not match:
                note = reference["notes"].get(f"{kind.value}.{seq_id}")
                if note:
                    notes.append(f"{kind.value} {seq_id}: {note}")
        tables.append({
            "index": kind.value,
            "libraries": list(scenario.library_ids),
            "rows": rows,
        })

    selection = optimize_report(scenario, kind=IndexKind.SHAPLEY, method="dp")
    expected_chosen = reference["selection"]["chosen"]
    return {
        "summary": scenario_summary(scenario),
        "tables": tables,
        "selection": {
            "budget": selection["budget"],
            "chosen": selection["chosen"],
            "objective": selection["objective"],
            "reference_chosen": expected_chosen,
            "match": selection["chosen"] == expected_chosen,
        },
        "notes": notes,
    }


def selection_to_dict(selection: optimize.SelectionResult) -> dict:
    data = dataclasses.asdict(selection)
    data["chosen"] = sorted(selection.chosen.members)
    data["objective"] = fmt(selection.objective)
    data["budget_used"] = fmt(selection.budget_used)
    return data
