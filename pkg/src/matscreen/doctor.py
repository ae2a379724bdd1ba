"""
Convergence doctor: rule-based fixes for SCF runs that did not converge.

Suggestions escalate with the ``attempt`` marker carried in the input's
extras (absent means attempt 1; attempts past 3 stay at level 3):

    level 1  electron_maxstep -> 300   iterations hit the cap while accuracy still improved
             degauss -> 0.03           smeared (metallic) occupations
    level 2  mixing_beta 0.3, mixing_mode local-TF, startingwfc atomic+random
    level 3  ecutwfc -> 80, david diagonalization with david_ndim 4, conv_thr 1e-5

Three further fixes (starting magnetization, vacuum, scf_must_converge) are
only returned when the question names them.

Example:
    ```python
    fixes = doctor_suggest(pwi.read_text(), pwo.read_text())
    repaired = apply_suggestions(spec, fixes)
    ```
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Literal

from pydantic import ValidationError

from .errors import ParseFailure, QEIOError
from .qeio import (
    PW_EXTRAS,
    CalcSpec,
    ExtraValue,
    OutputSummary,
    parse_input_text,
    parse_output_text,
)

logger = logging.getLogger(__name__)

Action = Literal["set", "add", "increase-to"]

MAX_LEVEL = 3
DECREASING_WINDOW = 5
SPEC_FIELDS = frozenset(CalcSpec.model_fields) - {"extras", "pseudopotentials"}
EXTRA_KEYS = frozenset(PW_EXTRAS) | {"attempt", "vacuum"}


def _base_key(key: str) -> str:
    return key.split("(", 1)[0]


@dataclass(frozen=True)
class Suggestion:
    """One parameter change proposed by the doctor."""

    parameter: str
    action: Action
    value: ExtraValue
    reason: str

    def __post_init__(self) -> None:
        if self.parameter not in SPEC_FIELDS and _base_key(self.parameter) not in EXTRA_KEYS:
            raise ValueError(f"'{self.parameter}' is not a calculation parameter")
        if self.action not in ("set", "add", "increase-to"):
            raise ValueError(f"unknown action '{self.action}'")

    def __str__(self) -> str:
        return f"{self.parameter}: {self.action} {self.value!r} ({self.reason})"


Condition = Callable[[CalcSpec, OutputSummary], bool]


@dataclass(frozen=True)
class Rule:
    level: int
    suggestion: Suggestion
    applies: Condition = lambda spec, out: True


def _hit_cap_still_improving(spec: CalcSpec, out: OutputSummary) -> bool:
    tail = out.accuracy_series[-DECREASING_WINDOW:]
    decreasing = len(tail) >= 2 and all(a > b for a, b in zip(tail, tail[1:]))
    return out.n_scf == spec.electron_maxstep and decreasing


def _smeared(spec: CalcSpec, out: OutputSummary) -> bool:
    return spec.occupations == "smearing"


RULES: tuple[Rule, ...] = (
    Rule(
        1,
        Suggestion(
            "electron_maxstep",
            "increase-to",
            300,
            "SCF stopped at the iteration limit while the accuracy was still improving",
        ),
        _hit_cap_still_improving,
    ),
    Rule(
        1,
        Suggestion("degauss", "increase-to", 0.03, "wider smearing helps with metallic systems"),
        _smeared,
    ),
    Rule(2, Suggestion("mixing_beta", "add", 0.3, "smaller mixing damps charge sloshing")),
    Rule(
        2,
        Suggestion("mixing_mode", "set", "local-TF", "local-TF mixing suits inhomogeneous slabs"),
    ),
    Rule(
        2,
        Suggestion(
            "startingwfc", "set", "atomic+random", "randomised start escapes a stuck guess"
        ),
    ),
    Rule(3, Suggestion("ecutwfc", "increase-to", 80.0, "a larger basis steadies the SCF")),
    Rule(3, Suggestion("diagonalization", "set", "david", "Davidson with a wider subspace")),
    Rule(3, Suggestion("david_ndim", "set", 4, "Davidson with a wider subspace")),
    Rule(3, Suggestion("conv_thr", "set", 1.0e-5, "a looser threshold is reachable")),
)

# Returned only when the question mentions one of the keywords.
INERT_RULES: tuple[tuple[tuple[str, ...], Suggestion], ...] = (
    (
        ("magnetization", "magnetic", "spin"),
        Suggestion(
            "starting_magnetization(1)", "set", 0.1, "seed a small moment on the metal species"
        ),
    ),
    (("vacuum",), Suggestion("vacuum", "increase-to", 15.0, "more vacuum between slab images")),
    (
        ("scf_must_converge",),
        Suggestion("scf_must_converge", "set", False, "keep going on unconverged steps"),
    ),
)


def escalation_level(spec: CalcSpec) -> int:
    return max(1, min(spec.attempt, MAX_LEVEL))


def diagnose(spec: CalcSpec, output: OutputSummary, question: str = "") -> list[Suggestion]:
    """Suggestions for a parsed input/output pair; empty when the run converged."""
    if output.converged:
        return []
    level = escalation_level(spec)
    suggestions = [r.suggestion for r in RULES if r.level == level and r.applies(spec, output)]
    lowered = question.lower()
    suggestions += [s for words, s in INERT_RULES if any(w in lowered for w in words)]
    logger.info("doctor level %d: %d suggestion(s)", level, len(suggestions))
    return suggestions


def doctor_suggest(input_text: str, output_text: str, question: str = "") -> list[Suggestion]:
    """
    Suggest parameter changes for an unconverged run.

    Raises:
        ParseFailure: Either document does not parse.
    """
    try:
        spec, _ = parse_input_text(input_text)
    except (QEIOError, ValidationError) as e:
        raise ParseFailure(f"input document: {e}") from e
    try:
        output = parse_output_text(output_text)
    except QEIOError as e:
        raise ParseFailure(f"output document: {e}") from e
    return diagnose(spec, output, question)


def _merge(current: ExtraValue | None, suggestion: Suggestion) -> ExtraValue:
    if (
        suggestion.action == "increase-to"
        and isinstance(current, (int, float))
        and not isinstance(current, bool)
        and isinstance(suggestion.value, (int, float))
    ):
        return max(current, suggestion.value)
    return suggestion.value


def apply_suggestions(spec: CalcSpec, suggestions: Sequence[Suggestion]) -> CalcSpec:
    """
    Return ``spec`` with the suggestions applied.

    ``set`` and ``add`` assign; ``increase-to`` never lowers a value.
    Parameters outside CalcSpec go into extras. Applying twice changes nothing.
    """
    values = spec.model_dump()
    extras = dict(spec.extras)
    for s in suggestions:
        if s.parameter in SPEC_FIELDS:
            values[s.parameter] = _merge(values[s.parameter], s)
        else:
            extras[s.parameter] = _merge(extras.get(s.parameter), s)
    values["extras"] = extras
    return CalcSpec.model_validate(values)
