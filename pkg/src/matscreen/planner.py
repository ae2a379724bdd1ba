"""
Planning supervisor.

This module provides:
- `PlanState`: the five-field record (input, plan, past_steps, response, next)
- `make_plan` / `record_step` / `replan`: the state transitions
- `TemplatePlannerPolicy`: plan templates for the three objective families
  plus the replanning rules
- `run_workflow`: dispatch loop that mirrors every transition to the canvas

Replanning rules of `TemplatePlannerPolicy`:
    - a failed submission whose report starts with "Job failed" gets a repair
      round (modify inputs, add resources, resubmit) inserted after it; more
      rounds than the configured limit raise LoopLimitExceeded
    - before production resources are requested, the production inputs must
      cover the clean slab, the isolated molecule and the adsorbate systems;
      missing ones get a generation step
    - any other failure ends the workflow with WorkflowFailed

Example:
    ```python
    policy = TemplatePlannerPolicy()
    state = make_plan(objective, capabilities, policy)
    while state.next != FINISH:
        report = run_worker(state.active_step)
        state = replan(record_step(state, report), policy)
    ```
"""

from __future__ import annotations

import copy
import logging
import re
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from typing import Any, Literal, Protocol

from ase.symbols import string2symbols

from .agentcore import FAILED_PREFIX, AgentReport
from .canvas import Canvas
from .errors import (
    LoopLimitExceeded,
    NoActiveStep,
    NoConvergedValue,
    UnsupportedObjective,
    WorkflowFailed,
)

logger = logging.getLogger(__name__)

FINISH = "FINISH"
PLANNER_ACTOR = "planner"
SUMMARY_BOUND = 500
DEFAULT_REPAIR_ROUNDS = 3
MAX_DISPATCHES = 500

DFT_WORKER = "dft_agent"
HPC_WORKER = "hpc_agent"

StepStatus = Literal["pending", "active", "done", "dropped"]


@dataclass
class PlanStep:
    description: str
    assignee: str
    status: StepStatus = "pending"


@dataclass(frozen=True)
class StepRecord:
    description: str
    assignee: str
    summary: str
    status: Literal["ok", "failed"]


@dataclass
class PlanState:
    """Supervisor state. ``response`` is set exactly when ``next`` is FINISH."""

    input: str
    plan: list[PlanStep]
    past_steps: list[StepRecord] = field(default_factory=list)
    response: str | None = None
    next: str = FINISH

    @property
    def active_step(self) -> PlanStep | None:
        return next((s for s in self.plan if s.status == "active"), None)

    def to_canvas(self) -> tuple[list[dict[str, str]], list[dict[str, str]]]:
        plan = [
            {"description": s.description, "assignee": s.assignee, "status": s.status}
            for s in self.plan
        ]
        past = [
            {
                "description": r.description,
                "assignee": r.assignee,
                "summary": r.summary,
                "status": r.status,
            }
            for r in self.past_steps
        ]
        return plan, past


@dataclass(frozen=True)
class Replan:
    """A policy decision: the edited plan, plus the final response when the work is complete."""

    plan: list[PlanStep]
    response: str | None = None


class PlannerPolicy(Protocol):
    def initial_plan(self, objective: str, capabilities: Mapping[str, str]) -> list[PlanStep]: ...

    def decide(
        self, objective: str, plan: Sequence[PlanStep], past_steps: Sequence[StepRecord]
    ) -> Replan: ...


# ---------------------------------------------------------------------------
# Transitions
# ---------------------------------------------------------------------------


def _bounded(summary: str, bound: int = SUMMARY_BOUND) -> str:
    return summary if len(summary) <= bound else summary[: bound - 3] + "..."


def make_plan(
    objective: str, capabilities: Mapping[str, str], policy: PlannerPolicy
) -> PlanState:
    """
    Decompose an objective into assigned steps and activate the first one.

    Raises:
        UnsupportedObjective: The policy does not know the objective family.
    """
    if not objective.strip():
        raise UnsupportedObjective("objective is empty")
    plan = policy.initial_plan(objective, capabilities)
    if not plan:
        raise UnsupportedObjective(f"no plan for objective: {objective}")
    unknown = sorted({s.assignee for s in plan} - set(capabilities))
    if unknown:
        raise WorkflowFailed(f"plan assigns steps to unknown workers {unknown}")
    plan[0].status = "active"
    logger.info("initial plan with %d steps", len(plan))
    return PlanState(input=objective, plan=plan, next=plan[0].assignee)


def record_step(state: PlanState, report: AgentReport) -> PlanState:
    """
    Close the active step with a worker report.

    A successful step becomes done. A failed one is dropped; its outcome stays
    in past_steps and any replacement is a new step.

    Raises:
        NoActiveStep: No step is active.
    """
    new = copy.deepcopy(state)
    step = new.active_step
    if step is None:
        raise NoActiveStep("record_step called with no active step")
    ok = report.status == "ok"
    step.status = "done" if ok else "dropped"
    new.past_steps.append(
        StepRecord(step.description, step.assignee, _bounded(report.summary), report.status)
    )
    return new


def replan(state: PlanState, policy: PlannerPolicy) -> PlanState:
    """
    Ask the policy for plan edits, then finish or activate the next pending step.

    The policy only sees the objective, the plan and the past steps.
    """
    if state.next == FINISH and state.response is not None:
        return state
    decision = policy.decide(state.input, copy.deepcopy(state.plan), list(state.past_steps))
    new = replace(state, plan=decision.plan, past_steps=list(state.past_steps))
    if decision.response is not None:
        return replace(new, response=decision.response, next=FINISH)
    pending = next((s for s in new.plan if s.status == "pending"), None)
    if pending is None:
        raise WorkflowFailed("no pending step left and no final response")
    pending.status = "active"
    return replace(new, next=pending.assignee)


# ---------------------------------------------------------------------------
# Objectives and templates
# ---------------------------------------------------------------------------

_LATTICE_RE = re.compile(
    r"lattice constant for (?P<lattice>[A-Za-z]+) (?P<element>[A-Z][A-Za-z0-9]*)"
    r"(?:.*?with (?P<xc>LDA|PBE|BEEF-vdW))?"
    r".*?experimental value is (?P<a>\d+(?:\.\d+)?)",
    re.IGNORECASE | re.DOTALL,
)
_ENSEMBLE_RE = re.compile(
    r"BEEF-vdW ensemble analysis of (?P<adsorbate>[A-Z][A-Za-z0-9]*) adsorption.*?"
    r"on (?P<metal>[A-Z][a-z]?)\((?P<facet>\d+)\) with a p\((?P<p>\d+)x(?P<q>\d+)\) cell",
    re.DOTALL,
)
_ADSORPTION_RE = re.compile(
    r"adsorption energy.*? of (?P<adsorbate>[A-Z][A-Za-z0-9]*) on (?P<metal>[A-Z][a-z]?)"
    r"\((?P<facet>\d+)\) with a p\((?P<p>\d+)x(?P<q>\d+)\) cell using (?P<xc>LDA|PBE|BEEF-vdW)",
    re.DOTALL,
)


def parse_objective(objective: str) -> dict[str, Any]:
    """
    Recognise the objective family and its parameters.

    Raises:
        UnsupportedObjective: The text matches no known family.
    """
    match = _LATTICE_RE.search(objective)
    if match:
        return {
            "family": "lattice",
            "element": match["element"],
            "lattice": match["lattice"].lower(),
            "a": float(match["a"]),
            "xc": match["xc"] or "PBE",
        }
    for family, pattern in (("ensemble", _ENSEMBLE_RE), ("adsorption", _ADSORPTION_RE)):
        match = pattern.search(objective)
        if match:
            fields = match.groupdict()
            return {
                "family": family,
                "adsorbate": fields["adsorbate"],
                "metal": fields["metal"],
                "facet": fields["facet"],
                "supercell": [int(fields["p"]), int(fields["q"])],
                "xc": fields.get("xc") or "BEEF-vdW",
            }
    raise UnsupportedObjective(
        "objective is not a lattice-constant, adsorption or ensemble task: "
        f"{objective[:120]!r}"
    )


def _and_join(items: Sequence[str]) -> str:
    if len(items) <= 2:
        return " and ".join(items)
    return ", ".join(items[:-1]) + ", and " + items[-1]


def _unique_elements(metal: str, adsorbate: str) -> list[str]:
    return list(dict.fromkeys([metal, *string2symbols(adsorbate)]))


LATTICE_PLAN = (
    "Create initial structure of {LAT} {element} with experimental lattice constant of {a} Å",
    "Find appropriate pseudopotential for {element}",
    "Write initial DFT script for {LAT} {element}",
    "Generate convergence test input files for cutoff energy and k-points",
    "Add resource suggestions for convergence test jobs",
    "Submit convergence test jobs to HPC and monitor completion",
    "Determine optimal parameters from convergence test results",
    "Generate equation of state (EOS) calculation input files using optimal parameters",
    "Add resource suggestions for EOS calculation jobs",
    "Submit EOS calculation jobs to HPC and monitor completion",
    "Read output files to extract energy values",
    "Calculate equilibrium lattice constant from EOS data",
    "Compare calculated lattice constant with experimental value and report results",
)

ADSORPTION_PLAN = (
    "Create initial structure for {surface} surface with p({p}x{q}) cell",
    "Create {ads} molecule and place it at FCC site on {surface} surface "
    "with different orientations",
    "Create {ads} molecule and place it at ontop site on {surface} surface "
    "with different orientations",
    "Create clean {surface} surface with p({p}x{q}) cell for reference calculation",
    "Find appropriate pseudopotentials for {elements}",
    "Write initial DFT script with {xc} exchange-correlation functional",
    "Generate convergence test input files for bulk {metal} substrate",
    "Add resource suggestions for convergence test jobs",
    "Submit convergence test jobs to HPC and wait for completion",
    "Determine optimal parameters from convergence test results",
    "Generate input files for {ads} at FCC site with different orientations "
    "using optimal parameters",
    "Generate input files for {ads} at ontop site with different orientations "
    "using optimal parameters",
    "Generate input file for clean {surface} surface using optimal parameters",
    "Add resource suggestions for production calculations",
    "Submit production jobs to HPC and wait for completion",
    "Extract energies from output files for all configurations",
    "Calculate adsorption energies for all configurations",
    "Identify most favorable configuration at FCC site and most favorable "
    "configuration at ontop site",
    "Calculate adsorption energy difference between most favorable FCC and "
    "ontop configurations",
    "Compare results with literature value and assess accuracy",
)

ENSEMBLE_PLAN = (
    "Create initial structure for {surface} surface with p({p}x{q}) cell",
    "Create {ads} molecule and place it at FCC site on {surface} surface in upright orientation",
    "Create {ads} molecule and place it at ontop site on {surface} surface "
    "in upright orientation",
    "Create clean {surface} surface with p({p}x{q}) cell for reference calculation",
    "Find appropriate pseudopotentials for {elements}",
    "Write initial DFT script with BEEF-vdW exchange-correlation functional",
    "Generate convergence test input files for bulk {metal} substrate",
    "Add resource suggestions for convergence test jobs",
    "Submit convergence test jobs to HPC and wait for completion",
    "Determine optimal parameters from convergence test results",
    "Generate ensemble input files for {ads} at FCC and ontop sites using optimal parameters",
    "Generate ensemble input file for clean {surface} surface using optimal parameters",
    "Generate ensemble input file for isolated {ads} molecule using optimal parameters",
    "Add resource suggestions for production calculations",
    "Submit production jobs to HPC and wait for completion",
    "Extract ensemble energies from output files for all configurations",
    "Analyze BEEF ensemble to quantify uncertainty of the adsorption energy difference",
)

REPAIR_ROUNDS = (
    (
        "Modify DFT input files to increase convergence criteria",
        "Add resource suggestions for modified production calculations",
        "Submit modified production jobs to HPC and wait for completion",
    ),
    (
        "Modify DFT input files with more aggressive convergence settings",
        "Add resource suggestions for the newly modified calculations",
        "Submit modified jobs to HPC and wait for completion",
    ),
)
REPAIR_PREFIX = "Modify DFT input files"

PRODUCTION_RESOURCES = "Add resource suggestions for production"
# Tags worker reports carry when they write production inputs.
SYSTEM_TAGS = ("[slab]", "[molecule]", "[slab+adsorbate]")
MISSING_SYSTEM_STEPS = {
    "[slab]": "Generate input file for clean {surface} surface using optimal parameters",
    "[molecule]": "Generate input file for isolated {ads} molecule using optimal parameters",
    "[slab+adsorbate]": "Generate input files for {ads} at FCC and ontop sites "
    "using optimal parameters",
}


def repair_steps(round_number: int) -> tuple[str, str, str]:
    """Step wording for a repair round (1-based)."""
    if round_number <= len(REPAIR_ROUNDS):
        return REPAIR_ROUNDS[round_number - 1]
    return (
        f"{REPAIR_PREFIX} for convergence repair round {round_number}",
        f"Add resource suggestions for repair round {round_number} calculations",
        f"Submit repair round {round_number} jobs to HPC and wait for completion",
    )


def assign_worker(description: str) -> str:
    if description.startswith(("Add resource suggestions", "Submit")):
        return HPC_WORKER
    return DFT_WORKER


def _template_values(info: Mapping[str, Any]) -> dict[str, Any]:
    if info["family"] == "lattice":
        return {"LAT": info["lattice"].upper(), "element": info["element"], "a": info["a"]}
    p, q = info["supercell"]
    return {
        "surface": f"{info['metal']}({info['facet']})",
        "metal": info["metal"],
        "ads": info["adsorbate"],
        "p": p,
        "q": q,
        "xc": info["xc"],
        "elements": _and_join(_unique_elements(info["metal"], info["adsorbate"])),
    }


class TemplatePlannerPolicy:
    """
    Template plans plus status-keyed replanning rules.

    Args:
        repair_round_limit: Repair rounds allowed before LoopLimitExceeded.
        assign: Maps a step description to a worker name.
    """

    TEMPLATES = {"lattice": LATTICE_PLAN, "adsorption": ADSORPTION_PLAN, "ensemble": ENSEMBLE_PLAN}

    def __init__(
        self,
        repair_round_limit: int = DEFAULT_REPAIR_ROUNDS,
        assign: Callable[[str], str] = assign_worker,
    ) -> None:
        if repair_round_limit < 1:
            raise ValueError("repair_round_limit must be >= 1")
        self.repair_round_limit = repair_round_limit
        self.assign = assign

    def _step(self, description: str) -> PlanStep:
        return PlanStep(description, self.assign(description))

    def initial_plan(self, objective: str, capabilities: Mapping[str, str]) -> list[PlanStep]:
        info = parse_objective(objective)
        values = _template_values(info)
        return [self._step(t.format(**values)) for t in self.TEMPLATES[info["family"]]]

    def decide(
        self, objective: str, plan: Sequence[PlanStep], past_steps: Sequence[StepRecord]
    ) -> Replan:
        steps = list(plan)
        if past_steps and past_steps[-1].status == "failed":
            steps = self._handle_failure(steps, past_steps[-1])

        pending = next((i for i, s in enumerate(steps) if s.status == "pending"), None)
        if pending is None:
            last = next((r for r in reversed(past_steps) if r.status == "ok"), None)
            return Replan(steps, last.summary if last else "Workflow complete")

        if steps[pending].description.startswith(PRODUCTION_RESOURCES):
            values = _template_values(parse_objective(objective))
            written = " ".join(r.summary for r in past_steps if r.status == "ok")
            missing = [tag for tag in SYSTEM_TAGS if tag not in written]
            for offset, tag in enumerate(missing):
                description = MISSING_SYSTEM_STEPS[tag].format(**values)
                logger.info("production inputs lack %s; inserting '%s'", tag, description)
                steps.insert(pending + offset, self._step(description))
        return Replan(steps)

    def _handle_failure(self, steps: list[PlanStep], record: StepRecord) -> list[PlanStep]:
        if record.description.startswith("Submit") and record.summary.startswith(FAILED_PREFIX):
            round_number = sum(s.description.startswith(REPAIR_PREFIX) for s in steps) + 1
            if round_number > self.repair_round_limit:
                raise LoopLimitExceeded(
                    f"convergence repair would need round {round_number}; "
                    f"limit is {self.repair_round_limit}"
                )
            failed_at = max(i for i, s in enumerate(steps) if s.status == "dropped")
            for offset, description in enumerate(repair_steps(round_number), start=1):
                steps.insert(failed_at + offset, self._step(description))
            logger.info("inserted repair round %d", round_number)
            return steps
        if "NoConvergedValue" in record.summary:
            raise NoConvergedValue(record.summary)
        raise WorkflowFailed(f"step '{record.description}' failed: {record.summary}")


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------


def mirror(state: PlanState, canvas: Canvas) -> None:
    """Publish plan and past steps under the reserved canvas keys."""
    plan, past = state.to_canvas()
    canvas.write("plan", plan, overwrite=True, actor=PLANNER_ACTOR)
    canvas.write("past_steps", past, overwrite=True, actor=PLANNER_ACTOR)


def run_workflow(
    objective: str,
    capabilities: Mapping[str, str],
    policy: PlannerPolicy,
    dispatch: Callable[[PlanStep], AgentReport],
    canvas: Canvas,
) -> PlanState:
    """
    Plan, dispatch workers one step at a time and replan until FINISH.

    Raises:
        UnsupportedObjective, WorkflowFailed, LoopLimitExceeded, NoConvergedValue
    """
    state = make_plan(objective, capabilities, policy)
    mirror(state, canvas)
    for _ in range(MAX_DISPATCHES):
        if state.next == FINISH:
            return state
        step = state.active_step
        if step is None:
            raise NoActiveStep("planner produced no active step")
        logger.info("step %d: %s -> %s", len(state.past_steps) + 1, step.description, step.assignee)
        report = dispatch(step)
        state = record_step(state, report)
        mirror(state, canvas)
        state = replan(state, policy)
        mirror(state, canvas)
    raise WorkflowFailed(f"workflow did not finish within {MAX_DISPATCHES} steps")
