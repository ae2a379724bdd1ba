"""Tests for objective parsing, plan templates and replanning."""

from __future__ import annotations

import pytest

from matscreen.agentcore import AgentReport
from matscreen.canvas import Canvas
from matscreen.errors import (
    LoopLimitExceeded,
    NoActiveStep,
    NoConvergedValue,
    UnsupportedObjective,
    WorkflowFailed,
)
from matscreen.pipelines import ADSORPTION_OBJECTIVE, ENSEMBLE_OBJECTIVE, LATTICE_OBJECTIVE
from matscreen.planner import (
    FINISH,
    PlanState,
    PlanStep,
    StepRecord,
    TemplatePlannerPolicy,
    make_plan,
    parse_objective,
    record_step,
    replan,
    repair_steps,
    run_workflow,
)
from matscreen.workers import capabilities

LATTICE = LATTICE_OBJECTIVE.format(LATTICE="BCC", element="Li", xc="PBE", a=3.451)
ADSORPTION = ADSORPTION_OBJECTIVE.format(
    adsorbate="CO", metal="Pt", facet="111", p=2, q=2, xc="LDA"
)
ENSEMBLE = ENSEMBLE_OBJECTIVE.format(adsorbate="CO", metal="Pt", facet="111", p=2, q=2)


def ok(summary: str = "done") -> AgentReport:
    return AgentReport("ok", summary)


def advance_to(
    state: PlanState, prefix: str, policy: TemplatePlannerPolicy, summary: str = "done"
) -> PlanState:
    """Complete steps until the active one starts with ``prefix``."""
    while (step := state.active_step) is not None and not step.description.startswith(prefix):
        state = replan(record_step(state, ok(summary)), policy)
    return state


class TestParseObjective:
    """Tests for recognising objective families."""

    def test_lattice(self) -> None:
        """Test the lattice-constant family."""
        assert parse_objective(LATTICE) == {
            "family": "lattice",
            "element": "Li",
            "lattice": "bcc",
            "a": 3.451,
            "xc": "PBE",
        }

    def test_adsorption(self) -> None:
        """Test the adsorption family with its functional."""
        info = parse_objective(ADSORPTION)
        assert info["family"] == "adsorption"
        assert info["supercell"] == [2, 2]
        assert info["xc"] == "LDA"

    def test_ensemble(self) -> None:
        """Test that the ensemble family defaults to BEEF-vdW."""
        info = parse_objective(ENSEMBLE)
        assert (info["family"], info["xc"], info["metal"]) == ("ensemble", "BEEF-vdW", "Pt")

    def test_unsupported(self) -> None:
        """Test that unrelated text is refused."""
        with pytest.raises(UnsupportedObjective):
            parse_objective("Compute the band gap of silicon.")


class TestMakePlan:
    """Tests for the initial plan."""

    def test_lattice_plan(self) -> None:
        """Test the lattice template and its worker assignment."""
        state = make_plan(LATTICE, capabilities(), TemplatePlannerPolicy())
        assert len(state.plan) == 13
        assert state.plan[0].status == "active"
        assert state.next == "dft_agent"
        assert state.plan[0].description.startswith("Create initial structure of BCC Li")
        assert [s.assignee for s in state.plan[4:6]] == ["hpc_agent", "hpc_agent"]

    def test_adsorption_plan_names_elements(self) -> None:
        """Test that the pseudopotential step lists every element once."""
        state = make_plan(ADSORPTION, capabilities(), TemplatePlannerPolicy())
        assert len(state.plan) == 20
        assert "Pt, C, and O" in state.plan[4].description

    def test_empty_objective(self) -> None:
        """Test that an empty objective is unsupported."""
        with pytest.raises(UnsupportedObjective):
            make_plan("  ", capabilities(), TemplatePlannerPolicy())

    def test_unknown_worker(self) -> None:
        """Test that steps must go to known workers."""
        policy = TemplatePlannerPolicy(assign=lambda description: "nobody")
        with pytest.raises(WorkflowFailed, match="unknown workers"):
            make_plan(LATTICE, capabilities(), policy)


class TestTransitions:
    """Tests for record_step and replan."""

    def test_record_step(self) -> None:
        """Test that recording closes the active step without mutating the input."""
        state = make_plan(LATTICE, capabilities(), TemplatePlannerPolicy())
        recorded = record_step(state, ok("built"))
        assert recorded.plan[0].status == "done"
        assert recorded.past_steps == [
            StepRecord(state.plan[0].description, "dft_agent", "built", "ok")
        ]
        assert state.plan[0].status == "active"

    def test_summary_is_bounded(self) -> None:
        """Test that long summaries are cut to 500 characters."""
        state = make_plan(LATTICE, capabilities(), TemplatePlannerPolicy())
        recorded = record_step(state, ok("x" * 1000))
        assert len(recorded.past_steps[0].summary) == 500

    def test_record_without_active_step(self) -> None:
        """Test that recording twice without a replan raises NoActiveStep."""
        state = make_plan(LATTICE, capabilities(), TemplatePlannerPolicy())
        with pytest.raises(NoActiveStep):
            record_step(record_step(state, ok()), ok())

    def test_finish_with_last_summary(self) -> None:
        """Test that the response is the last successful summary."""
        policy = TemplatePlannerPolicy()
        state = make_plan(LATTICE, capabilities(), policy)
        state = advance_to(state, "Compare calculated", policy)
        state = replan(record_step(state, ok("a = 3.44")), policy)
        assert state.next == FINISH
        assert state.response == "a = 3.44"


class TestRepairRounds:
    """Tests for the convergence repair rule."""

    def test_repair_round_inserted(self) -> None:
        """Test that a failed submission gets a modify/resources/submit round after it."""
        policy = TemplatePlannerPolicy()
        state = make_plan(ADSORPTION, capabilities(), policy)
        state = advance_to(state, "Submit production", policy, "[slab] [molecule] [slab+adsorbate]")
        state = replan(record_step(state, AgentReport("failed", "7 of 8 jobs failed")), policy)
        descriptions = [s.description for s in state.plan]
        failed_at = descriptions.index("Submit production jobs to HPC and wait for completion")
        assert descriptions[failed_at + 1 : failed_at + 4] == list(repair_steps(1))
        assert state.active_step is not None
        assert state.active_step.description == repair_steps(1)[0]

    def test_failed_submission_is_dropped(self) -> None:
        """Test that a failed step is dropped and every step keeps one of the four states."""
        policy = TemplatePlannerPolicy()
        state = make_plan(ADSORPTION, capabilities(), policy)
        state = advance_to(state, "Submit production", policy, "[slab] [molecule] [slab+adsorbate]")
        state = replan(record_step(state, AgentReport("failed", "7 of 8 jobs failed")), policy)
        state = advance_to(state, "Submit modified", policy)
        state = replan(record_step(state, AgentReport("failed", "2 of 8 jobs failed")), policy)
        dropped = [s.description for s in state.plan if s.status == "dropped"]
        assert dropped == [
            "Submit production jobs to HPC and wait for completion",
            repair_steps(1)[2],
        ]
        assert {s.status for s in state.plan} <= {"pending", "active", "done", "dropped"}
        assert state.past_steps[-1].status == "failed"
        assert state.active_step is not None
        assert state.active_step.description == repair_steps(2)[0]

    def test_loop_limit(self) -> None:
        """Test that a second failure with a limit of one round raises."""
        policy = TemplatePlannerPolicy(repair_round_limit=1)
        state = make_plan(ADSORPTION, capabilities(), policy)
        state = advance_to(state, "Submit production", policy, "[slab] [molecule] [slab+adsorbate]")
        state = replan(record_step(state, AgentReport("failed", "7 of 8 jobs failed")), policy)
        state = advance_to(state, "Submit modified", policy)
        with pytest.raises(LoopLimitExceeded):
            replan(record_step(state, AgentReport("failed", "6 of 6 jobs failed")), policy)

    def test_generic_wording_after_two_rounds(self) -> None:
        """Test that later rounds use numbered wording."""
        assert repair_steps(3)[0] == "Modify DFT input files for convergence repair round 3"

    def test_other_failure_ends_workflow(self) -> None:
        """Test that a failed non-submission step raises WorkflowFailed."""
        policy = TemplatePlannerPolicy()
        state = make_plan(LATTICE, capabilities(), policy)
        with pytest.raises(WorkflowFailed):
            replan(record_step(state, AgentReport("failed", "Error: no such file")), policy)

    def test_unconverged_grid(self) -> None:
        """Test that a NoConvergedValue failure is re-raised as such."""
        policy = TemplatePlannerPolicy()
        state = make_plan(LATTICE, capabilities(), policy)
        state = advance_to(state, "Determine optimal", policy)
        failure = AgentReport("failed", "Error: NoConvergedValue: no ecutwfc value within 1.0")
        with pytest.raises(NoConvergedValue):
            replan(record_step(state, failure), policy)

    def test_invalid_limit(self) -> None:
        """Test that at least one repair round must be allowed."""
        with pytest.raises(ValueError):
            TemplatePlannerPolicy(repair_round_limit=0)


class TestProductionCoverage:
    """Tests for the missing-system rule."""

    def test_missing_molecule_inserted(self) -> None:
        """Test that a missing isolated-molecule input gets its own step."""
        policy = TemplatePlannerPolicy()
        state = make_plan(ADSORPTION, capabilities(), policy)
        state = advance_to(state, "Generate input file for clean", policy, "[slab+adsorbate]")
        state = replan(record_step(state, ok("[slab] wrote Pt111.pwi")), policy)
        assert state.active_step is not None
        assert state.active_step.description == (
            "Generate input file for isolated CO molecule using optimal parameters"
        )

    def test_complete_inputs_untouched(self) -> None:
        """Test that no step is inserted when every system is covered."""
        policy = TemplatePlannerPolicy()
        state = make_plan(ENSEMBLE, capabilities(), policy)
        before = len(state.plan)
        state = advance_to(state, "Add resource suggestions for production", policy,
                           "[slab] [molecule] [slab+adsorbate]")
        assert len(state.plan) == before


class TestRunWorkflow:
    """Tests for the dispatch loop."""

    def test_mirrors_to_canvas(self) -> None:
        """Test that a fully successful run ends with the plan and history on the canvas."""
        canvas = Canvas()
        dispatched: list[PlanStep] = []

        def dispatch(step: PlanStep) -> AgentReport:
            dispatched.append(step)
            return ok(f"finished {len(dispatched)}")

        state = run_workflow(
            LATTICE, capabilities(), TemplatePlannerPolicy(), dispatch, canvas
        )
        assert len(dispatched) == 13
        assert state.response == "finished 13"
        assert all(step["status"] == "done" for step in canvas.read("plan"))
        assert len(canvas.read("past_steps")) == 13
        assert canvas.entry("plan").creator == "planner"
