"""
End-to-end pipelines: objective builders and the three scripted workflows.

This module provides:
- `Workflow`: one run directory with its canvas, simulated cluster, tools and workers
- `run_lattice` / `run_sol27`: lattice constants of bulk solids
- `run_adsorption`: adsorption-site search with convergence repair
- `run_beef`: ensemble uncertainty of the ontop/fcc binding-energy difference

Inputs are validated before a run directory is created, so usage errors
(unknown lattice, element or system) never leave half-finished runs behind.

Example usage:
    ```python
    from matscreen.config import RunConfig
    from matscreen.pipelines import run_adsorption

    result = run_adsorption(RunConfig(workdir=tmp), "Pt", "111", "CO", "PBE")
    result.delta_be       # ~0.104 eV
    result.favored_site   # "fcc"
    ```
"""

from __future__ import annotations

import logging
import re
from collections.abc import Sequence
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from ase.symbols import string2symbols

from .agentcore import AgentReport, DecisionBackend, ToolContext, run_agent
from .canvas import Canvas
from .config import RunConfig, load_pseudopotential_catalog
from .errors import FixtureNotFound, UnsupportedObjective
from .hpcsim import ClusterSimulator, ClusterSpec, load_cluster_spec
from .planner import (
    REPAIR_PREFIX,
    PlanState,
    PlanStep,
    TemplatePlannerPolicy,
    run_workflow,
)
from .qeio import find_pseudopotential
from .structlab import KIND_BULK, KIND_MOLECULE, KIND_SLAB, KIND_SLAB_ADSORBATE, get_lattice_info
from .surrogate import FixtureLibrary, MaterialFixture, SurrogateBackend, load_fixture_library
from .tools import build_registry
from .workers import WORKER_CATALOG, build_policy, capabilities

logger = logging.getLogger(__name__)

FUNCTIONALS = ("LDA", "PBE", "BEEF-vdW")
LATTICE_XC = "PBE"
SLAB_LAYERS = 4
ORIENTATIONS: dict[str, list[list[Any]]] = {
    "upright": [],
    "tilted": [[45.0, "x"]],
    "flipped": [[180.0, "x"]],
}
# Reference ontop - fcc differences (eV) used in the literature comparison step.
LITERATURE_DELTA_BE = {"PBE": 0.108, "LDA": 0.32}

LATTICE_OBJECTIVE = (
    "Calculate the lattice constant for {LATTICE} {element} using DFT with {xc}. "
    "The experimental value is {a} Angstrom."
)
ADSORPTION_OBJECTIVE = (
    "Calculate the adsorption energy difference between the most favorable FCC and ontop "
    "configurations of {adsorbate} on {metal}({facet}) with a p({p}x{q}) cell using {xc}."
)
ENSEMBLE_OBJECTIVE = (
    "Perform BEEF-vdW ensemble analysis of {adsorbate} adsorption at fcc and ontop sites "
    "on {metal}({facet}) with a p({p}x{q}) cell."
)

SNAPSHOT_NAME = "canvas.snapshot"
TRACE_NAME = "cluster.trace"
_FAILED_COUNT_RE = re.compile(r"(\d+) of (\d+) jobs failed")


class Workflow:
    """
    One run: directory, canvas, simulated cluster, tools and worker policies.

    Args:
        config: Run settings.
        name: Subdirectory of ``config.workdir`` for this run.
        library: Fixture library; loaded from ``config.fixture_library`` when omitted.
        cluster: Cluster description; loaded from ``config.cluster_config`` when omitted.
        backend: Optional external decision backend consulted by every worker.
    """

    def __init__(
        self,
        config: RunConfig,
        name: str,
        library: FixtureLibrary | None = None,
        cluster: ClusterSpec | None = None,
        backend: DecisionBackend | None = None,
    ) -> None:
        self.config = config
        self.run_dir = config.run_dir(name)
        self.calc_dir = self.run_dir / "calc"
        self.calc_dir.mkdir(exist_ok=True)
        self.transcript_dir = self.run_dir / "transcripts"
        for old in self.transcript_dir.glob("*.jsonl"):
            old.unlink()

        self.library = library or load_fixture_library(config.fixture_library)
        backend_sim = SurrogateBackend(self.library, config.seed, config.ensemble_members)
        self.simulator = ClusterSimulator(
            cluster or load_cluster_spec(config.cluster_config), backend_sim
        )
        self.canvas = Canvas()
        self.registry = build_registry()
        self.ctx = ToolContext(
            canvas=self.canvas,
            calc_dir=self.calc_dir,
            config=config,
            cluster=self.simulator,
            library=self.library,
            catalog=load_pseudopotential_catalog(config.pseudopotential_catalog),
        )
        self.workers = {
            worker: replace(agent, max_steps=config.max_agent_steps)
            for worker, agent in WORKER_CATALOG.items()
        }
        self.policies = {worker: build_policy(worker, backend) for worker in self.workers}
        self.planner = TemplatePlannerPolicy(config.repair_round_limit)

    @property
    def snapshot_path(self) -> Path:
        return self.run_dir / SNAPSHOT_NAME

    def dispatch(self, step: PlanStep) -> AgentReport:
        return run_agent(
            self.workers[step.assignee],
            step.description,
            self.registry,
            self.ctx,
            self.policies[step.assignee],
            transcript=self.transcript_dir / f"{step.assignee}.jsonl",
        )

    def run(self, objective: str, record: dict[str, Any]) -> PlanState:
        """
        Publish the objective and drive the planner to FINISH.

        The canvas snapshot and the scheduler trace are written even when the
        workflow fails.
        """
        self.canvas.write("objective", record, actor="user")
        try:
            state = run_workflow(
                objective, capabilities(), self.planner, self.dispatch, self.canvas
            )
        finally:
            self.canvas.snapshot(self.snapshot_path)
            trace = "\n".join(self.simulator.trace)
            (self.run_dir / TRACE_NAME).write_text(trace + "\n", encoding="utf-8")
        logger.info("workflow finished after %d steps", len(state.past_steps))
        return state


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LatticeResult:
    system: str
    lattice: str
    experimental_a: float
    expert_a: float | None
    computed_a: float
    ecutwfc: float
    kspacing: float
    kgrid: list[int]
    bulk_modulus_gpa: float
    run_dir: Path | None = None

    @property
    def error_vs_expert_pct(self) -> float | None:
        if self.expert_a is None:
            return None
        return abs(self.computed_a - self.expert_a) / self.expert_a * 100.0

    @property
    def error_vs_experiment_pct(self) -> float:
        return abs(self.computed_a - self.experimental_a) / self.experimental_a * 100.0


@dataclass(frozen=True)
class AdsorptionResult:
    """Outcome of the adsorption-site search. Energies in eV."""

    metal: str
    facet: str
    adsorbate: str
    xc: str
    energies: dict[str, float]
    best_fcc: dict[str, Any]
    best_ontop: dict[str, Any]
    delta_be: float
    literature: float | None
    repair_rounds: int
    initial_failed: int | None = None
    initial_jobs: int | None = None
    run_dir: Path | None = None

    @property
    def favored_site(self) -> str:
        return "fcc" if self.delta_be > 0 else "ontop"


@dataclass(frozen=True)
class EnsembleResult:
    """Ensemble statistics of ontop - fcc, in eV."""

    metal: str
    facet: str
    adsorbate: str
    mean: float
    std: float
    n: int
    sigma_distance: float
    route_difference: float
    favored_site: str
    repair_rounds: int
    run_dir: Path | None = None

    @property
    def verdict(self) -> str:
        if self.sigma_distance > 10:
            return f"{self.favored_site} favored"
        return "inconclusive"


def _repair_rounds(state: PlanState) -> int:
    return sum(r.description.startswith(REPAIR_PREFIX) for r in state.past_steps)


def _initial_failures(state: PlanState) -> tuple[int | None, int | None]:
    for record in state.past_steps:
        if record.status == "failed" and record.description.startswith("Submit"):
            match = _FAILED_COUNT_RE.search(record.summary)
            if match:
                return int(match[1]), int(match[2])
    return None, None


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------


def _library(config: RunConfig, library: FixtureLibrary | None) -> FixtureLibrary:
    return library or load_fixture_library(config.fixture_library)


def _check_elements(config: RunConfig, elements: Sequence[str]) -> None:
    catalog = load_pseudopotential_catalog(config.pseudopotential_catalog)
    for element in elements:
        find_pseudopotential(element, catalog)


def _common_settings(config: RunConfig) -> dict[str, Any]:
    return {"threshold": config.convergence_threshold, "eos_step": config.eos_step}


def run_lattice(
    config: RunConfig,
    element: str,
    lattice: str,
    a: float,
    library: FixtureLibrary | None = None,
) -> LatticeResult:
    """
    Compute the equilibrium lattice constant of one bulk solid.

    Raises:
        UnknownLattice: The lattice is not supported.
        ElementNotInCatalog: No pseudopotential for the element.
        FixtureNotFound: No surrogate fixture for the solid.
        WorkflowFailed, LoopLimitExceeded, NoConvergedValue: The workflow did not finish.
    """
    lattice = lattice.lower()
    get_lattice_info(lattice)
    lib = _library(config, library)
    _check_elements(config, list(dict.fromkeys(string2symbols(element))))
    fixture = lib.lookup(KIND_BULK, set(string2symbols(element)))
    if fixture.lattice is not None and fixture.lattice != lattice:
        raise FixtureNotFound(
            f"No {lattice} fixture for {element}; the library has {fixture.lattice}"
        )

    text = LATTICE_OBJECTIVE.format(LATTICE=lattice.upper(), element=element, xc=LATTICE_XC, a=a)
    record = {
        "family": "lattice",
        "element": element,
        "lattice": lattice,
        "a": float(a),
        "xc": LATTICE_XC,
        **_common_settings(config),
    }
    workflow = Workflow(config, f"lattice-{element}-{lattice}", library=lib)
    workflow.run(text, record)

    canvas = workflow.canvas
    reference = fixture.reference
    return LatticeResult(
        system=element,
        lattice=lattice,
        experimental_a=float(a),
        expert_a=reference.expert_a if reference else None,
        computed_a=canvas.read("lattice_constant"),
        ecutwfc=canvas.read("optimal_ecutwfc"),
        kspacing=canvas.read("optimal_kspacing"),
        kgrid=canvas.read("optimal_kgrid"),
        bulk_modulus_gpa=canvas.read("bulk_modulus_gpa"),
        run_dir=workflow.run_dir,
    )


def run_sol27(
    config: RunConfig,
    systems: Sequence[str] | None = None,
    library: FixtureLibrary | None = None,
) -> list[LatticeResult]:
    """Run `run_lattice` over the benchmark solids of the fixture library, in file order."""
    lib = _library(config, library)
    benchmark = lib.benchmark_systems()
    if systems is not None:
        wanted = set(systems)
        benchmark = [f for f in benchmark if f.system in wanted]
    results = []
    for fixture in benchmark:
        assert fixture.reference is not None and fixture.lattice is not None
        logger.info("benchmark system %s (%s)", fixture.system, fixture.lattice)
        results.append(
            run_lattice(
                config, fixture.system, fixture.lattice, fixture.reference.experimental_a, lib
            )
        )
    return results


@dataclass(frozen=True)
class _SurfaceSystem:
    bulk: MaterialFixture
    slab: MaterialFixture
    combined: MaterialFixture
    molecule: MaterialFixture


def _surface_system(
    config: RunConfig, lib: FixtureLibrary, metal: str, adsorbate: str
) -> _SurfaceSystem:
    species = string2symbols(adsorbate)
    _check_elements(config, list(dict.fromkeys([metal, *species])))
    return _SurfaceSystem(
        bulk=lib.lookup(KIND_BULK, {metal}),
        slab=lib.lookup(KIND_SLAB, {metal}),
        combined=lib.lookup(KIND_SLAB_ADSORBATE, {metal, *species}),
        molecule=lib.lookup(KIND_MOLECULE, set(species)),
    )


def _surface_record(
    config: RunConfig,
    system: _SurfaceSystem,
    family: str,
    metal: str,
    facet: str,
    adsorbate: str,
    xc: str,
    supercell: Sequence[int],
) -> dict[str, Any]:
    a = system.combined.lattice_a
    if a is None:
        assert system.bulk.bm is not None
        a = system.bulk.bm.V0 ** (1.0 / 3.0)
    bond = system.molecule.bond_length or 1.14
    record: dict[str, Any] = {
        "family": family,
        "metal": metal,
        "facet": facet,
        "crystal": system.bulk.lattice or "fcc",
        "a": float(a),
        "supercell": [int(supercell[0]), int(supercell[1]), SLAB_LAYERS],
        "adsorbate": adsorbate,
        "adsorbate_positions": [[0.0, 0.0, 0.0], [0.0, 0.0, float(bond)]],
        "orientations": ORIENTATIONS,
        "xc": xc,
        **_common_settings(config),
    }
    if xc in LITERATURE_DELTA_BE:
        record["literature_delta_be"] = LITERATURE_DELTA_BE[xc]
    return record


def run_adsorption(
    config: RunConfig,
    metal: str = "Pt",
    facet: str = "111",
    adsorbate: str = "CO",
    xc: str = "PBE",
    supercell: Sequence[int] = (2, 2),
    library: FixtureLibrary | None = None,
) -> AdsorptionResult:
    """
    Find the most favorable fcc and ontop configurations and their energy difference.

    Raises:
        UnsupportedObjective: Unknown functional.
        ElementNotInCatalog / FixtureNotFound: No data for the requested system.
        LoopLimitExceeded: Convergence repair needed more rounds than allowed.
    """
    if xc not in FUNCTIONALS:
        raise UnsupportedObjective(f"Unknown functional '{xc}'. Available: {list(FUNCTIONALS)}")
    lib = _library(config, library)
    system = _surface_system(config, lib, metal, adsorbate)
    p, q = int(supercell[0]), int(supercell[1])
    text = ADSORPTION_OBJECTIVE.format(
        adsorbate=adsorbate, metal=metal, facet=facet, p=p, q=q, xc=xc
    )
    record = _surface_record(config, system, "adsorption", metal, facet, adsorbate, xc, (p, q))
    workflow = Workflow(config, f"adsorption-{adsorbate}-{metal}{facet}-{xc}", library=lib)
    state = workflow.run(text, record)

    canvas = workflow.canvas
    failed, total = _initial_failures(state)
    return AdsorptionResult(
        metal=metal,
        facet=facet,
        adsorbate=adsorbate,
        xc=xc,
        energies=canvas.read("adsorption_energies"),
        best_fcc=canvas.read("best_fcc"),
        best_ontop=canvas.read("best_ontop"),
        delta_be=canvas.read("delta_BE"),
        literature=record.get("literature_delta_be"),
        repair_rounds=_repair_rounds(state),
        initial_failed=failed,
        initial_jobs=total,
        run_dir=workflow.run_dir,
    )


def run_beef(
    config: RunConfig,
    metal: str = "Pt",
    facet: str = "111",
    adsorbate: str = "CO",
    supercell: Sequence[int] = (2, 2),
    library: FixtureLibrary | None = None,
) -> EnsembleResult:
    """
    Ensemble analysis of the ontop - fcc binding-energy difference.

    Four ensemble calculations are run: fcc and ontop upright, the clean slab
    and the isolated molecule.
    """
    lib = _library(config, library)
    system = _surface_system(config, lib, metal, adsorbate)
    p, q = int(supercell[0]), int(supercell[1])
    text = ENSEMBLE_OBJECTIVE.format(adsorbate=adsorbate, metal=metal, facet=facet, p=p, q=q)
    record = _surface_record(
        config, system, "ensemble", metal, facet, adsorbate, "BEEF-vdW", (p, q)
    )
    workflow = Workflow(config, f"beef-{adsorbate}-{metal}{facet}", library=lib)
    state = workflow.run(text, record)

    stats = workflow.canvas.read("beef_statistics")
    return EnsembleResult(
        metal=metal,
        facet=facet,
        adsorbate=adsorbate,
        mean=stats["mean"],
        std=stats["std"],
        n=stats["n"],
        sigma_distance=stats["sigma_distance"],
        route_difference=stats["route_difference"],
        favored_site=stats["favored_site"],
        repair_rounds=_repair_rounds(state),
        run_dir=workflow.run_dir,
    )
