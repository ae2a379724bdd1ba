"""
Worker agents: configurations and the scripted procedures that drive them.

Two workers exist:

    dft_agent   structures, inputs, convergence repair and analysis
    hpc_agent   resource suggestions, submission and monitoring

Each procedure is a generator that yields tool calls and receives their
observations, so every action goes through the runtime's schema validation,
allowlist and transcript. Results are passed between steps on the canvas.

Example:
    ```python
    policy = build_policy("hpc_agent")
    report = run_agent(get_worker("hpc_agent"), "Submit EOS calculation jobs to HPC",
                       registry, ctx, policy)
    ```
"""

from __future__ import annotations

import functools
import logging
import re
from collections.abc import Callable, Generator
from pathlib import Path
from typing import Any

from ase.symbols import string2symbols

from .agentcore import (
    FAILED_PREFIX,
    AgentConfig,
    DecisionBackend,
    FinalAnswer,
    Observation,
    ScriptedPolicy,
    ScriptFactory,
    ToolCall,
)
from .errors import UnknownWorker
from .numerics import delta_be

logger = logging.getLogger(__name__)

CANVAS_TOOLS = ("inspect_my_canvas", "read_my_canvas", "write_my_canvas")
HPC_TOOLS = ("add_resource_suggestion", "submit_and_monitor_job")
DFT_TOOLS = (
    "init_structure_data",
    "generateSurface_and_getPossibleSite",
    "generate_myAdsorbate",
    "add_myAdsorbate",
    "find_pseudopotential",
    "write_QE_script_w_ASE",
    "generate_convergence_test",
    "generate_eos_test",
    "modify_QE_script",
    "get_convergence_suggestions",
    "get_kspacing_ecutwfc",
    "calculate_lc",
    "get_bulk_modulus",
    "calculate_formation_E",
    "analyze_BEEF_result",
    "read_energy_from_output",
)

CONVERGENCE_ECUTWFC = [30.0, 40.0, 50.0, 60.0, 70.0, 120.0]
CONVERGENCE_KSPACING = [0.25, 0.2, 0.15, 0.1]
SITES = ("fcc", "ontop")

WORKER_CATALOG: dict[str, AgentConfig] = {
    "dft_agent": AgentConfig(
        name="dft_agent",
        role="You are a DFT expert who prepares and analyses plane-wave calculations.",
        objective="Complete the assigned step and leave every result on the canvas.",
        instructions=(
            "Always inspect and read the canvas first. Use file names from the canvas; "
            "write structure paths, parameters and results back under descriptive keys."
        ),
        requirements="Do not submit jobs. Report 'Job failed' when a step cannot be completed.",
        tools=CANVAS_TOOLS + DFT_TOOLS,
    ),
    "hpc_agent": AgentConfig(
        name="hpc_agent",
        role="You are an HPC operator for a SLURM-style cluster.",
        objective="Choose resources for input files, submit them and wait for completion.",
        instructions=(
            "Read job_list from the canvas. Use as many tasks as the structure has atoms. "
            "Record failed inputs under failed_jobs."
        ),
        requirements="If any job fails, only respond with 'Job failed' and the failed files.",
        tools=CANVAS_TOOLS + HPC_TOOLS,
    ),
}


def get_worker(name: str) -> AgentConfig:
    if name not in WORKER_CATALOG:
        raise UnknownWorker(f"Unknown worker '{name}'. Available: {sorted(WORKER_CATALOG)}")
    return WORKER_CATALOG[name]


def capabilities() -> dict[str, str]:
    """Worker name -> role, as the planner sees it."""
    return {name: config.role for name, config in WORKER_CATALOG.items()}


# ---------------------------------------------------------------------------
# Script helpers
# ---------------------------------------------------------------------------

Steps = Generator[ToolCall, Observation, Any]


class _StepFailed(Exception):
    pass


def _call(thought: str, tool: str, **args: Any) -> Steps:
    observation = yield ToolCall(thought, tool, args)
    if not observation.ok:
        raise _StepFailed(observation.text)
    return observation.value


def _read(key: str) -> Steps:
    return (yield from _call(f"Read '{key}' from the canvas.", "read_my_canvas", key=key))


def _read_optional(key: str) -> Steps:
    observation = yield ToolCall(
        f"Check whether '{key}' is already on the canvas.", "read_my_canvas", {"key": key}
    )
    return observation.value if observation.ok else None


def _write(key: str, value: Any) -> Steps:
    return (
        yield from _call(
            f"Record '{key}' on the canvas.",
            "write_my_canvas",
            key=key,
            value=value,
            overwrite=True,
        )
    )


def _set_job_list(files: list[str]) -> Steps:
    return (yield from _write("job_list", list(files)))


def procedure(func: Callable[[str, re.Match[str]], Steps]) -> ScriptFactory:
    """Turn a step script into a factory whose tool errors end in a failed answer."""

    @functools.wraps(func)
    def factory(task: str, match: re.Match[str]) -> Generator[ToolCall, Observation, FinalAnswer]:
        try:
            return (yield from func(task, match))
        except _StepFailed as e:
            return FinalAnswer("failed", f"{FAILED_PREFIX}: {e}")

    return factory


def _ok(summary: str, *artifacts: str) -> FinalAnswer:
    return FinalAnswer("ok", summary, tuple(artifacts))


def _elements(objective: dict[str, Any]) -> list[str]:
    if objective["family"] == "lattice":
        return list(dict.fromkeys(string2symbols(objective["element"])))
    return list(dict.fromkeys([objective["metal"], *string2symbols(objective["adsorbate"])]))


def _indices(files: list[str]) -> dict[str, int]:
    return {name: i for i, name in enumerate(files)}


# ---------------------------------------------------------------------------
# DFT procedures
# ---------------------------------------------------------------------------


@procedure
def build_bulk_structure(task: str, match: re.Match[str]) -> Steps:
    objective = yield from _read("objective")
    name = yield from _call(
        "Build the bulk cell at the experimental lattice constant.",
        "init_structure_data",
        element=objective["element"],
        lattice=objective["lattice"],
        a=objective["a"],
    )
    yield from _write("bulk_structure_path", name)
    built = f"{objective['lattice']} {objective['element']} (a = {objective['a']} Å)"
    return _ok(f"Built {built}: {name}", name)


@procedure
def build_slab(task: str, match: re.Match[str]) -> Steps:
    objective = yield from _read("objective")
    result = yield from _call(
        "Build the slab and list its adsorption sites.",
        "generateSurface_and_getPossibleSite",
        element=objective["metal"],
        crystal=objective["crystal"],
        a=objective["a"],
        facet=objective["facet"],
        supercell=objective["supercell"],
    )
    yield from _write("slab_path", result["file"])
    yield from _write("adsorption_sites", result["sites"])
    return _ok(
        f"Slab {result['file']} with {result['natoms']} atoms; sites {sorted(result['sites'])}",
        result["file"],
    )


@procedure
def place_molecule(task: str, match: re.Match[str]) -> Steps:
    adsorbate, site = match[1], match[2].lower()
    objective = yield from _read("objective")
    molecule = yield from _read_optional("molecule_path")
    if molecule is None:
        result = yield from _call(
            f"Build an isolated {adsorbate} molecule.",
            "generate_myAdsorbate",
            symbols=adsorbate,
            positions=objective["adsorbate_positions"],
        )
        molecule = result["file"]
        yield from _write("molecule_path", molecule)
    slab = yield from _read("slab_path")
    sites = yield from _read("adsorption_sites")

    orientations = objective["orientations"]
    if "different orientations" not in task.lower():
        orientations = {"upright": orientations.get("upright", [])}
    configurations = (yield from _read_optional("configuration_structures")) or {}
    written = []
    for orientation, rotations in orientations.items():
        name = f"{Path(slab).stem}_{adsorbate}_{site}_{orientation}.traj"
        yield from _call(
            f"Place {adsorbate} {orientation} on the {site} site.",
            "add_myAdsorbate",
            slabFile=slab,
            moleculeFile=molecule,
            site=site,
            sites=sites,
            rotations=rotations,
            filename=name,
        )
        yield from _write(f"{Path(name).stem}_path", name)
        configurations[f"{site}/{orientation}"] = name
        written.append(name)
    yield from _write("configuration_structures", configurations)
    return _ok(f"Placed {adsorbate} at {site}: {', '.join(written)}", *written)


@procedure
def clean_slab(task: str, match: re.Match[str]) -> Steps:
    slab = yield from _read("slab_path")
    yield from _write("clean_slab_path", slab)
    return _ok(f"Clean slab {slab} kept as the reference system", slab)


@procedure
def pseudopotentials(task: str, match: re.Match[str]) -> Steps:
    objective = yield from _read("objective")
    found = yield from _call(
        "Look up pseudopotentials for every element.",
        "find_pseudopotential",
        elements=_elements(objective),
    )
    yield from _write("pseudopotentials", found)
    return _ok(f"Pseudopotentials: {found}")


def _write_script(
    structure: str, objective: dict[str, Any], potentials: dict[str, str], **params: Any
) -> Steps:
    name = f"{Path(structure).stem}.pwi"
    return (
        yield from _call(
            f"Write a pw.x input for {structure}.",
            "write_QE_script_w_ASE",
            structureFile=structure,
            outputFile=name,
            pseudopotentials=potentials,
            input_dft=objective["xc"],
            **params,
        )
    )


@procedure
def initial_script(task: str, match: re.Match[str]) -> Steps:
    objective = yield from _read("objective")
    potentials = yield from _read("pseudopotentials")
    key = "bulk_structure_path" if objective["family"] == "lattice" else "slab_path"
    structure = yield from _read(key)
    name = yield from _write_script(structure, objective, potentials)
    yield from _write("template_input", name)
    return _ok(f"Template input {name} ({objective['xc']})", name)


@procedure
def convergence_inputs(task: str, match: re.Match[str]) -> Steps:
    objective = yield from _read("objective")
    if objective["family"] == "lattice":
        template = yield from _read("template_input")
    else:
        # Cutoff and k-spacing are converged on the substrate bulk cell.
        bulk = yield from _read_optional("bulk_structure_path")
        if bulk is None:
            bulk = yield from _call(
                "Build the bulk substrate for the convergence tests.",
                "init_structure_data",
                element=objective["metal"],
                lattice=objective["crystal"],
                a=objective["a"],
            )
            yield from _write("bulk_structure_path", bulk)
        potentials = yield from _read("pseudopotentials")
        template = yield from _write_script(bulk, objective, potentials)
        yield from _write("bulk_template_input", template)
    files = yield from _call(
        "Write the cutoff x k-spacing grid.",
        "generate_convergence_test",
        templateFile=template,
        ecutwfc=CONVERGENCE_ECUTWFC,
        kspacing=CONVERGENCE_KSPACING,
    )
    yield from _write("convergence_jobs", files)
    yield from _set_job_list(files)
    return _ok(f"Wrote {len(files)} convergence test inputs from {template}", *files)


@procedure
def optimal_parameters(task: str, match: re.Match[str]) -> Steps:
    objective = yield from _read("objective")
    files = yield from _read("convergence_jobs")
    yield from _set_job_list(files)
    result = yield from _call(
        "Pick the converged cutoff and k-spacing.",
        "get_kspacing_ecutwfc",
        jobFileIdx=list(range(len(files))),
        threshold=objective["threshold"],
    )
    yield from _write("optimal_ecutwfc", result["ecutwfc"])
    yield from _write("optimal_kspacing", result["kspacing"])
    yield from _write("optimal_kgrid", list(result["kgrid"]))
    return _ok(
        f"ecutwfc = {result['ecutwfc']:g} Ry, kspacing = {result['kspacing']:g} 1/Å "
        f"(k-grid {list(result['kgrid'])})"
    )


@procedure
def eos_inputs(task: str, match: re.Match[str]) -> Steps:
    objective = yield from _read("objective")
    template = yield from _read("template_input")
    ecutwfc = yield from _read("optimal_ecutwfc")
    kspacing = yield from _read("optimal_kspacing")
    files = yield from _call(
        "Scale the cell around the experimental volume.",
        "generate_eos_test",
        templateFile=template,
        ecutwfc=ecutwfc,
        kspacing=kspacing,
        step=objective["eos_step"],
    )
    yield from _write("eos_jobs", files)
    yield from _set_job_list(files)
    return _ok(f"Wrote {len(files)} EOS inputs", *files)


def _production_targets(text: str, configurations: dict[str, str]) -> list[tuple[str, str]]:
    wanted = [s for s in SITES if s in text]
    return [
        (config, name)
        for config, name in configurations.items()
        if not wanted or config.split("/", 1)[0] in wanted
    ]


@procedure
def production_inputs(task: str, match: re.Match[str]) -> Steps:
    target = match[1].lower()
    objective = yield from _read("objective")
    potentials = yield from _read("pseudopotentials")
    ecutwfc = yield from _read("optimal_ecutwfc")
    kspacing = yield from _read("optimal_kspacing")

    if "clean" in target:
        slab = yield from _read("clean_slab_path")
        tag, targets = "[slab]", [("clean", slab)]
    elif "isolated" in target or "molecule" in target:
        molecule = yield from _read("molecule_path")
        tag, targets = "[molecule]", [("gas", molecule)]
    else:
        configurations = yield from _read("configuration_structures")
        tag, targets = "[slab+adsorbate]", _production_targets(target, configurations)
        if not targets:
            raise _StepFailed(f"no adsorbate configurations match '{match[1]}'")

    calculation = "ensemble" if objective["family"] == "ensemble" else "scf"
    jobs = (yield from _read_optional("production_jobs")) or []
    configs = (yield from _read_optional("production_configs")) or {}
    written = []
    for config, structure in targets:
        name = yield from _write_script(
            structure,
            objective,
            potentials,
            calculation=calculation,
            ecutwfc=ecutwfc,
            kspacing=kspacing,
        )
        if name not in jobs:
            jobs.append(name)
        configs[config] = name
        written.append(name)
    yield from _write("production_jobs", jobs)
    yield from _write("production_configs", configs)
    yield from _set_job_list(jobs)
    return _ok(f"{tag} wrote {', '.join(written)}", *written)


@procedure
def repair_inputs(task: str, match: re.Match[str]) -> Steps:
    failed = yield from _read("failed_jobs")
    if not failed:
        return _ok("No failed jobs to modify")
    history = (yield from _read_optional("convergence_modifications")) or []
    changed = []
    for name in failed:
        fixes = yield from _call(
            f"Ask the convergence doctor about {name}.",
            "get_convergence_suggestions",
            inputFile=name,
            question=task,
        )
        if not fixes:
            raise _StepFailed(f"no convergence suggestions for {name}")
        result = yield from _call(
            f"Apply the suggestions to {name}.",
            "modify_QE_script",
            inputFile=name,
            suggestions=fixes,
        )
        history.append(result)
        changed.append(result)
    yield from _write("convergence_modifications", history)
    yield from _set_job_list(failed)
    first = changed[0]
    return _ok(
        f"Modified {len(changed)} input(s), attempt {first['attempt']}: "
        f"{'; '.join(first['changes'])}",
        *failed,
    )


@procedure
def eos_energies(task: str, match: re.Match[str]) -> Steps:
    files = yield from _read("eos_jobs")
    yield from _set_job_list(files)
    rows = yield from _call(
        "Read the total energies of the EOS runs.",
        "read_energy_from_output",
        jobFileIdx=list(range(len(files))),
    )
    yield from _write("eos_energies", rows)
    return _ok(f"Read {len(rows)} EOS energies")


@procedure
def lattice_constant(task: str, match: re.Match[str]) -> Steps:
    files = yield from _read("eos_jobs")
    yield from _set_job_list(files)
    indices = list(range(len(files)))
    fit = yield from _call(
        "Fit the Birch-Murnaghan equation of state.", "calculate_lc", jobFileIdx=indices
    )
    modulus = yield from _call(
        "Convert the fitted bulk modulus to GPa.", "get_bulk_modulus", jobFileIdx=indices
    )
    yield from _write("eos_fit", fit)
    yield from _write("lattice_constant", fit["lattice_constant"])
    yield from _write("bulk_modulus_gpa", modulus)
    return _ok(f"a = {fit['lattice_constant']:.4f} Å, B0 = {modulus:.1f} GPa")


@procedure
def compare_lattice(task: str, match: re.Match[str]) -> Steps:
    objective = yield from _read("objective")
    computed = yield from _read("lattice_constant")
    kgrid = yield from _read("optimal_kgrid")
    ecutwfc = yield from _read("optimal_ecutwfc")
    error = (computed - objective["a"]) / objective["a"] * 100.0
    yield from _write(
        "comparison",
        {"computed_a": computed, "experimental_a": objective["a"], "error_pct": error},
    )
    return _ok(
        f"{objective['lattice']} {objective['element']}: a = {computed:.4f} Å vs experimental "
        f"{objective['a']} Å ({error:+.2f}%), ecutwfc {ecutwfc:g} Ry, k-grid {kgrid}"
    )


@procedure
def production_energies(task: str, match: re.Match[str]) -> Steps:
    files = yield from _read("production_jobs")
    yield from _set_job_list(files)
    rows = yield from _call(
        "Read the total energies of every production run.",
        "read_energy_from_output",
        jobFileIdx=list(range(len(files))),
    )
    energies = {files[i]: energy for i, energy in rows}
    yield from _write("production_energies", energies)
    return _ok(f"Read {len(energies)} production energies")


@procedure
def adsorption_energies(task: str, match: re.Match[str]) -> Steps:
    files = yield from _read("production_jobs")
    configs = yield from _read("production_configs")
    for required in ("clean", "gas"):
        if required not in configs:
            raise _StepFailed(f"no '{required}' reference among the production inputs")
    yield from _set_job_list(files)
    index = _indices(files)
    systems = [c for c in configs if "/" in c]
    per_file = yield from _call(
        "Compute E_ads = E(system) - E(slab) - E(molecule) for every configuration.",
        "calculate_formation_E",
        systemIdx=[index[configs[c]] for c in systems],
        slabIdx=index[configs["clean"]],
        moleculeIdx=index[configs["gas"]],
    )
    energies = {c: per_file[configs[c]] for c in systems}
    yield from _write("adsorption_energies", energies)
    listing = ", ".join(f"{c} {e:.3f}" for c, e in sorted(energies.items()))
    return _ok(f"Adsorption energies (eV): {listing}")


@procedure
def most_favorable(task: str, match: re.Match[str]) -> Steps:
    energies = yield from _read("adsorption_energies")
    picks = []
    for site in SITES:
        candidates = {c: e for c, e in energies.items() if c.startswith(f"{site}/")}
        if not candidates:
            raise _StepFailed(f"no {site} configurations among {sorted(energies)}")
        best = min(candidates, key=lambda c: (candidates[c], c))
        yield from _write(f"best_{site}", {"configuration": best, "E_ads": candidates[best]})
        picks.append(f"{best} ({candidates[best]:.3f} eV)")
    return _ok("Most favorable: " + ", ".join(picks))


@procedure
def energy_difference(task: str, match: re.Match[str]) -> Steps:
    fcc = yield from _read("best_fcc")
    ontop = yield from _read("best_ontop")
    value = delta_be(ontop["E_ads"], fcc["E_ads"])
    yield from _write("delta_BE", value)
    favored = "fcc" if value > 0 else "ontop"
    return _ok(f"dBE = E_ads(ontop) - E_ads(fcc) = {value:.3f} eV; {favored} favored")


@procedure
def compare_literature(task: str, match: re.Match[str]) -> Steps:
    objective = yield from _read("objective")
    value = yield from _read("delta_BE")
    reference = objective.get("literature_delta_be")
    comparison: dict[str, Any] = {"delta_BE": value, "functional": objective["xc"]}
    if reference is None:
        yield from _write("comparison", comparison)
        return _ok(f"dBE = {value:.3f} eV ({objective['xc']}); no literature value available")
    comparison.update(literature=reference, difference=value - reference)
    yield from _write("comparison", comparison)
    return _ok(
        f"dBE = {value:.3f} eV ({objective['xc']}) vs literature {reference:.3f} eV "
        f"(difference {value - reference:+.3f} eV)"
    )


@procedure
def beef_analysis(task: str, match: re.Match[str]) -> Steps:
    files = yield from _read("production_jobs")
    configs = yield from _read("production_configs")
    yield from _set_job_list(files)
    index = _indices(files)

    def first(site: str) -> int:
        for config in sorted(configs):
            if config.startswith(f"{site}/"):
                return index[configs[config]]
        raise _StepFailed(f"no {site} configuration among {sorted(configs)}")

    stats = yield from _call(
        "Compute member-wise ontop - fcc differences over the ensemble.",
        "analyze_BEEF_result",
        slabIdx=index[configs["clean"]],
        moleculeIdx=index[configs["gas"]],
        ontopIdx=first("ontop"),
        fccIdx=first("fcc"),
    )
    yield from _write("beef_statistics", stats)
    return _ok(
        f"Ensemble dBE mean {stats['mean']:.3f} eV, std {stats['std']:.4f} eV over "
        f"{stats['n']} members ({stats['sigma_distance']:.1f} std from zero); "
        f"{stats['favored_site']} favored"
    )


DFT_SCRIPTS: tuple[tuple[str, ScriptFactory], ...] = (
    (r"^Create initial structure of", build_bulk_structure),
    (r"^Create initial structure for (\S+) surface", build_slab),
    (r"^Create (\w+) molecule and place it at (\w+) site", place_molecule),
    (r"^Create clean", clean_slab),
    (r"^Find appropriate pseudopotential", pseudopotentials),
    (r"^Write initial DFT script", initial_script),
    (r"^Generate convergence test input files", convergence_inputs),
    (r"^Determine optimal parameters", optimal_parameters),
    (r"^Generate equation of state", eos_inputs),
    (r"^Generate (?:ensemble )?input files? for (.+?) using optimal parameters", production_inputs),
    (r"^Modify DFT input files", repair_inputs),
    (r"^Read output files to extract energy", eos_energies),
    (r"^Calculate equilibrium lattice constant", lattice_constant),
    (r"^Compare calculated lattice constant", compare_lattice),
    (r"^Extract (?:ensemble )?energies", production_energies),
    (r"^Calculate adsorption energies", adsorption_energies),
    (r"^Identify most favorable", most_favorable),
    (r"^Calculate adsorption energy difference", energy_difference),
    (r"^Compare results with literature", compare_literature),
    (r"^Analyze BEEF ensemble", beef_analysis),
)


# ---------------------------------------------------------------------------
# HPC procedures
# ---------------------------------------------------------------------------


@procedure
def add_resources(task: str, match: re.Match[str]) -> Steps:
    files = yield from _read("job_list")
    rows = yield from _call(
        "Suggest a partition and task count for each input.",
        "add_resource_suggestion",
        jobList=files,
    )
    partitions = sorted({row["partition"] for row in rows})
    return _ok(f"Resource suggestions for {len(rows)} jobs on {partitions}")


def _job_type(task: str) -> str:
    lowered = task.lower()
    if "convergence" in lowered:
        return "convergence"
    if "eos" in lowered:
        return "eos"
    return "production"


@procedure
def submit_jobs(task: str, match: re.Match[str]) -> Steps:
    files = yield from _read("job_list")
    job_type = _job_type(task)
    result = yield from _call(
        "Submit with the saved suggestions and wait for every job.",
        "submit_and_monitor_job",
        jobList=files,
        jobType=job_type,
    )
    failed = result["failed"]
    yield from _write("failed_jobs", failed)
    if failed:
        return FinalAnswer(
            "failed",
            f"{FAILED_PREFIX}: {len(failed)} of {len(files)} jobs failed: {', '.join(failed)}",
        )
    return _ok(f"All {len(files)} {job_type} jobs finished")


HPC_SCRIPTS: tuple[tuple[str, ScriptFactory], ...] = (
    (r"^Add resource suggestions", add_resources),
    (r"^Submit .*HPC", submit_jobs),
)

WORKER_SCRIPTS: dict[str, tuple[tuple[str, ScriptFactory], ...]] = {
    "dft_agent": DFT_SCRIPTS,
    "hpc_agent": HPC_SCRIPTS,
}


def build_policy(name: str, backend: DecisionBackend | None = None) -> ScriptedPolicy:
    """Scripted policy for a catalog worker."""
    get_worker(name)
    return ScriptedPolicy(WORKER_SCRIPTS[name], backend=backend)
