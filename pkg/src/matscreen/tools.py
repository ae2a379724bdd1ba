"""
Tool catalog available to worker agents.

Every tool is a plain function ``impl(ctx, **kwargs)`` paired with a
`ToolSpec`. File arguments are bare file names resolved inside the run
directory; job indices refer to positions in the canvas ``job_list``.

    canvas      inspect_my_canvas, read_my_canvas, write_my_canvas
    structures  init_structure_data, generateSurface_and_getPossibleSite,
                generate_myAdsorbate, add_myAdsorbate
    inputs      find_pseudopotential, write_QE_script_w_ASE,
                generate_convergence_test, generate_eos_test, modify_QE_script
    analysis    get_convergence_suggestions, get_kspacing_ecutwfc, calculate_lc,
                get_bulk_modulus, calculate_formation_E, analyze_BEEF_result,
                read_energy_from_output
    hpc         add_resource_suggestion, submit_and_monitor_job
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from .agentcore import ParamSpec, ToolContext, ToolImpl, ToolRegistry, ToolSpec
from .doctor import Suggestion, apply_suggestions, doctor_suggest
from .errors import ToolArgumentError, ToolFailure
from .hpcsim import JobState, output_path, suggest_resources, write_suggestion
from .numerics import (
    RY_TO_EV,
    ConvergenceSeries,
    adsorption_energy,
    analyze_beef,
    bulk_modulus,
    fit_eos,
    lattice_from_fit,
    select_converged,
)
from .qeio import CalcSpec, find_pseudopotential, kgrid, parse_input, parse_output, write_input
from .structlab import (
    SiteMap,
    build_bulk,
    build_molecule,
    build_surface,
    place_adsorbate,
    read_structure,
    scale,
    write_structure,
)

logger = logging.getLogger(__name__)

STRUCTURE_SUFFIX = ".traj"


def _number_tag(value: float) -> str:
    return f"{value:g}"


# ---------------------------------------------------------------------------
# Canvas
# ---------------------------------------------------------------------------


def inspect_my_canvas(ctx: ToolContext) -> list[str]:
    return ctx.canvas.inspect()


def read_my_canvas(ctx: ToolContext, key: str) -> Any:
    return ctx.canvas.read(key)


def write_my_canvas(ctx: ToolContext, key: str, value: Any, overwrite: bool) -> str:
    record = ctx.canvas.write(key, value, overwrite=overwrite, actor=ctx.actor)
    return f"{record.op} {key}"


# ---------------------------------------------------------------------------
# Structures
# ---------------------------------------------------------------------------


def init_structure_data(
    ctx: ToolContext,
    element: str,
    lattice: str,
    a: float,
    b: float | None,
    c: float | None,
    alpha: float | None,
    filename: str | None,
) -> str:
    structure = build_bulk(element, lattice, a, b=b, c=c, alpha=alpha)
    name = filename or f"{element}_{lattice}{STRUCTURE_SUFFIX}"
    write_structure(structure, ctx.path(name))
    return name


def generate_surface(
    ctx: ToolContext,
    element: str,
    crystal: str,
    a: float,
    facet: str,
    supercell: list[int],
    nFixed: int,
    vacuum: float,
    filename: str | None,
) -> dict[str, Any]:
    slab, sites = build_surface(
        element, crystal, a, facet, supercell, n_fixed=nFixed, vacuum=vacuum
    )
    p, q = supercell[0], supercell[1]
    name = filename or f"{element}{facet}_p{p}x{q}{STRUCTURE_SUFFIX}"
    write_structure(slab, ctx.path(name))
    return {
        "file": name,
        "natoms": slab.natoms,
        "sites": {k: [round(v[0], 10), round(v[1], 10)] for k, v in sites.sites.items()},
    }


def generate_my_adsorbate(
    ctx: ToolContext, symbols: str, positions: list[list[float]], filename: str | None
) -> dict[str, Any]:
    molecule = build_molecule(symbols, positions)
    name = filename or f"{molecule.name}{STRUCTURE_SUFFIX}"
    write_structure(molecule, ctx.path(name))
    return {"file": name, "natoms": molecule.natoms}


def add_my_adsorbate(
    ctx: ToolContext,
    slabFile: str,
    moleculeFile: str,
    site: str,
    sites: dict[str, list[float]],
    rotations: list[list[Any]],
    height: float,
    filename: str,
) -> str:
    slab = read_structure(ctx.path(slabFile))
    molecule = read_structure(ctx.path(moleculeFile))
    top_z = float(slab.positions[:, 2].max())
    try:
        site_map = SiteMap({k: (float(v[0]), float(v[1])) for k, v in sites.items()}, top_z)
        turns = [(float(angle), str(axis)) for angle, axis in rotations]
    except (TypeError, ValueError, IndexError) as e:
        raise ToolArgumentError(f"malformed sites or rotations: {e}") from e
    combined = place_adsorbate(
        slab, site_map, molecule, site, rotations=turns, height=height, name=Path(filename).stem
    )
    write_structure(combined, ctx.path(filename))
    return filename


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------


def find_pseudopotentials(ctx: ToolContext, elements: list[str]) -> dict[str, str]:
    return {el: find_pseudopotential(el, ctx.catalog) for el in elements}


def write_qe_script(
    ctx: ToolContext,
    structureFile: str,
    outputFile: str,
    pseudopotentials: dict[str, str],
    input_dft: str,
    calculation: str,
    ecutwfc: float,
    kspacing: float,
    extras: dict[str, Any],
) -> str:
    structure = read_structure(ctx.path(structureFile))
    spec = CalcSpec.for_structure(
        structure,
        pseudopotentials,
        input_dft=input_dft,
        calculation=calculation,
        ecutwfc=ecutwfc,
        kspacing=kspacing,
        extras=extras,
        prefix=Path(outputFile).stem,
    )
    write_input(spec, structure, ctx.path(outputFile))
    return outputFile


def _variant(ctx: ToolContext, template: str, name: str, **params: Any) -> str:
    spec, structure = parse_input(ctx.path(template))
    updated = spec.model_copy(update={**params, "prefix": Path(name).stem})
    write_input(CalcSpec.model_validate(updated.model_dump()), structure, ctx.path(name))
    return name


def generate_convergence_test(
    ctx: ToolContext, templateFile: str, ecutwfc: list[float], kspacing: list[float]
) -> list[str]:
    """One input per (ecutwfc, kspacing) pair, cutoff-major."""
    stem = Path(templateFile).stem
    files = []
    for ecut in ecutwfc:
        for k in kspacing:
            name = f"{stem}_ecut{_number_tag(ecut)}_k{_number_tag(k)}.pwi"
            files.append(_variant(ctx, templateFile, name, ecutwfc=float(ecut), kspacing=float(k)))
    return files


def generate_eos_test(
    ctx: ToolContext,
    templateFile: str,
    ecutwfc: float,
    kspacing: float,
    points: int,
    step: float,
) -> list[str]:
    """Inputs on cells scaled by 1 + (i - (points-1)/2) * step."""
    if points < 5:
        raise ToolFailure("an EOS needs at least 5 points")
    spec, structure = parse_input(ctx.path(templateFile))
    stem = Path(templateFile).stem
    files = []
    for i in range(points):
        alpha = 1.0 + (i - (points - 1) / 2.0) * step
        name = f"{stem}_eos{i:02d}.pwi"
        values = spec.model_dump()
        values.update(ecutwfc=ecutwfc, kspacing=kspacing, prefix=Path(name).stem)
        values["extras"] = {**spec.extras, "scale": round(alpha, 10)}
        write_input(CalcSpec.model_validate(values), scale(structure, alpha), ctx.path(name))
        files.append(name)
    return files


def modify_qe_script(
    ctx: ToolContext, inputFile: str, suggestions: list[dict[str, Any]]
) -> dict[str, Any]:
    """Apply doctor suggestions to an input file in place and bump its attempt marker."""
    path = ctx.path(inputFile)
    spec, structure = parse_input(path)
    fixes = [
        Suggestion(s["parameter"], s["action"], s["value"], s.get("reason", ""))
        for s in suggestions
    ]
    repaired = apply_suggestions(spec, fixes)
    attempt = spec.attempt + 1
    repaired = CalcSpec.model_validate(
        {**repaired.model_dump(), "extras": {**repaired.extras, "attempt": attempt}}
    )
    write_input(repaired, structure, path)
    return {"file": inputFile, "attempt": attempt, "changes": [str(f) for f in fixes]}


# ---------------------------------------------------------------------------
# Analysis
# ---------------------------------------------------------------------------


def get_convergence_suggestions(
    ctx: ToolContext, inputFile: str, outputFile: str | None, question: str
) -> list[dict[str, Any]]:
    path = ctx.path(inputFile)
    out = ctx.path(outputFile) if outputFile else output_path(path)
    suggestions = doctor_suggest(
        path.read_text(encoding="utf-8"), out.read_text(encoding="utf-8"), question
    )
    return [
        {"parameter": s.parameter, "action": s.action, "value": s.value, "reason": s.reason}
        for s in suggestions
    ]


def _job_files(ctx: ToolContext, indices: Sequence[int]) -> list[str]:
    job_list = ctx.canvas.read("job_list")
    bad = [i for i in indices if not 0 <= i < len(job_list)]
    if bad:
        raise ToolFailure(f"job indices {bad} are outside job_list (length {len(job_list)})")
    return [job_list[i] for i in indices]


def _job_ids(ctx: ToolContext, files: Sequence[str]) -> list[str]:
    missing = [f for f in files if f not in ctx.jobs]
    if missing:
        raise ToolFailure(f"no submitted job for {missing}")
    return [ctx.jobs[f] for f in files]


def _energies(ctx: ToolContext, indices: Sequence[int]) -> list[tuple[str, float]]:
    files = _job_files(ctx, indices)
    ids = _job_ids(ctx, files)
    pairs = ctx.cluster.collect_energies(ids, list(range(len(ids))))
    return [(files[i], energy) for i, energy in pairs]


def read_energy_from_output(ctx: ToolContext, jobFileIdx: list[int]) -> list[list[Any]]:
    files = _job_files(ctx, jobFileIdx)
    ids = _job_ids(ctx, files)
    order = sorted(range(len(files)), key=lambda n: jobFileIdx[n])
    energies = dict(ctx.cluster.collect_energies(ids, order))
    return [[jobFileIdx[n], energies[n]] for n in order]


def get_kspacing_ecutwfc(
    ctx: ToolContext, jobFileIdx: list[int], threshold: float
) -> dict[str, Any]:
    """
    Converged cutoff and k-spacing from a cutoff x k-spacing grid of runs.

    The cutoff is read along the densest k-spacing against the highest
    cutoff; the k-spacing is then read along the chosen cutoff against the
    densest k-spacing. Energies are compared per atom.
    """
    rows = []
    for name, energy in _energies(ctx, jobFileIdx):
        spec, structure = parse_input(ctx.path(name))
        rows.append((spec.ecutwfc, spec.kspacing, energy / structure.natoms, structure))
    if len(rows) < 4:
        raise ToolFailure("need a grid of at least 2 cutoffs x 2 k-spacings")
    k_dense = min(r[1] for r in rows)
    e_ref = max(r[0] for r in rows)

    def pick(predicate: Any) -> list[tuple[float, float, float, Any]]:
        return [r for r in rows if predicate(r)]

    column = sorted(pick(lambda r: math.isclose(r[1], k_dense)), key=lambda r: r[0])
    reference = next(r[2] for r in column if math.isclose(r[0], e_ref))
    ecut = select_converged(
        ConvergenceSeries("ecutwfc", [r[0] for r in column], [r[2] for r in column], reference),
        threshold,
    )
    row = sorted(pick(lambda r: math.isclose(r[0], ecut)), key=lambda r: r[1])
    reference = next(r[2] for r in row if math.isclose(r[1], k_dense))
    kspacing = select_converged(
        ConvergenceSeries("kspacing", [r[1] for r in row], [r[2] for r in row], reference),
        threshold,
    )
    structure = row[0][3]
    return {
        "ecutwfc": ecut,
        "kspacing": kspacing,
        "kgrid": kgrid(structure.cell, kspacing, structure.pbc),
    }


def _eos(ctx: ToolContext, jobFileIdx: Sequence[int]) -> tuple[Any, Any]:
    volumes, energies, reference = [], [], None
    for name, energy in _energies(ctx, jobFileIdx):
        _, structure = parse_input(ctx.path(name))
        volumes.append(structure.volume)
        energies.append(energy)
        if reference is None:
            reference = structure
    return fit_eos(volumes, energies), reference


def calculate_lc(ctx: ToolContext, jobFileIdx: list[int]) -> dict[str, float]:
    fit, reference = _eos(ctx, jobFileIdx)
    return {
        "lattice_constant": lattice_from_fit(fit, reference),
        "e0": fit.e0,
        "v0": fit.v0,
        "b0": fit.b0,
        "b0_prime": fit.b0_prime,
        "bulk_modulus_gpa": fit.b0_gpa,
    }


def get_bulk_modulus(ctx: ToolContext, jobFileIdx: list[int]) -> float:
    fit, _ = _eos(ctx, jobFileIdx)
    return bulk_modulus(fit)


def calculate_formation_e(
    ctx: ToolContext, systemIdx: list[int], slabIdx: int, moleculeIdx: int
) -> dict[str, float]:
    """Adsorption energy (eV) of each system relative to the clean slab and the molecule."""
    energies = dict(_energies(ctx, [*systemIdx, slabIdx, moleculeIdx]))
    slab_file, molecule_file = _job_files(ctx, [slabIdx, moleculeIdx])
    return {
        name: adsorption_energy(energies[name], energies[slab_file], energies[molecule_file])
        * RY_TO_EV
        for name in _job_files(ctx, systemIdx)
    }


def analyze_beef_result(
    ctx: ToolContext, slabIdx: int, moleculeIdx: int, ontopIdx: int, fccIdx: int
) -> dict[str, Any]:
    files = _job_files(ctx, [slabIdx, moleculeIdx, ontopIdx, fccIdx])
    members = []
    for name, job_id in zip(files, _job_ids(ctx, files)):
        job = ctx.cluster.job(job_id)
        if job.state is not JobState.DONE:
            raise ToolFailure(f"{name} did not finish ({job.state.value})")
        ensemble = parse_output(job.output_path).ensemble_energies
        if ensemble is None:
            raise ToolFailure(f"{name} has no ensemble energies")
        members.append(ensemble)
    stats = analyze_beef(*members)
    return {
        "mean": stats.mean,
        "std": stats.std,
        "n": stats.n,
        "sigma_distance": stats.sigma_distance,
        "favored_site": stats.favored_site,
        "route_difference": stats.route_difference,
    }


# ---------------------------------------------------------------------------
# HPC
# ---------------------------------------------------------------------------


def add_resource_suggestion(ctx: ToolContext, jobList: list[str]) -> list[dict[str, Any]]:
    duration = ctx.library.duration
    rows = []
    for name in jobList:
        path = ctx.path(name)
        suggestion = suggest_resources(
            path, ctx.cluster.cluster, duration.c0_seconds, duration.c1_seconds
        )
        write_suggestion(suggestion, path)
        rows.append(
            {
                "file": name,
                "partition": suggestion.partition,
                "nnodes": suggestion.nnodes,
                "ntasks": suggestion.ntasks,
                "runtime_minutes": suggestion.runtime_minutes,
            }
        )
    return rows


def submit_and_monitor_job(ctx: ToolContext, jobList: list[str], jobType: str) -> dict[str, Any]:
    paths = [ctx.path(name) for name in jobList]
    ids = ctx.cluster.submit(paths)
    states = ctx.cluster.wait_all(ids)
    for name, job_id in zip(jobList, ids):
        ctx.jobs[name] = job_id
    done = [n for n, i in zip(jobList, ids) if states[i] is JobState.DONE]
    failed = [n for n, i in zip(jobList, ids) if states[i] is JobState.FAILED]
    logger.info("%s batch: %d done, %d failed", jobType, len(done), len(failed))
    return {"job_type": jobType, "job_ids": ids, "done": done, "failed": failed}


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------


def _p(type_: Any, doc: str = "") -> ParamSpec:
    return ParamSpec(type_, doc=doc)


def _opt(type_: Any, default: Any, doc: str = "") -> ParamSpec:
    return ParamSpec(type_, required=False, default=default, doc=doc)


TOOL_CATALOG: tuple[tuple[ToolSpec, ToolImpl], ...] = (
    (ToolSpec("inspect_my_canvas", {}, "list[str]", "List all canvas keys."), inspect_my_canvas),
    (
        ToolSpec("read_my_canvas", {"key": _p("str")}, "any", "Read one canvas value."),
        read_my_canvas,
    ),
    (
        ToolSpec(
            "write_my_canvas",
            {"key": _p("str"), "value": _p("any"), "overwrite": _opt("bool", False)},
            "str",
            "Write a value to the canvas.",
        ),
        write_my_canvas,
    ),
    (
        ToolSpec(
            "init_structure_data",
            {
                "element": _p("str", "element or formula"),
                "lattice": _p("str"),
                "a": _p("float", "lattice constant, Å"),
                "b": _opt("float", None),
                "c": _opt("float", None),
                "alpha": _opt("float", None),
                "filename": _opt("str", None),
            },
            "str",
            "Build a bulk crystal and save it; returns the structure file name.",
        ),
        init_structure_data,
    ),
    (
        ToolSpec(
            "generateSurface_and_getPossibleSite",
            {
                "element": _p("str"),
                "crystal": _p("str"),
                "a": _p("float"),
                "facet": _p("str"),
                "supercell": _p("list", "[p, q, layers]"),
                "nFixed": _opt("int", 3),
                "vacuum": _opt("float", 10.0),
                "filename": _opt("str", None),
            },
            "dict",
            "Build a slab, save it and list its adsorption sites.",
        ),
        generate_surface,
    ),
    (
        ToolSpec(
            "generate_myAdsorbate",
            {"symbols": _p("str"), "positions": _p("list"), "filename": _opt("str", None)},
            "dict",
            "Build an isolated molecule in a box and save it.",
        ),
        generate_my_adsorbate,
    ),
    (
        ToolSpec(
            "add_myAdsorbate",
            {
                "slabFile": _p("str"),
                "moleculeFile": _p("str"),
                "site": _p("str"),
                "sites": _p("dict", "site name -> [x, y]"),
                "rotations": _opt("list", [], "[[angle, axis], ...]"),
                "height": _opt("float", 2.0),
                "filename": _p("str"),
            },
            "str",
            "Place a molecule on a slab site and save the combined structure.",
        ),
        add_my_adsorbate,
    ),
    (
        ToolSpec(
            "find_pseudopotential",
            {"elements": _p("list")},
            "dict",
            "Look up pseudopotential files for elements.",
        ),
        find_pseudopotentials,
    ),
    (
        ToolSpec(
            "write_QE_script_w_ASE",
            {
                "structureFile": _p("str"),
                "outputFile": _p("str", "name ending in .pwi"),
                "pseudopotentials": _p("dict"),
                "input_dft": _opt("str", "PBE"),
                "calculation": _opt("str", "scf"),
                "ecutwfc": _opt("float", 40.0),
                "kspacing": _opt("float", 0.15),
                "extras": _opt("dict", {}),
            },
            "str",
            "Write a pw.x input for a structure file.",
        ),
        write_qe_script,
    ),
    (
        ToolSpec(
            "generate_convergence_test",
            {"templateFile": _p("str"), "ecutwfc": _p("list"), "kspacing": _p("list")},
            "list[str]",
            "Write one input per cutoff/k-spacing pair from a template.",
        ),
        generate_convergence_test,
    ),
    (
        ToolSpec(
            "generate_eos_test",
            {
                "templateFile": _p("str"),
                "ecutwfc": _p("float"),
                "kspacing": _p("float"),
                "points": _opt("int", 7),
                "step": _opt("float", 0.025),
            },
            "list[str]",
            "Write inputs on uniformly scaled cells for an equation of state.",
        ),
        generate_eos_test,
    ),
    (
        ToolSpec(
            "modify_QE_script",
            {"inputFile": _p("str"), "suggestions": _p("list")},
            "dict",
            "Apply convergence suggestions to an input file.",
        ),
        modify_qe_script,
    ),
    (
        ToolSpec(
            "get_convergence_suggestions",
            {
                "inputFile": _p("str"),
                "outputFile": _opt("str", None),
                "question": _opt("str", ""),
            },
            "list[dict]",
            "Ask the convergence doctor how to fix an unconverged run.",
        ),
        get_convergence_suggestions,
    ),
    (
        ToolSpec(
            "get_kspacing_ecutwfc",
            {"jobFileIdx": _p("list"), "threshold": _opt("float", 1.0, "meV/atom")},
            "dict",
            "Pick converged ecutwfc and kspacing from finished convergence jobs.",
        ),
        get_kspacing_ecutwfc,
    ),
    (
        ToolSpec(
            "calculate_lc",
            {"jobFileIdx": _p("list")},
            "dict",
            "Fit an equation of state to finished EOS jobs.",
        ),
        calculate_lc,
    ),
    (
        ToolSpec(
            "get_bulk_modulus",
            {"jobFileIdx": _p("list")},
            "float",
            "Bulk modulus (GPa) from finished EOS jobs.",
        ),
        get_bulk_modulus,
    ),
    (
        ToolSpec(
            "calculate_formation_E",
            {"systemIdx": _p("list"), "slabIdx": _p("int"), "moleculeIdx": _p("int")},
            "dict",
            "Adsorption energies in eV.",
        ),
        calculate_formation_e,
    ),
    (
        ToolSpec(
            "analyze_BEEF_result",
            {
                "slabIdx": _p("int"),
                "moleculeIdx": _p("int"),
                "ontopIdx": _p("int"),
                "fccIdx": _p("int"),
            },
            "dict",
            "Ensemble statistics of the ontop/fcc binding-energy difference.",
        ),
        analyze_beef_result,
    ),
    (
        ToolSpec(
            "read_energy_from_output",
            {"jobFileIdx": _p("list")},
            "list",
            "Total energies (Ry) of finished jobs.",
        ),
        read_energy_from_output,
    ),
    (
        ToolSpec(
            "add_resource_suggestion",
            {"jobList": _p("list")},
            "list[dict]",
            "Write resource suggestions next to input files.",
        ),
        add_resource_suggestion,
    ),
    (
        ToolSpec(
            "submit_and_monitor_job",
            {"jobList": _p("list"), "jobType": _opt("str", "production")},
            "dict",
            "Submit jobs with their saved resource suggestions and wait for them.",
        ),
        submit_and_monitor_job,
    ),
)


def build_registry() -> ToolRegistry:
    """Registry holding the whole catalog."""
    registry = ToolRegistry()
    for spec, impl in TOOL_CATALOG:
        registry.register(spec, impl)
    return registry


def get_tool_spec(name: str) -> ToolSpec:
    return build_registry().get(name)[0]
