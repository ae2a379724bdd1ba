"""
Calibrated offline stand-in for the DFT code.

A calculation is answered from a `MaterialFixture`:

    E = E_phys + N_atoms * (A_c * exp(-ecutwfc / lambda_c) + A_k * kspacing**2) + eta

``E_phys`` is the Birch-Murnaghan energy of the cell volume for bulk systems
and a table entry for slabs, molecules and adsorbate configurations (keyed by
functional and by "site/orientation", both recovered from the geometry).
``eta`` is a jitter below 1e-7 Ry drawn from a Philox generator keyed by the
run seed, with a counter derived from a SHA-256 of the calculation.

The SCF model needs

    R = ceil(scf_base * (0.02 / degauss) * (mixing_beta / 0.3) * m)

iterations (m = 1.3 for plain mixing, 1.0 otherwise) and converges when
R <= electron_maxstep. Ensemble runs add ``mean_offset + w * z_m`` per member,
with one standardised normal vector ``z`` per seed shared by every system so
members line up across calculations.

All constants live in ``data/fixtures.json``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import data_path
from .errors import ClassMismatch, EnsembleTooSmall, FixtureNotFound, UnknownConfiguration
from .numerics import birch_murnaghan
from .qeio import CalcSpec, OutputSummary, parse_input, write_output
from .structlab import (
    KIND_BULK,
    KIND_MOLECULE,
    KIND_SLAB,
    KIND_SLAB_ADSORBATE,
    StructureModel,
    classify_orientation,
    classify_site,
)

logger = logging.getLogger(__name__)

FIXTURE_FORMAT = "matscreen-fixtures"
JITTER_AMPLITUDE = 1e-7
MIXING_FACTORS = {"plain": 1.3, "local-TF": 1.0, "TF": 1.0}
FIRST_ACCURACY = 0.1

SimOutput = OutputSummary


class BirchMurnaghanTruth(BaseModel):
    E0: float
    V0: float = Field(gt=0)
    B0: float = Field(gt=0)
    B0_prime: float


class Discretization(BaseModel):
    A_c: float = Field(ge=0)
    lambda_c: float = Field(gt=0)
    A_k: float = Field(ge=0)


class BenchmarkReference(BaseModel):
    """Published lattice constants for one benchmark solid (A)."""

    experimental_a: float
    expert_a: float
    agent_a: float
    kpoints: int
    ecutwfc: float


class BeefParameters(BaseModel):
    mean_offset: dict[str, float] = Field(default_factory=dict)
    spread: dict[str, float] = Field(default_factory=dict)


class Duration(BaseModel):
    c0_seconds: float = Field(ge=0)
    c1_seconds: float = Field(ge=0)


class MaterialFixture(BaseModel):
    """Surrogate truth for one system."""

    model_config = ConfigDict(populate_by_name=True)

    system: str
    kind: str = Field(alias="class")
    elements: list[str]
    discretization: Discretization
    lattice: str | None = None
    bm: BirchMurnaghanTruth | None = None
    reference: BenchmarkReference | None = None
    substrate: str | None = None
    adsorbate: str | None = None
    lattice_a: float | None = None
    bond_length: float | None = None
    energies: dict[str, dict[str, float]] = Field(default_factory=dict)
    beef: BeefParameters | None = None
    scf_base: int | None = Field(None, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _check_kind(self) -> MaterialFixture:
        kinds = (KIND_BULK, KIND_SLAB, KIND_MOLECULE, KIND_SLAB_ADSORBATE)
        if self.kind not in kinds:
            raise ValueError(f"fixture class must be one of {kinds}, got '{self.kind}'")
        if self.kind == KIND_BULK and self.bm is None:
            raise ValueError(f"bulk fixture '{self.system}' needs Birch-Murnaghan parameters")
        if self.kind == KIND_SLAB_ADSORBATE and self.substrate is None:
            raise ValueError(f"fixture '{self.system}' needs a substrate element")
        return self

    @property
    def element_set(self) -> frozenset[str]:
        return frozenset(self.elements)


class FixtureLibrary(BaseModel):
    """Versioned collection of fixtures plus the shared SCF and duration constants."""

    format: str
    version: int
    notes: list[str] = Field(default_factory=list)
    duration: Duration
    scf_base: dict[str, int]
    fixtures: list[MaterialFixture]

    @model_validator(mode="after")
    def _fill_defaults(self) -> FixtureLibrary:
        if self.format != FIXTURE_FORMAT:
            raise ValueError(f"not a {FIXTURE_FORMAT} file (format={self.format!r})")
        names = [f.system for f in self.fixtures]
        if len(set(names)) != len(names):
            raise ValueError("fixture system names must be unique")
        for fixture in self.fixtures:
            if fixture.scf_base is None:
                fixture.scf_base = self.scf_base[fixture.kind]
        return self

    def get(self, system: str) -> MaterialFixture:
        for fixture in self.fixtures:
            if fixture.system == system:
                return fixture
        available = sorted(f.system for f in self.fixtures)
        raise FixtureNotFound(f"Unknown system '{system}'. Available: {available}")

    def lookup(self, kind: str, elements: set[str] | frozenset[str]) -> MaterialFixture:
        """Fixture for a structure kind and element set."""
        wanted = frozenset(elements)
        for fixture in self.fixtures:
            if fixture.kind == kind and fixture.element_set == wanted:
                return fixture
        raise FixtureNotFound(f"No {kind} fixture for elements {sorted(wanted)}")

    def benchmark_systems(self) -> list[MaterialFixture]:
        """Bulk fixtures with published reference lattice constants, in file order."""
        return [f for f in self.fixtures if f.kind == KIND_BULK and f.reference is not None]


def load_fixture_library(path: Path | None = None) -> FixtureLibrary:
    """Load and validate a fixture library (default: the packaged one)."""
    path = Path(path) if path is not None else data_path("fixtures.json")
    return FixtureLibrary.model_validate(json.loads(path.read_text(encoding="utf-8")))


def builtin_fixtures() -> FixtureLibrary:
    return load_fixture_library()


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


def scf_iterations(spec: CalcSpec, scf_base: int) -> int:
    """Iterations the SCF model needs for ``spec``."""
    factor = MIXING_FACTORS[spec.mixing_mode]
    raw = scf_base * (0.02 / spec.degauss) * (spec.mixing_beta / 0.3) * factor
    # Round first so products like 180 * 7/3 * 1.3 land on 546, not 547.
    return max(1, math.ceil(round(raw, 9)))


def accuracy_series(required: int, conv_thr: float, maxstep: int) -> list[float]:
    """Estimated accuracy per iteration, falling geometrically to 0.9 * conv_thr at ``required``."""
    final = 0.9 * conv_thr
    n = min(required, maxstep)
    if required == 1:
        return [final]
    ratio = (FIRST_ACCURACY / final) ** (1.0 / (required - 1))
    return [final * ratio ** (required - i) for i in range(1, n + 1)]


def configuration_key(fixture: MaterialFixture, structure: StructureModel) -> str:
    """Key into the fixture's energy tables for this geometry."""
    if fixture.kind == KIND_SLAB:
        return "clean"
    if fixture.kind == KIND_MOLECULE:
        return "gas"
    if fixture.kind == KIND_SLAB_ADSORBATE:
        assert fixture.substrate is not None
        site = classify_site(structure, fixture.substrate)
        orientation = classify_orientation(structure, fixture.substrate)
        return f"{site}/{orientation}"
    return "bulk"


def physical_energy(fixture: MaterialFixture, structure: StructureModel, functional: str) -> float:
    """Noise-free energy (Ry) of the structure under ``functional``."""
    if fixture.kind == KIND_BULK:
        assert fixture.bm is not None
        bm = fixture.bm
        return float(birch_murnaghan(structure.volume, bm.E0, bm.V0, bm.B0, bm.B0_prime))
    key = configuration_key(fixture, structure)
    table = fixture.energies.get(functional)
    if table is None or key not in table:
        raise UnknownConfiguration(
            f"Fixture '{fixture.system}' has no {functional} energy for '{key}'"
        )
    return table[key]


def discretization_error(
    fixture: MaterialFixture, structure: StructureModel, spec: CalcSpec
) -> float:
    d = fixture.discretization
    per_atom = d.A_c * math.exp(-spec.ecutwfc / d.lambda_c) + d.A_k * spec.kspacing**2
    return structure.natoms * per_atom


def _generator(seed: int, counter: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed % 2**64, counter=counter))


def jitter(seed: int, fixture: MaterialFixture, structure: StructureModel, spec: CalcSpec) -> float:
    """Deterministic offset in [-1e-7, 1e-7) Ry for one calculation."""
    digest = hashlib.sha256()
    digest.update(fixture.system.encode())
    digest.update(str(fixture.seed).encode())
    digest.update(json.dumps(spec.model_dump(), sort_keys=True).encode())
    digest.update(np.ascontiguousarray(structure.positions, dtype="<f8").tobytes())
    counter = int.from_bytes(digest.digest()[:16], "big")
    u = _generator(seed, counter).random()
    return (2.0 * u - 1.0) * JITTER_AMPLITUDE


def ensemble_normals(seed: int, n: int) -> np.ndarray:
    """Standard normal draws shared by every system for a seed."""
    if n < 2:
        raise EnsembleTooSmall("ensembles need at least 2 members")
    return _generator(seed, 0).standard_normal(n)


def wall_seconds(natoms: int, n_scf: int, ntasks: int, duration: Duration) -> float:
    return duration.c0_seconds + duration.c1_seconds * natoms * n_scf / max(1, ntasks)


def evaluate(
    fixture: MaterialFixture,
    structure: StructureModel,
    spec: CalcSpec,
    seed: int,
    *,
    duration: Duration,
    ntasks: int | None = None,
    ensemble_members: int = 2000,
    output_path: Path | None = None,
) -> SimOutput:
    """
    Run one surrogate calculation.

    Args:
        fixture: Truth for the system.
        structure: Geometry; its kind must match the fixture class.
        spec: Calculation parameters.
        seed: Run seed.
        duration: Wall-time constants.
        ntasks: MPI tasks, defaults to the atom count.
        ensemble_members: Members written for ``calculation='ensemble'``.
        output_path: If given, the output document is written there.

    Raises:
        ClassMismatch: Fixture class and structure kind differ.
        UnknownConfiguration: No table entry for the functional or geometry.
    """
    if fixture.kind != structure.kind:
        raise ClassMismatch(
            f"fixture '{fixture.system}' is {fixture.kind} but the structure is {structure.kind}"
        )
    assert fixture.scf_base is not None
    required = scf_iterations(spec, fixture.scf_base)
    converged = required <= spec.electron_maxstep
    series = accuracy_series(required, spec.conv_thr, spec.electron_maxstep)

    energy = (
        physical_energy(fixture, structure, spec.input_dft)
        + discretization_error(fixture, structure, spec)
        + jitter(seed, fixture, structure, spec)
    )

    members = None
    if spec.calculation == "ensemble" and converged:
        if fixture.beef is None:
            raise UnknownConfiguration(f"Fixture '{fixture.system}' has no ensemble parameters")
        key = configuration_key(fixture, structure)
        offset = fixture.beef.mean_offset.get(key, 0.0)
        weight = fixture.beef.spread.get(key, 0.0)
        z = ensemble_normals(seed, ensemble_members)
        members = [float(v) for v in energy + offset + weight * z]

    output = SimOutput(
        total_energy=float(energy),
        converged=converged,
        n_scf=len(series),
        accuracy_series=series,
        ensemble_energies=members,
        wall_seconds=wall_seconds(
            structure.natoms, len(series), ntasks or structure.natoms, duration
        ),
        system=fixture.system,
    )
    if output_path is not None:
        write_output(output, output_path)
    logger.debug(
        "%s: R=%d converged=%s E=%.8f Ry", fixture.system, required, converged, energy
    )
    return output


class SurrogateBackend:
    """
    Calculation backend that answers input files from a fixture library.

    This is the object the cluster simulator calls when a job starts; a real
    pw.x launcher would expose the same ``run`` method.
    """

    def __init__(
        self, library: FixtureLibrary, seed: int, ensemble_members: int = 2000
    ) -> None:
        self.library = library
        self.seed = seed
        self.ensemble_members = ensemble_members

    def run(self, input_path: Path, output_path: Path, ntasks: int) -> SimOutput:
        spec, structure = parse_input(input_path)
        fixture = self.library.lookup(structure.kind, set(structure.species))
        return evaluate(
            fixture,
            structure,
            spec,
            self.seed,
            duration=self.library.duration,
            ntasks=ntasks,
            ensemble_members=self.ensemble_members,
            output_path=output_path,
        )
