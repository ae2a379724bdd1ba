"""
Plane-wave DFT input and output documents.

Inputs follow the pw.x namelist layout (``&CONTROL``, ``&SYSTEM``,
``&ELECTRONS`` plus the ``ATOMIC_SPECIES``, ``K_POINTS automatic``,
``CELL_PARAMETERS angstrom`` and ``ATOMIC_POSITIONS angstrom`` cards).
Values that pw.x has no variable for (k-point spacing, run bookkeeping such as
the repair ``attempt``) travel in ``! key = value`` comment lines at the top
of the file, so ``parse_input(write_input(spec, structure))`` gives back the
same spec and structure.

Output documents are the ones emitted by the surrogate backend:

    matscreen-surrogate-output v1
    iter 1 accuracy 0.1
    ...
    convergence NOT achieved after 200 iterations: stopping   (failure only)
    ! total energy = -29.6 Ry
    wall time 274.0 s
    ENSEMBLE 2000                                             (ensemble runs)
    ...
    END ENSEMBLE

All energies are Ry. Floats are written with ``repr`` so values survive a
write/parse cycle unchanged.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Union

import numpy as np
from ase.data import atomic_masses, atomic_numbers
from pydantic import BaseModel, Field, model_validator

from .errors import (
    ElementNotInCatalog,
    InvariantViolation,
    MissingEnergy,
    QESyntaxError,
    SingularCell,
    UnknownField,
)
from .structlab import StructureModel

logger = logging.getLogger(__name__)

INPUT_HEADER = "! matscreen pw.x input, format 1"
OUTPUT_HEADER = "matscreen-surrogate-output v1"
NOT_CONVERGED_MARKER = "convergence NOT achieved"
ECUTWFC_GUIDANCE = (30.0, 100.0)

ExtraValue = Union[bool, int, float, str]

CONTROL_FIELDS = ("calculation", "restart_mode", "prefix", "disk_io")
SYSTEM_FIELDS = (
    "ibrav",
    "nat",
    "ntyp",
    "ecutwfc",
    "ecutrho",
    "occupations",
    "smearing",
    "degauss",
    "input_dft",
)
ELECTRONS_FIELDS = (
    "conv_thr",
    "electron_maxstep",
    "mixing_beta",
    "mixing_mode",
    "diagonalization",
    "startingwfc",
)
NAMELISTS = {"CONTROL": CONTROL_FIELDS, "SYSTEM": SYSTEM_FIELDS, "ELECTRONS": ELECTRONS_FIELDS}

# pw.x variables outside CalcSpec that may appear in extras, by namelist.
PW_EXTRAS = {
    "outdir": "CONTROL",
    "pseudo_dir": "CONTROL",
    "tprnfor": "CONTROL",
    "tstress": "CONTROL",
    "verbosity": "CONTROL",
    "nspin": "SYSTEM",
    "nbnd": "SYSTEM",
    "starting_magnetization": "SYSTEM",
    "vdw_corr": "SYSTEM",
    "david_ndim": "ELECTRONS",
    "mixing_ndim": "ELECTRONS",
    "scf_must_converge": "ELECTRONS",
}

# Header comment keys the writer emits ahead of the namelists.
HEADER_KEYS = ("kspacing", "ecutrho", "structure_name")
RESERVED_KEYS = frozenset(
    (*HEADER_KEYS, "assume_isolated", *(name for names in NAMELISTS.values() for name in names))
)


def check_extras(extras: dict[str, ExtraValue]) -> None:
    """Reject extras the writer cannot emit without clobbering another field."""
    for key, value in extras.items():
        if key in RESERVED_KEYS:
            raise InvariantViolation(f"extras key '{key}' collides with a CalcSpec field")
        if not _KEY_RE.match(key):
            raise InvariantViolation(f"extras key {key!r} is not a valid variable name")
        format_value(value)


ISOLATION_BY_PBC = {(True, True, False): "2D", (False, False, False): "mt"}
PBC_BY_ISOLATION = {v: k for k, v in ISOLATION_BY_PBC.items()}


class CalcSpec(BaseModel):
    """
    DFT parameters for one pw.x-style calculation.

    ``ecutrho`` left unset means 8 x ``ecutwfc``. ``extras`` holds any other
    flat key/value input, for example ``david_ndim`` or the repair ``attempt``.
    """

    calculation: Literal["scf", "relax", "ensemble"] = "scf"
    restart_mode: Literal["from_scratch", "restart"] = "from_scratch"
    prefix: str = "calc"
    disk_io: Literal["none", "minimal", "nowf", "low", "medium", "high"] = "low"
    ibrav: int = 0
    nat: int = Field(1, ge=1)
    ntyp: int = Field(1, ge=1)
    ecutwfc: float = Field(40.0, gt=0)
    ecutrho: float | None = Field(None, gt=0)
    occupations: str = "smearing"
    smearing: str = "methfessel-paxton"
    degauss: float = Field(0.02, gt=0)
    conv_thr: float = Field(1.0e-6, gt=0)
    electron_maxstep: int = Field(200, ge=1)
    mixing_beta: float = Field(0.7, gt=0, le=1)
    mixing_mode: Literal["plain", "local-TF", "TF"] = "plain"
    diagonalization: str = "david"
    startingwfc: str = "atomic"
    kspacing: float = Field(0.15, gt=0)
    input_dft: Literal["LDA", "PBE", "BEEF-vdW"] = "PBE"
    pseudopotentials: dict[str, str] = Field(default_factory=dict)
    extras: dict[str, ExtraValue] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _ensemble_needs_beef(self) -> CalcSpec:
        if self.calculation == "ensemble" and self.input_dft != "BEEF-vdW":
            raise ValueError("calculation='ensemble' requires input_dft='BEEF-vdW'")
        return self

    @model_validator(mode="after")
    def _extras_round_trip(self) -> CalcSpec:
        check_extras(self.extras)
        return self

    @property
    def effective_ecutrho(self) -> float:
        return self.ecutrho if self.ecutrho is not None else 8.0 * self.ecutwfc

    @property
    def attempt(self) -> int:
        """Repair attempt marker; 1 when absent."""
        return int(self.extras.get("attempt", 1))

    @classmethod
    def for_structure(
        cls, structure: StructureModel, pseudopotentials: dict[str, str], **params: object
    ) -> CalcSpec:
        """Spec with nat, ntyp and pseudopotentials taken from ``structure``."""
        missing = [el for el in structure.species if el not in pseudopotentials]
        if missing:
            raise InvariantViolation(f"no pseudopotential given for {missing}")
        return cls.model_validate(
            {
                **params,
                "nat": structure.natoms,
                "ntyp": len(structure.species),
                "pseudopotentials": {el: pseudopotentials[el] for el in structure.species},
            }
        )


@dataclass(frozen=True)
class OutputSummary:
    """Parsed output document."""

    total_energy: float
    converged: bool
    n_scf: int
    accuracy_series: list[float] = field(default_factory=list)
    ensemble_energies: list[float] | None = None
    wall_seconds: float = 0.0
    system: str = ""


# ---------------------------------------------------------------------------
# Pseudopotentials and k-points
# ---------------------------------------------------------------------------


def find_pseudopotential(element: str, catalog: dict[str, str]) -> str:
    """
    Return the pseudopotential filename for an element.

    Raises:
        ElementNotInCatalog: If the catalog has no entry for the element.
    """
    if element not in catalog:
        available = sorted(catalog.keys())
        raise ElementNotInCatalog(f"Unknown element '{element}'. Available: {available}")
    return catalog[element]


def kgrid(
    cell: np.ndarray, kspacing: float, pbc: tuple[bool, bool, bool] | None = None
) -> list[int]:
    """
    Monkhorst-Pack grid for a k-point spacing.

    ``n_i = max(1, ceil(|b_i| / kspacing))`` with ``b = 2*pi*inv(cell).T``.
    Non-periodic axes get a single point.
    """
    if not kspacing > 0:
        raise InvariantViolation(f"kspacing must be > 0, got {kspacing}")
    cell = np.asarray(cell, dtype=float)
    if abs(np.linalg.det(cell)) < 1e-12:
        raise SingularCell("cell matrix is singular")
    try:
        reciprocal = 2.0 * math.pi * np.linalg.inv(cell).T
    except np.linalg.LinAlgError as e:
        raise SingularCell(f"cell matrix is singular: {e}") from e
    grid = []
    for i, b in enumerate(reciprocal):
        if pbc is not None and not pbc[i]:
            grid.append(1)
            continue
        grid.append(max(1, math.ceil(round(float(np.linalg.norm(b)) / kspacing, 9))))
    return grid


# ---------------------------------------------------------------------------
# Input writer
# ---------------------------------------------------------------------------


def format_value(value: ExtraValue) -> str:
    """pw.x literal for a value: unquoted .true./.false., repr floats, quoted strings."""
    if isinstance(value, bool):
        return ".true." if value else ".false."
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InvariantViolation(f"float values must be finite: {value!r}")
        return repr(float(value))
    if "'" in value or "\"" in value:
        raise InvariantViolation(f"string values cannot contain quotes: {value!r}")
    if "\n" in value or "\r" in value:
        raise InvariantViolation(f"string values cannot contain line breaks: {value!r}")
    return f"'{value}'"


def _base_key(key: str) -> str:
    return key.split("(", 1)[0]


def render_input(spec: CalcSpec, structure: StructureModel) -> str:
    """Render an input document; see ``write_input``."""
    if spec.nat != structure.natoms:
        raise InvariantViolation(f"nat={spec.nat} but structure has {structure.natoms} atoms")
    if spec.ntyp != len(structure.species):
        raise InvariantViolation(
            f"ntyp={spec.ntyp} but structure has {len(structure.species)} elements"
        )
    missing = [el for el in structure.species if el not in spec.pseudopotentials]
    if missing:
        raise InvariantViolation(f"no pseudopotential given for {missing}")
    check_extras(spec.extras)
    low, high = ECUTWFC_GUIDANCE
    if not low <= spec.ecutwfc <= high:
        logger.warning(
            "ecutwfc=%s Ry is outside the recommended %s-%s Ry range", spec.ecutwfc, low, high
        )

    lines = [INPUT_HEADER, f"! kspacing = {format_value(spec.kspacing)}"]
    if spec.ecutrho is None:
        lines.append("! ecutrho = 'auto'")
    if structure.name:
        lines.append(f"! structure_name = {format_value(structure.name)}")
    for key in sorted(spec.extras):
        if _base_key(key) not in PW_EXTRAS:
            lines.append(f"! {key} = {format_value(spec.extras[key])}")

    values = spec.model_dump()
    values["ecutrho"] = spec.effective_ecutrho
    for namelist, names in NAMELISTS.items():
        lines.append(f"&{namelist}")
        for name in names:
            lines.append(f"    {name} = {format_value(values[name])}")
        if namelist == "SYSTEM" and structure.pbc in ISOLATION_BY_PBC:
            lines.append(f"    assume_isolated = {format_value(ISOLATION_BY_PBC[structure.pbc])}")
        for key in sorted(spec.extras):
            if PW_EXTRAS.get(_base_key(key)) == namelist:
                lines.append(f"    {key} = {format_value(spec.extras[key])}")
        lines.append("/")

    lines += ["", "ATOMIC_SPECIES"]
    for el in structure.species:
        mass = atomic_masses[atomic_numbers[el]]
        lines.append(f"{el} {mass:.4f} {spec.pseudopotentials[el]}")

    grid = kgrid(structure.cell, spec.kspacing, structure.pbc)
    lines += ["", "K_POINTS automatic", " ".join(str(n) for n in grid) + " 0 0 0"]

    lines += ["", "CELL_PARAMETERS angstrom"]
    lines += [" ".join(repr(float(v)) for v in row) for row in structure.cell]

    lines += ["", "ATOMIC_POSITIONS angstrom"]
    for i, (el, pos) in enumerate(zip(structure.symbols, structure.positions)):
        line = f"{el} " + " ".join(repr(float(v)) for v in pos)
        if i in structure.fixed_indices:
            line += " 0 0 0"
        lines.append(line)
    return "\n".join(lines) + "\n"


def write_input(spec: CalcSpec, structure: StructureModel, path: Path) -> Path:
    """
    Write a pw.x-style input file.

    Output is byte-identical for equal inputs. A warning is logged when
    ``ecutwfc`` lies outside 30-100 Ry.

    Raises:
        InvariantViolation: nat/ntyp disagree with the structure, a
            pseudopotential is missing, or the path does not end in ``.pwi``.
    """
    path = Path(path)
    if path.suffix != ".pwi":
        raise InvariantViolation(f"input files must end in .pwi: {path.name}")
    text = render_input(spec, structure)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.debug("wrote %s", path)
    return path


# ---------------------------------------------------------------------------
# Input parser
# ---------------------------------------------------------------------------

_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eEdD][+-]?\d+)?$")
_KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\(\d+\))?$")


def parse_value(raw: str, line: int, column: int) -> ExtraValue:
    """Parse a pw.x literal (quoted string, logical, integer or float)."""
    text = raw.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        return text[1:-1]
    lowered = text.lower()
    if lowered in (".true.", ".t."):
        return True
    if lowered in (".false.", ".f."):
        return False
    if _INT_RE.match(text):
        return int(text)
    if _FLOAT_RE.match(text):
        return float(text.replace("d", "e").replace("D", "e"))
    raise QESyntaxError(f"malformed value {text!r}", line, column)


def _strip_comment(text: str) -> str:
    quoted = False
    for i, ch in enumerate(text):
        if ch in "'\"":
            quoted = not quoted
        elif ch == "!" and not quoted:
            return text[:i]
    return text


def _split_assignments(text: str) -> list[tuple[str, int]]:
    """Split ``a = 1, b = 2`` on commas outside quotes; returns (chunk, offset)."""
    chunks: list[tuple[str, int]] = []
    start = 0
    quoted = False
    for i, ch in enumerate(text):
        if ch in "'\"":
            quoted = not quoted
        elif ch == "," and not quoted:
            chunks.append((text[start:i], start))
            start = i + 1
    chunks.append((text[start:], start))
    return [(c, off) for c, off in chunks if c.strip()]


def _parse_assignment(chunk: str, offset: int, line_no: int) -> tuple[str, ExtraValue]:
    if "=" not in chunk:
        raise QESyntaxError(f"expected 'key = value', got {chunk.strip()!r}", line_no, offset + 1)
    key, raw = chunk.split("=", 1)
    key = key.strip()
    if not _KEY_RE.match(key):
        raise QESyntaxError(f"invalid variable name {key!r}", line_no, offset + 1)
    column = offset + len(chunk.split("=", 1)[0]) + 2 + (len(raw) - len(raw.lstrip()))
    return key, parse_value(raw, line_no, column)


def parse_input_text(
    text: str, strict: bool = False
) -> tuple[CalcSpec, StructureModel]:
    """
    Parse an input document.

    Args:
        text: Document contents.
        strict: Reject unrecognised namelist variables instead of routing
            them into ``extras``.

    Raises:
        QESyntaxError: Malformed document, with line and column.
        UnknownField: Unrecognised variable in strict mode.
    """
    lines = text.splitlines()
    header: dict[str, ExtraValue] = {}
    namelists: dict[str, dict[str, ExtraValue]] = {}
    species: dict[str, str] = {}
    cell_rows: list[list[float]] = []
    symbols: list[str] = []
    positions: list[list[float]] = []
    fixed: set[int] = set()

    i = 0

    def floats(parts: list[str], line_no: int) -> list[float]:
        values = []
        for part in parts:
            value = parse_value(part, line_no, lines[line_no - 1].find(part) + 1)
            if isinstance(value, (bool, str)):
                raise QESyntaxError(f"expected a number, got {part!r}", line_no, 1)
            values.append(float(value))
        return values

    try:
        while i < len(lines):
            line_no = i + 1
            stripped = lines[i].strip()
            i += 1
            if not stripped:
                continue
            if stripped.startswith("!") or stripped.startswith("#"):
                if not namelists and "=" in stripped:
                    body = stripped[1:]
                    offset = len(lines[line_no - 1]) - len(lines[line_no - 1].lstrip()) + 1
                    key, value = _parse_assignment(body, offset, line_no)
                    header[key] = value
                continue
            if stripped.startswith("&"):
                name = stripped[1:].split()[0].upper()
                if name not in NAMELISTS:
                    raise QESyntaxError(f"unknown namelist &{name}", line_no, 1)
                entries = namelists.setdefault(name, {})
                while True:
                    if i >= len(lines):
                        raise QESyntaxError(f"namelist &{name} is not closed with '/'", line_no, 1)
                    body_no = i + 1
                    body = _strip_comment(lines[i])
                    i += 1
                    if body.strip() == "/":
                        break
                    for chunk, offset in _split_assignments(body):
                        key, value = _parse_assignment(chunk, offset, body_no)
                        entries[key] = value
                continue

            card = stripped.split()[0].upper()
            option = stripped.split()[1].lower() if len(stripped.split()) > 1 else ""
            system = namelists.get("SYSTEM", {})
            if card == "ATOMIC_SPECIES":
                for _ in range(int(system.get("ntyp", 1))):
                    parts = lines[i].split()
                    if len(parts) != 3:
                        raise QESyntaxError("expected 'symbol mass file'", i + 1, 1)
                    floats([parts[1]], i + 1)
                    species[parts[0]] = parts[2]
                    i += 1
            elif card == "K_POINTS":
                if option.strip("{}()") != "automatic":
                    raise QESyntaxError("only K_POINTS automatic is supported", line_no, 1)
                parts = lines[i].split()
                if len(parts) != 6 or not all(_INT_RE.match(p) for p in parts):
                    raise QESyntaxError("expected 6 integers after K_POINTS", i + 1, 1)
                i += 1
            elif card == "CELL_PARAMETERS":
                if option.strip("{}()") != "angstrom":
                    raise QESyntaxError("only CELL_PARAMETERS angstrom is supported", line_no, 1)
                for _ in range(3):
                    parts = lines[i].split()
                    if len(parts) != 3:
                        raise QESyntaxError("expected 3 cell components", i + 1, 1)
                    cell_rows.append(floats(parts, i + 1))
                    i += 1
            elif card == "ATOMIC_POSITIONS":
                if option.strip("{}()") != "angstrom":
                    raise QESyntaxError("only ATOMIC_POSITIONS angstrom is supported", line_no, 1)
                for index in range(int(system.get("nat", 0))):
                    if i >= len(lines):
                        raise QESyntaxError("fewer positions than nat", i, 1)
                    parts = lines[i].split()
                    if len(parts) not in (4, 7):
                        raise QESyntaxError("expected 'symbol x y z [if_pos]'", i + 1, 1)
                    symbols.append(parts[0])
                    positions.append(floats(parts[1:4], i + 1))
                    if len(parts) == 7 and parts[4:] == ["0", "0", "0"]:
                        fixed.add(index)
                    i += 1
            else:
                raise QESyntaxError(f"unexpected line {stripped!r}", line_no, 1)
    except IndexError as e:
        raise QESyntaxError("unexpected end of document", len(lines), 1) from e

    return _assemble(header, namelists, species, cell_rows, symbols, positions, fixed, strict)


def _assemble(
    header: dict[str, ExtraValue],
    namelists: dict[str, dict[str, ExtraValue]],
    species: dict[str, str],
    cell_rows: list[list[float]],
    symbols: list[str],
    positions: list[list[float]],
    fixed: set[int],
    strict: bool,
) -> tuple[CalcSpec, StructureModel]:
    if len(cell_rows) != 3:
        raise QESyntaxError("missing CELL_PARAMETERS card", 1, 1)
    values: dict[str, object] = {}
    extras: dict[str, ExtraValue] = {}
    isolation: str | None = None
    for namelist, entries in namelists.items():
        for key, value in entries.items():
            if key in NAMELISTS[namelist]:
                values[key] = value
            elif key == "assume_isolated":
                isolation = str(value)
            elif _base_key(key) in PW_EXTRAS or not strict:
                extras[key] = value
            else:
                raise UnknownField(f"Unknown variable '{key}' in &{namelist}")

    name = ""
    for key, value in header.items():
        if key == "kspacing":
            values["kspacing"] = value
        elif key == "ecutrho" and value == "auto":
            values["ecutrho"] = None
        elif key == "structure_name":
            name = str(value)
        else:
            extras[key] = value
    values["extras"] = extras
    values["pseudopotentials"] = species

    if isolation is not None and isolation not in PBC_BY_ISOLATION:
        raise UnknownField(f"Unsupported assume_isolated value '{isolation}'")
    pbc = PBC_BY_ISOLATION.get(isolation or "", (True, True, True))
    structure = StructureModel(
        symbols=symbols,
        positions=np.array(positions, dtype=float).reshape(-1, 3),
        cell=np.array(cell_rows, dtype=float),
        pbc=pbc,
        fixed_indices=frozenset(fixed),
        name=name,
    )
    return CalcSpec.model_validate(values), structure


def parse_input(path: Path, strict: bool = False) -> tuple[CalcSpec, StructureModel]:
    """Parse an input file written by ``write_input`` (or edited by hand)."""
    return parse_input_text(Path(path).read_text(encoding="utf-8"), strict=strict)


# ---------------------------------------------------------------------------
# Output documents
# ---------------------------------------------------------------------------


def render_output(summary: OutputSummary) -> str:
    """Emit an output document for ``summary``."""
    lines = [OUTPUT_HEADER]
    if summary.system:
        lines.append(f"system {summary.system}")
    for n, accuracy in enumerate(summary.accuracy_series, start=1):
        lines.append(f"iter {n} accuracy {accuracy!r}")
    if not summary.converged:
        lines.append(f"{NOT_CONVERGED_MARKER} after {summary.n_scf} iterations: stopping")
    lines.append(f"! total energy = {summary.total_energy!r} Ry")
    lines.append(f"wall time {summary.wall_seconds!r} s")
    if summary.ensemble_energies is not None:
        lines.append(f"ENSEMBLE {len(summary.ensemble_energies)}")
        lines += [repr(float(e)) for e in summary.ensemble_energies]
        lines.append("END ENSEMBLE")
    return "\n".join(lines) + "\n"


def write_output(summary: OutputSummary, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_output(summary), encoding="utf-8")
    return path


def parse_output_text(text: str) -> OutputSummary:
    """
    Parse an output document.

    Raises:
        QESyntaxError: Wrong header or malformed lines.
        MissingEnergy: No ``! total energy`` line.
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != OUTPUT_HEADER:
        raise QESyntaxError("not a matscreen output document", 1, 1)
    system = ""
    series: list[float] = []
    converged = True
    energy: float | None = None
    wall = 0.0
    ensemble: list[float] | None = None

    i = 1
    while i < len(lines):
        line_no = i + 1
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        parts = line.split()
        try:
            if line.startswith("system "):
                system = line[len("system "):]
            elif parts[0] == "iter":
                series.append(float(parts[3]))
            elif line.startswith(NOT_CONVERGED_MARKER):
                converged = False
            elif line.startswith("! total energy"):
                energy = float(line.split("=", 1)[1].split()[0])
            elif line.startswith("wall time"):
                wall = float(parts[2])
            elif parts[0] == "ENSEMBLE":
                count = int(parts[1])
                ensemble = [float(v) for v in lines[i : i + count]]
                if len(ensemble) != count or lines[i + count].strip() != "END ENSEMBLE":
                    raise QESyntaxError("ensemble block is truncated", line_no, 1)
                i += count + 1
            else:
                raise QESyntaxError(f"unexpected line {line!r}", line_no, 1)
        except (IndexError, ValueError) as e:
            if isinstance(e, QESyntaxError):
                raise
            raise QESyntaxError(f"malformed line {line!r}", line_no, 1) from e

    if energy is None:
        raise MissingEnergy("output has no '! total energy' line")
    return OutputSummary(
        total_energy=energy,
        converged=converged,
        n_scf=len(series),
        accuracy_series=series,
        ensemble_energies=ensemble,
        wall_seconds=wall,
        system=system,
    )


def parse_output(path: Path) -> OutputSummary:
    """Parse an output file; see ``parse_output_text``."""
    return parse_output_text(Path(path).read_text(encoding="utf-8"))
