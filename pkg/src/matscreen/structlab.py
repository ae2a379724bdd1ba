"""
Atomistic structure construction.

Builders wrap ``ase.build`` and return a ``StructureModel``: a small,
comparable record of symbols, Cartesian positions, cell, periodicity, fixed
atoms and layer tags. Structures are stored on disk in a plain-text
trajectory-style file (``.traj``), see ``write_structure``.

Conventional cubic cells are used for cubic lattices, so the EOS lattice
constant is simply the cube root of the fitted volume.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from ase import Atoms
from ase.build import bulk as ase_bulk
from ase.build import fcc111
from ase.constraints import FixAtoms
from ase.symbols import string2symbols

from .errors import (
    CountMismatch,
    InvalidSlabSpec,
    InvalidStructure,
    MissingParameter,
    NonPositiveScale,
    SiteOutOfCell,
    UnknownLattice,
    UnknownSite,
    UnsupportedFacet,
)

logger = logging.getLogger(__name__)

STRUCTURE_HEADER = "# matscreen structure file, format 1"
MOLECULE_BOX = 15.0
DEFAULT_HEIGHT = 2.0
DEFAULT_VACUUM = 10.0
SITE_TOLERANCE = 0.3  # Å, in-plane

KIND_BULK = "bulk"
KIND_SLAB = "slab"
KIND_MOLECULE = "molecule"
KIND_SLAB_ADSORBATE = "slab+adsorbate"


@dataclass(frozen=True)
class LatticeInfo:
    """Which parameters a lattice needs, and whether it has a cubic cell."""

    needs_b: bool = False
    needs_c: bool = False
    needs_alpha: bool = False
    cubic: bool = False


# Lattices accepted by init_structure_data.
LATTICE_REGISTRY: dict[str, LatticeInfo] = {
    "sc": LatticeInfo(cubic=True),
    "fcc": LatticeInfo(cubic=True),
    "bcc": LatticeInfo(cubic=True),
    "tetragonal": LatticeInfo(needs_c=True),
    "bct": LatticeInfo(needs_c=True),
    "hcp": LatticeInfo(needs_c=True),
    "rhombohedral": LatticeInfo(needs_alpha=True),
    "orthorhombic": LatticeInfo(needs_b=True, needs_c=True),
    "mcl": LatticeInfo(needs_b=True, needs_c=True, needs_alpha=True),
    "diamond": LatticeInfo(cubic=True),
    "zincblende": LatticeInfo(cubic=True),
    "rocksalt": LatticeInfo(cubic=True),
    "cesiumchloride": LatticeInfo(cubic=True),
    "fluorite": LatticeInfo(cubic=True),
    "wurtzite": LatticeInfo(needs_c=True),
}


def get_lattice_info(lattice: str) -> LatticeInfo:
    """
    Look up a lattice by name.

    Raises:
        UnknownLattice: If the lattice is not supported.
    """
    if lattice not in LATTICE_REGISTRY:
        available = sorted(LATTICE_REGISTRY.keys())
        raise UnknownLattice(f"Unknown lattice '{lattice}'. Available: {available}")
    return LATTICE_REGISTRY[lattice]


@dataclass(eq=False)
class StructureModel:
    """
    Atoms, cell and constraints of one material.

    Attributes:
        symbols: Element symbol per atom.
        positions: N x 3 Cartesian coordinates in Å.
        cell: 3 x 3 lattice vectors in Å, one vector per row.
        pbc: Periodicity per axis.
        fixed_indices: Atoms held fixed (bottom slab layers).
        layer_tags: Optional layer index per atom, 0 = bottom slab layer,
            -1 = adsorbate atom.
        name: Free-form label.
    """

    symbols: list[str]
    positions: np.ndarray
    cell: np.ndarray
    pbc: tuple[bool, bool, bool] = (True, True, True)
    fixed_indices: frozenset[int] = field(default_factory=frozenset)
    layer_tags: list[int] | None = None
    name: str = ""

    def __post_init__(self) -> None:
        self.symbols = list(self.symbols)
        self.positions = np.array(self.positions, dtype=float).reshape(-1, 3)
        self.cell = np.array(self.cell, dtype=float).reshape(3, 3)
        self.pbc = (bool(self.pbc[0]), bool(self.pbc[1]), bool(self.pbc[2]))
        self.fixed_indices = frozenset(int(i) for i in self.fixed_indices)
        if len(self.positions) != len(self.symbols):
            raise InvalidStructure(
                f"{len(self.symbols)} symbols but {len(self.positions)} positions"
            )
        if not np.linalg.det(self.cell) > 0:
            raise InvalidStructure("cell determinant must be > 0")
        bad = sorted(i for i in self.fixed_indices if not 0 <= i < len(self.symbols))
        if bad:
            raise InvalidStructure(f"fixed indices out of range: {bad}")
        if self.layer_tags is not None:
            self.layer_tags = [int(t) for t in self.layer_tags]
            if len(self.layer_tags) != len(self.symbols):
                raise InvalidStructure("layer_tags length differs from atom count")

    def __len__(self) -> int:
        return len(self.symbols)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StructureModel):
            return NotImplemented
        return (
            self.symbols == other.symbols
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.cell, other.cell)
            and self.pbc == other.pbc
            and self.fixed_indices == other.fixed_indices
            and self.layer_tags == other.layer_tags
            and self.name == other.name
        )

    @property
    def natoms(self) -> int:
        return len(self.symbols)

    @property
    def species(self) -> list[str]:
        """Distinct elements in order of first appearance."""
        return list(dict.fromkeys(self.symbols))

    @property
    def volume(self) -> float:
        return float(np.linalg.det(self.cell))

    @property
    def kind(self) -> str:
        """bulk, slab, molecule or slab+adsorbate, from periodicity and composition."""
        if not any(self.pbc):
            return KIND_MOLECULE
        if all(self.pbc):
            return KIND_BULK
        return KIND_SLAB if len(self.species) == 1 else KIND_SLAB_ADSORBATE

    def to_atoms(self) -> Atoms:
        atoms = Atoms(
            symbols=self.symbols, positions=self.positions, cell=self.cell, pbc=self.pbc
        )
        if self.fixed_indices:
            atoms.set_constraint(FixAtoms(indices=sorted(self.fixed_indices)))
        if self.layer_tags is not None:
            atoms.set_tags(self.layer_tags)
        return atoms

    @classmethod
    def from_atoms(cls, atoms: Atoms, name: str = "") -> StructureModel:
        fixed: set[int] = set()
        for constraint in atoms.constraints:
            if isinstance(constraint, FixAtoms):
                fixed.update(int(i) for i in constraint.get_indices())
        pbc = tuple(bool(p) for p in atoms.pbc)
        return cls(
            symbols=atoms.get_chemical_symbols(),
            positions=atoms.get_positions().copy(),
            cell=atoms.cell.array.copy(),
            pbc=(pbc[0], pbc[1], pbc[2]),
            fixed_indices=frozenset(fixed),
            name=name,
        )


@dataclass(frozen=True)
class SiteMap:
    """Named adsorption sites (in-plane Å coordinates) on a slab's top layer."""

    sites: dict[str, tuple[float, float]]
    top_z: float

    def __getitem__(self, name: str) -> tuple[float, float]:
        if name not in self.sites:
            available = sorted(self.sites.keys())
            raise UnknownSite(f"Unknown site '{name}'. Available: {available}")
        return self.sites[name]

    def __len__(self) -> int:
        return len(self.sites)

    def names(self) -> list[str]:
        return list(self.sites)


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def build_bulk(
    element: str,
    lattice: str,
    a: float,
    b: float | None = None,
    c: float | None = None,
    alpha: float | None = None,
) -> StructureModel:
    """
    Create a bulk crystal.

    Cubic lattices use the conventional cubic cell (bcc 2 atoms, fcc 4,
    diamond 8, sc 1), so ``det(cell) == a**3``. If a lattice needs only ``c``
    and just ``b`` is given, ``b`` is read as ``c``.

    Args:
        element: Element symbol, or a formula such as "NaCl" for compound lattices.
        lattice: One of ``LATTICE_REGISTRY``.
        a: Lattice constant in Å.
        b: Second lattice constant (orthorhombic, mcl).
        c: Third lattice constant (hcp, tetragonal, bct, wurtzite, orthorhombic, mcl).
        alpha: Angle in degrees (rhombohedral, mcl).

    Raises:
        UnknownLattice: Lattice not supported.
        MissingParameter: A required parameter is missing or a <= 0.
    """
    info = get_lattice_info(lattice)
    if not a > 0:
        raise MissingParameter(f"lattice constant a must be > 0, got {a}")
    if info.needs_c and not info.needs_b and c is None and b is not None:
        c, b = b, None
    required = (("b", info.needs_b, b), ("c", info.needs_c, c), ("alpha", info.needs_alpha, alpha))
    missing = [name for name, needed, value in required if needed and value is None]
    if missing:
        raise MissingParameter(f"lattice '{lattice}' requires {', '.join(missing)}")

    kwargs: dict[str, float | bool] = {"a": a}
    if info.needs_b and b is not None:
        kwargs["b"] = b
    if info.needs_c and c is not None:
        kwargs["c"] = c
    if info.needs_alpha and alpha is not None:
        kwargs["alpha"] = alpha
    if info.cubic:
        kwargs["cubic"] = True
    atoms = ase_bulk(element, lattice, **kwargs)
    structure = StructureModel.from_atoms(atoms, name=f"{element}-{lattice}")
    logger.debug("built %s %s with %d atoms", element, lattice, structure.natoms)
    return structure


def build_surface(
    element: str,
    crystal: str,
    a: float,
    facet: str,
    supercell: Sequence[int],
    n_fixed: int = 3,
    vacuum: float = DEFAULT_VACUUM,
) -> tuple[StructureModel, SiteMap]:
    """
    Create a slab and enumerate its adsorption sites.

    Args:
        element: Slab element.
        crystal: Bulk crystal structure; only "fcc" is supported.
        a: Bulk lattice constant in Å.
        facet: Miller index as a string; only "111" is supported.
        supercell: [p, q, layers].
        n_fixed: Number of bottom layers to hold fixed.
        vacuum: Vacuum added on each side of the slab, Å.

    Returns:
        The slab (periodic in-plane, bottom ``n_fixed`` layers fixed) and a
        SiteMap with ontop, bridge, fcc and hcp sites.

    Raises:
        UnsupportedFacet: For anything other than fcc(111).
        InvalidSlabSpec: Supercell entry < 1 or n_fixed outside 0..layers.
    """
    facet = str(facet).strip("()").replace(",", "").replace(" ", "")
    if (crystal, facet) != ("fcc", "111"):
        raise UnsupportedFacet(f"Unsupported surface {crystal}({facet}); supported: fcc(111)")
    if len(supercell) != 3:
        raise InvalidSlabSpec(f"supercell must be [p, q, layers], got {list(supercell)}")
    p, q, layers = (int(x) for x in supercell)
    if min(p, q, layers) < 1:
        raise InvalidSlabSpec(f"supercell entries must be >= 1, got {list(supercell)}")
    if not 0 <= n_fixed <= layers:
        raise InvalidSlabSpec(f"n_fixed must be in 0..{layers}, got {n_fixed}")

    atoms = fcc111(element, size=(p, q, layers), a=a, vacuum=vacuum)
    positions = atoms.get_positions()
    layer_index = _layer_indices(positions[:, 2])
    slab = StructureModel(
        symbols=atoms.get_chemical_symbols(),
        positions=positions,
        cell=atoms.cell.array,
        pbc=(True, True, False),
        fixed_indices=frozenset(i for i, t in enumerate(layer_index) if t < n_fixed),
        layer_tags=layer_index,
        name=f"{element}({facet})-p({p}x{q})",
    )
    return slab, _fcc111_sites(slab, p, q)


def _layer_indices(z: np.ndarray, decimals: int = 4) -> list[int]:
    levels = np.unique(np.round(z, decimals))
    return [int(np.searchsorted(levels, v)) for v in np.round(z, decimals)]


def _fcc111_sites(slab: StructureModel, p: int, q: int) -> SiteMap:
    assert slab.layer_tags is not None
    tags = np.array(slab.layer_tags)
    top = int(tags.max())
    top_atoms = np.flatnonzero(tags == top)
    origin = slab.positions[top_atoms[0], :2]
    a1 = slab.cell[0, :2] / p
    a2 = slab.cell[1, :2] / q

    hollow_1 = origin + (a1 + a2) / 3.0
    hollow_2 = origin + 2.0 * (a1 + a2) / 3.0
    second = slab.positions[tags == top - 1, :2] if top >= 1 else np.empty((0, 2))
    # The hcp hollow sits above a second-layer atom.
    if any(_inplane_distance(slab.cell, hollow_1, xy) < SITE_TOLERANCE for xy in second):
        hcp, fcc = hollow_1, hollow_2
    else:
        hcp, fcc = hollow_2, hollow_1

    raw = {"ontop": origin, "bridge": origin + a1 / 2.0, "fcc": fcc, "hcp": hcp}
    sites = {name: _wrap_inplane(slab.cell, xy) for name, xy in raw.items()}
    top_z = float(slab.positions[top_atoms, 2].max())
    return SiteMap(sites=sites, top_z=top_z)


def _inplane_matrix(cell: np.ndarray) -> np.ndarray:
    return np.array(cell[:2, :2], dtype=float)


def _fractional_inplane(cell: np.ndarray, xy: Iterable[float]) -> np.ndarray:
    return np.linalg.solve(_inplane_matrix(cell).T, np.asarray(list(xy), dtype=float))


def _wrap_inplane(cell: np.ndarray, xy: np.ndarray) -> tuple[float, float]:
    frac = _fractional_inplane(cell, xy) % 1.0
    wrapped = frac @ _inplane_matrix(cell)
    return float(wrapped[0]), float(wrapped[1])


def _inplane_distance(cell: np.ndarray, xy_a: np.ndarray, xy_b: np.ndarray) -> float:
    """Minimum-image in-plane distance between two points."""
    m = _inplane_matrix(cell)
    delta = np.asarray(xy_a, dtype=float) - np.asarray(xy_b, dtype=float)
    frac = np.linalg.solve(m.T, delta)
    frac -= np.round(frac)
    best = math.inf
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            d = (frac + (i, j)) @ m
            best = min(best, float(np.hypot(d[0], d[1])))
    return best


def site_in_footprint(cell: np.ndarray, xy: Iterable[float], tol: float = 1e-9) -> bool:
    """True if the in-plane point lies inside the cell's parallelogram."""
    frac = _fractional_inplane(cell, xy)
    return bool(np.all(frac >= -tol) and np.all(frac < 1.0 + tol))


def build_molecule(
    symbols: str | Sequence[str],
    positions: Sequence[Sequence[float]],
    name: str = "",
    box: float = MOLECULE_BOX,
) -> StructureModel:
    """
    Create an isolated molecule centred in a cubic box.

    Args:
        symbols: Formula string ("CO") or list of symbols.
        positions: Cartesian positions in Å; only relative positions are kept.
        name: Label, defaults to the formula.
        box: Edge of the cubic box in Å.

    Raises:
        CountMismatch: Symbol and position counts differ.
        InvalidStructure: Unparseable formula or positions.
    """
    try:
        symbol_list = string2symbols(symbols) if isinstance(symbols, str) else list(symbols)
        coords = np.array(positions, dtype=float).reshape(-1, 3)
    except ValueError as e:
        raise InvalidStructure(f"cannot build molecule {symbols!r}: {e}") from e
    if len(symbol_list) != len(coords):
        raise CountMismatch(f"{len(symbol_list)} symbols but {len(coords)} positions")
    centred = coords - coords.mean(axis=0) + box / 2.0
    return StructureModel(
        symbols=symbol_list,
        positions=centred,
        cell=np.eye(3) * box,
        pbc=(False, False, False),
        name=name or "".join(symbol_list),
    )


def place_adsorbate(
    slab: StructureModel,
    sites: SiteMap,
    molecule: StructureModel,
    site: str | Sequence[float],
    rotations: Sequence[tuple[float, str]] = (),
    height: float = DEFAULT_HEIGHT,
    name: str = "",
) -> StructureModel:
    """
    Put a molecule above a slab site.

    The molecule is rotated about its anchor (first) atom, rotations applied
    in list order, then translated so the anchor sits ``height`` Å above the
    top layer at the given site. Slab atoms are copied unchanged.

    Args:
        slab: Slab from ``build_surface``.
        sites: SiteMap returned with the slab.
        molecule: Molecule from ``build_molecule``.
        site: Site name from ``sites`` or an explicit (x, y) in Å.
        rotations: (angle in degrees, axis in {"x","y","z"}) pairs.
        height: Anchor height above the top layer, Å.
        name: Label for the combined structure.

    Raises:
        SiteOutOfCell: Site outside the in-plane cell footprint.
        UnknownSite: Site name not enumerated on the slab.
        InvalidSlabSpec: Rotation axis other than x, y or z.
    """
    xy = sites[site] if isinstance(site, str) else (float(site[0]), float(site[1]))
    if not site_in_footprint(slab.cell, xy):
        raise SiteOutOfCell(f"site {xy} lies outside the slab footprint")

    mol = Atoms(symbols=molecule.symbols, positions=molecule.positions.copy())
    anchor = mol.positions[0].copy()
    for angle, axis in rotations:
        if axis not in ("x", "y", "z"):
            raise InvalidSlabSpec(f"rotation axis must be x, y or z, got {axis!r}")
        mol.rotate(float(angle), axis, center=anchor)
    target = np.array([xy[0], xy[1], sites.top_z + height])
    placed = mol.positions - anchor + target

    tags = list(slab.layer_tags) if slab.layer_tags is not None else [0] * slab.natoms
    return StructureModel(
        symbols=slab.symbols + molecule.symbols,
        positions=np.vstack([slab.positions, placed]),
        cell=slab.cell.copy(),
        pbc=slab.pbc,
        fixed_indices=slab.fixed_indices,
        layer_tags=tags + [-1] * molecule.natoms,
        name=name or f"{molecule.name}@{slab.name}",
    )


def scale(structure: StructureModel, alpha: float) -> StructureModel:
    """Scale cell and positions linearly by ``alpha``; volume scales by alpha**3."""
    if not alpha > 0:
        raise NonPositiveScale(f"scale factor must be > 0, got {alpha}")
    return StructureModel(
        symbols=list(structure.symbols),
        positions=structure.positions * alpha,
        cell=structure.cell * alpha,
        pbc=structure.pbc,
        fixed_indices=structure.fixed_indices,
        layer_tags=None if structure.layer_tags is None else list(structure.layer_tags),
        name=structure.name,
    )


# ---------------------------------------------------------------------------
# Geometric classification (used by the surrogate backend)
# ---------------------------------------------------------------------------


def adsorbate_indices(structure: StructureModel, substrate: str) -> list[int]:
    """Indices of atoms that are not the substrate element."""
    return [i for i, s in enumerate(structure.symbols) if s != substrate]


def classify_site(structure: StructureModel, substrate: str, anchor: int | None = None) -> str:
    """
    Name the fcc(111) site under an adsorbate's anchor atom.

    Returns "ontop", "bridge", "fcc", "hcp" or "other".
    """
    ads = adsorbate_indices(structure, substrate)
    if not ads:
        raise InvalidStructure("structure has no adsorbate atoms")
    anchor = ads[0] if anchor is None else anchor
    slab_idx = [i for i, s in enumerate(structure.symbols) if s == substrate]
    z = structure.positions[slab_idx, 2]
    layers = np.array(_layer_indices(z))
    top = int(layers.max())
    point = structure.positions[anchor, :2]

    top_xy = structure.positions[np.array(slab_idx)[layers == top], :2]
    d_top = min(_inplane_distance(structure.cell, point, xy) for xy in top_xy)
    if d_top < SITE_TOLERANCE:
        return "ontop"
    if top >= 1:
        second_xy = structure.positions[np.array(slab_idx)[layers == top - 1], :2]
        if any(_inplane_distance(structure.cell, point, xy) < SITE_TOLERANCE for xy in second_xy):
            return "hcp"
    nn = _nearest_neighbour(structure.cell, top_xy)
    # Hollow and bridge distances differ by less than the tolerance; take the closer.
    offsets = {"fcc": abs(d_top - nn / math.sqrt(3.0)), "bridge": abs(d_top - nn / 2.0)}
    site = min(offsets, key=offsets.__getitem__)
    return site if offsets[site] < SITE_TOLERANCE else "other"


def _nearest_neighbour(cell: np.ndarray, points: np.ndarray) -> float:
    best = math.inf
    m = _inplane_matrix(cell)
    for i, a in enumerate(points):
        for j, b in enumerate(points):
            if i != j:
                best = min(best, _inplane_distance(cell, a, b))
    # Periodic images of a single atom.
    for shift in (m[0], m[1], m[0] - m[1]):
        best = min(best, float(np.hypot(*shift)))
    return best


def classify_orientation(structure: StructureModel, substrate: str) -> str:
    """
    Name the adsorbate orientation from its first bond.

    The angle between (second adsorbate atom - anchor) and +z decides:
    below 20 deg "upright", above 160 deg "flipped", otherwise "tilted".
    """
    ads = adsorbate_indices(structure, substrate)
    if len(ads) < 2:
        return "upright"
    bond = structure.positions[ads[1]] - structure.positions[ads[0]]
    cos = float(bond[2] / np.linalg.norm(bond))
    angle = math.degrees(math.acos(max(-1.0, min(1.0, cos))))
    if angle < 20.0:
        return "upright"
    if angle > 160.0:
        return "flipped"
    return "tilted"


# ---------------------------------------------------------------------------
# .traj text files
# ---------------------------------------------------------------------------


def write_structure(structure: StructureModel, path: Path) -> Path:
    """
    Write a structure as plain text.

    Layout: header, ``name``, ``pbc``, ``cell`` followed by three vector
    lines, ``atoms N`` followed by ``symbol x y z tag`` lines (tag ``-`` when
    untagged), ``fixed`` with the fixed indices, and ``end``. Floats are
    written with ``repr`` so reading back is exact.
    """
    lines = [
        STRUCTURE_HEADER,
        f"name {structure.name}",
        "pbc " + " ".join("T" if p else "F" for p in structure.pbc),
        "cell",
    ]
    lines += [" ".join(repr(float(v)) for v in row) for row in structure.cell]
    lines.append(f"atoms {structure.natoms}")
    for i, (symbol, pos) in enumerate(zip(structure.symbols, structure.positions)):
        tag = "-" if structure.layer_tags is None else str(structure.layer_tags[i])
        lines.append(f"{symbol} " + " ".join(repr(float(v)) for v in pos) + f" {tag}")
    lines.append("fixed " + " ".join(str(i) for i in sorted(structure.fixed_indices)))
    lines.append("end")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_structure(path: Path) -> StructureModel:
    """Read a file written by ``write_structure``."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()

    def expect(index: int, prefix: str) -> str:
        if index >= len(lines) or not lines[index].startswith(prefix):
            raise InvalidStructure(f"{path}: line {index + 1}: expected '{prefix}'")
        return lines[index][len(prefix):].strip()

    try:
        if not lines or lines[0] != STRUCTURE_HEADER:
            raise InvalidStructure(f"{path}: line 1: not a matscreen structure file")
        name = expect(1, "name")
        pbc_flags = expect(2, "pbc").split()
        expect(3, "cell")
        cell = [[float(v) for v in lines[4 + k].split()] for k in range(3)]
        natoms = int(expect(7, "atoms"))
        symbols: list[str] = []
        positions: list[list[float]] = []
        tags: list[str] = []
        for k in range(natoms):
            parts = lines[8 + k].split()
            symbols.append(parts[0])
            positions.append([float(v) for v in parts[1:4]])
            tags.append(parts[4])
        fixed_line = expect(8 + natoms, "fixed")
        expect(9 + natoms, "end")
    except (IndexError, ValueError) as e:
        if isinstance(e, InvalidStructure):
            raise
        raise InvalidStructure(f"{path}: malformed structure file: {e}") from e

    layer_tags = None if all(t == "-" for t in tags) else [int(t) for t in tags]
    return StructureModel(
        symbols=symbols,
        positions=np.array(positions, dtype=float).reshape(-1, 3),
        cell=np.array(cell, dtype=float),
        pbc=(pbc_flags[0] == "T", pbc_flags[1] == "T", pbc_flags[2] == "T"),
        fixed_indices=frozenset(int(i) for i in fixed_line.split()),
        layer_tags=layer_tags,
        name=name,
    )
