"""Tests for structure builders, site classification and structure files."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from matscreen.errors import (
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
from matscreen.structlab import (
    KIND_BULK,
    KIND_MOLECULE,
    KIND_SLAB,
    KIND_SLAB_ADSORBATE,
    SiteMap,
    StructureModel,
    build_bulk,
    build_molecule,
    build_surface,
    classify_orientation,
    classify_site,
    get_lattice_info,
    place_adsorbate,
    read_structure,
    scale,
    write_structure,
)


@pytest.fixture
def pt_slab() -> tuple[StructureModel, SiteMap]:
    return build_surface("Pt", "fcc", 3.92, "111", [2, 2, 4])


@pytest.fixture
def co() -> StructureModel:
    return build_molecule("CO", [[0.0, 0.0, 0.0], [0.0, 0.0, 1.14]])


class TestBuildBulk:
    """Tests for bulk crystals."""

    @pytest.mark.parametrize(
        ("element", "lattice", "a", "natoms"),
        [("Li", "bcc", 3.451, 2), ("Cu", "fcc", 3.595, 4), ("Si", "diamond", 5.421, 8)],
    )
    def test_conventional_cells(self, element: str, lattice: str, a: float, natoms: int) -> None:
        """Test that cubic lattices use the conventional cell with volume a**3."""
        structure = build_bulk(element, lattice, a)
        assert structure.natoms == natoms
        assert structure.volume == pytest.approx(a**3)
        assert structure.kind == KIND_BULK

    def test_unknown_lattice(self) -> None:
        """Test that unknown lattices list the available ones."""
        with pytest.raises(UnknownLattice, match="Available"):
            build_bulk("Li", "quasicrystal", 3.0)

    def test_hcp_needs_c(self) -> None:
        """Test that hcp without c is rejected."""
        with pytest.raises(MissingParameter, match="c"):
            build_bulk("Mg", "hcp", 3.21)

    def test_hcp_reads_b_as_c(self) -> None:
        """Test that a lone b is taken as c for lattices that only need c."""
        structure = build_bulk("Mg", "hcp", 3.21, b=5.21)
        assert structure.cell[2, 2] == pytest.approx(5.21)

    def test_non_positive_a(self) -> None:
        """Test that a <= 0 is rejected."""
        with pytest.raises(MissingParameter):
            build_bulk("Li", "bcc", 0.0)

    def test_lattice_info(self) -> None:
        """Test registry lookups."""
        assert get_lattice_info("bcc").cubic is True
        assert get_lattice_info("mcl").needs_alpha is True


class TestBuildSurface:
    """Tests for slabs and site maps."""

    def test_slab_shape(self, pt_slab: tuple[StructureModel, SiteMap]) -> None:
        """Test atom count, fixed layers and periodicity."""
        slab, sites = pt_slab
        assert slab.natoms == 16
        assert len(slab.fixed_indices) == 12
        assert slab.pbc == (True, True, False)
        assert slab.kind == KIND_SLAB
        assert sorted(sites.names()) == ["bridge", "fcc", "hcp", "ontop"]

    def test_sites_are_distinct(self, pt_slab: tuple[StructureModel, SiteMap]) -> None:
        """Test that the fcc and hcp hollows are different points."""
        _, sites = pt_slab
        assert not np.allclose(sites["fcc"], sites["hcp"])

    def test_unsupported_facet(self) -> None:
        """Test that only fcc(111) is supported."""
        with pytest.raises(UnsupportedFacet):
            build_surface("Pt", "fcc", 3.92, "100", [2, 2, 4])

    def test_unknown_site(self, pt_slab: tuple[StructureModel, SiteMap]) -> None:
        """Test that an unknown site name lists the available ones."""
        _, sites = pt_slab
        with pytest.raises(UnknownSite, match="Available"):
            sites["fourfold"]

    @pytest.mark.parametrize(
        ("supercell", "n_fixed"),
        [([2, 2], 2), ([2, 0, 4], 2), ([2, 2, 4], 5), ([2, 2, 4], -1)],
    )
    def test_invalid_slab_spec(self, supercell: list[int], n_fixed: int) -> None:
        """Test that malformed supercells and fixed-layer counts raise InvalidSlabSpec."""
        with pytest.raises(InvalidSlabSpec):
            build_surface("Pt", "fcc", 3.92, "111", supercell, n_fixed=n_fixed)


class TestPlacement:
    """Tests for adsorbate placement and classification."""

    @pytest.mark.parametrize("site", ["ontop", "fcc", "hcp", "bridge"])
    def test_site_roundtrip(
        self, pt_slab: tuple[StructureModel, SiteMap], co: StructureModel, site: str
    ) -> None:
        """Test that a molecule placed on a named site is classified as that site."""
        slab, sites = pt_slab
        combined = place_adsorbate(slab, sites, co, site)
        assert combined.kind == KIND_SLAB_ADSORBATE
        assert classify_site(combined, "Pt") == site

    @pytest.mark.parametrize(
        ("rotations", "orientation"),
        [([], "upright"), ([(45.0, "x")], "tilted"), ([(180.0, "x")], "flipped")],
    )
    def test_orientation(
        self,
        pt_slab: tuple[StructureModel, SiteMap],
        co: StructureModel,
        rotations: list[tuple[float, str]],
        orientation: str,
    ) -> None:
        """Test that rotations about the anchor give the expected orientation."""
        slab, sites = pt_slab
        combined = place_adsorbate(slab, sites, co, "fcc", rotations=rotations)
        assert classify_orientation(combined, "Pt") == orientation

    def test_anchor_height(
        self, pt_slab: tuple[StructureModel, SiteMap], co: StructureModel
    ) -> None:
        """Test that the anchor atom sits the requested height above the top layer."""
        slab, sites = pt_slab
        combined = place_adsorbate(slab, sites, co, "ontop", height=1.85)
        assert combined.positions[slab.natoms, 2] == pytest.approx(sites.top_z + 1.85)

    def test_slab_atoms_unchanged(
        self, pt_slab: tuple[StructureModel, SiteMap], co: StructureModel
    ) -> None:
        """Test that placement does not move slab atoms."""
        slab, sites = pt_slab
        combined = place_adsorbate(slab, sites, co, "fcc")
        assert np.array_equal(combined.positions[: slab.natoms], slab.positions)
        assert combined.fixed_indices == slab.fixed_indices

    def test_site_outside_cell(
        self, pt_slab: tuple[StructureModel, SiteMap], co: StructureModel
    ) -> None:
        """Test that an explicit site outside the footprint is rejected."""
        slab, sites = pt_slab
        with pytest.raises(SiteOutOfCell):
            place_adsorbate(slab, sites, co, (-50.0, -50.0))

    def test_unknown_rotation_axis(
        self, pt_slab: tuple[StructureModel, SiteMap], co: StructureModel
    ) -> None:
        """Test that rotations only accept the x, y and z axes."""
        slab, sites = pt_slab
        with pytest.raises(InvalidSlabSpec, match="axis"):
            place_adsorbate(slab, sites, co, "fcc", [(45.0, "w")])

    def test_classify_needs_adsorbate(self, pt_slab: tuple[StructureModel, SiteMap]) -> None:
        """Test that a clean slab has no site to classify."""
        slab, _ = pt_slab
        with pytest.raises(InvalidStructure):
            classify_site(slab, "Pt")


class TestMoleculeAndScale:
    """Tests for molecules and isotropic scaling."""

    def test_molecule_is_centred(self, co: StructureModel) -> None:
        """Test that a molecule is centred in a non-periodic box."""
        assert co.kind == KIND_MOLECULE
        assert co.positions.mean(axis=0) == pytest.approx([7.5, 7.5, 7.5])

    def test_count_mismatch(self) -> None:
        """Test that symbol and position counts must agree."""
        with pytest.raises(CountMismatch):
            build_molecule("CO", [[0.0, 0.0, 0.0]])

    def test_malformed_positions(self) -> None:
        """Test that positions that are not triples raise InvalidStructure."""
        with pytest.raises(InvalidStructure, match="cannot build molecule"):
            build_molecule("CO", [[0.0, 0.0]])

    def test_scale_volume(self) -> None:
        """Test that scaling by alpha multiplies the volume by alpha**3."""
        structure = build_bulk("Li", "bcc", 3.451)
        assert scale(structure, 1.02).volume == pytest.approx(structure.volume * 1.02**3)

    def test_scale_rejects_zero(self) -> None:
        """Test that a non-positive scale factor is rejected."""
        with pytest.raises(NonPositiveScale):
            scale(build_bulk("Li", "bcc", 3.451), 0.0)


class TestStructureFiles:
    """Tests for the plain-text structure format."""

    def test_roundtrip_is_exact(
        self, pt_slab: tuple[StructureModel, SiteMap], co: StructureModel, tmp_path: Path
    ) -> None:
        """Test that write then read gives an equal structure, tags and constraints included."""
        slab, sites = pt_slab
        combined = place_adsorbate(slab, sites, co, "fcc", rotations=[(45.0, "x")])
        path = write_structure(combined, tmp_path / "co_fcc.traj")
        assert read_structure(path) == combined

    def test_bulk_without_tags(self, tmp_path: Path) -> None:
        """Test that untagged structures read back untagged."""
        structure = build_bulk("Li", "bcc", 3.451)
        restored = read_structure(write_structure(structure, tmp_path / "Li.traj"))
        assert restored.layer_tags is None
        assert restored == structure

    def test_bad_header(self, tmp_path: Path) -> None:
        """Test that a foreign file is rejected."""
        path = tmp_path / "x.traj"
        path.write_text("hello\n")
        with pytest.raises(InvalidStructure, match="line 1"):
            read_structure(path)
