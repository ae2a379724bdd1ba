"""Tests for input/output documents, k-point grids and the pseudopotential catalog."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from matscreen.errors import (
    ElementNotInCatalog,
    InvariantViolation,
    MissingEnergy,
    QESyntaxError,
    SingularCell,
    UnknownField,
)
from matscreen.qeio import (
    CalcSpec,
    OutputSummary,
    find_pseudopotential,
    kgrid,
    parse_input,
    parse_input_text,
    parse_output,
    parse_output_text,
    render_input,
    render_output,
    write_input,
    write_output,
)
from matscreen.structlab import StructureModel, build_bulk, build_surface

PSEUDOS = {"Li": "li_pbe_v1.4.uspp.F.UPF", "Pt": "pt_pbe_v1.4.uspp.F.UPF"}


@pytest.fixture
def li() -> StructureModel:
    return build_bulk("Li", "bcc", 3.451)


@pytest.fixture
def li_spec(li: StructureModel) -> CalcSpec:
    return CalcSpec.for_structure(li, PSEUDOS, ecutwfc=40.0, kspacing=0.15)


class TestCatalog:
    """Tests for pseudopotential lookup."""

    def test_known_element(self) -> None:
        """Test that a catalogued element returns its file name."""
        assert find_pseudopotential("Li", PSEUDOS) == "li_pbe_v1.4.uspp.F.UPF"

    def test_unknown_element(self) -> None:
        """Test that a missing element lists the catalogue."""
        with pytest.raises(ElementNotInCatalog, match="Available"):
            find_pseudopotential("Og", PSEUDOS)


class TestKgrid:
    """Tests for Monkhorst-Pack grids."""

    def test_bcc_li(self, li: StructureModel) -> None:
        """Test ceil(|b|/kspacing) on a cubic cell."""
        assert kgrid(li.cell, 0.15) == [13, 13, 13]

    def test_coarser_spacing(self, li: StructureModel) -> None:
        """Test that a larger spacing gives fewer points."""
        assert kgrid(li.cell, 0.25) == [8, 8, 8]

    def test_non_periodic_axis(self) -> None:
        """Test that the slab normal gets a single k-point."""
        slab, _ = build_surface("Pt", "fcc", 3.92, "111", [2, 2, 4])
        assert kgrid(slab.cell, 0.15, slab.pbc)[2] == 1

    def test_singular_cell(self) -> None:
        """Test that a singular cell is rejected."""
        with pytest.raises(SingularCell):
            kgrid(np.zeros((3, 3)), 0.15)


class TestCalcSpec:
    """Tests for the CalcSpec model."""

    def test_default_ecutrho(self, li_spec: CalcSpec) -> None:
        """Test that an unset ecutrho means 8 x ecutwfc."""
        assert li_spec.effective_ecutrho == pytest.approx(320.0)

    def test_ensemble_requires_beef(self) -> None:
        """Test that ensemble runs require the BEEF-vdW functional."""
        with pytest.raises(ValidationError):
            CalcSpec(calculation="ensemble", input_dft="PBE")

    def test_missing_pseudopotential(self, li: StructureModel) -> None:
        """Test that every species needs a pseudopotential."""
        with pytest.raises(InvariantViolation):
            CalcSpec.for_structure(li, {"Pt": "pt.UPF"})

    def test_attempt_default(self, li_spec: CalcSpec) -> None:
        """Test that the repair attempt defaults to 1."""
        assert li_spec.attempt == 1

    @pytest.mark.parametrize("key", ["kspacing", "ecutrho", "structure_name", "ecutwfc"])
    def test_extras_cannot_shadow_fields(self, li: StructureModel, key: str) -> None:
        """Test that extras keys colliding with header or namelist fields are rejected."""
        with pytest.raises(ValidationError, match="collides"):
            CalcSpec.for_structure(li, PSEUDOS, extras={key: 0.3})

    def test_extras_line_break(self, li: StructureModel) -> None:
        """Test that string extras spanning lines are rejected up front."""
        with pytest.raises(ValidationError, match="line breaks"):
            CalcSpec.for_structure(li, PSEUDOS, extras={"note": "line\nbreak"})

    def test_extras_non_finite(self, li: StructureModel) -> None:
        """Test that float extras must be finite."""
        with pytest.raises(ValidationError, match="finite"):
            CalcSpec.for_structure(li, PSEUDOS, extras={"tstress_scale": float("inf")})

    def test_writer_rechecks_copied_extras(self, li: StructureModel, li_spec: CalcSpec) -> None:
        """Test that extras slipped in through model_copy are caught by the writer."""
        spec = li_spec.model_copy(update={"extras": {"kspacing": 0.3}})
        with pytest.raises(InvariantViolation, match="collides"):
            render_input(spec, li)


class TestInputDocuments:
    """Tests for writing and parsing inputs."""

    def test_roundtrip(self, li: StructureModel, li_spec: CalcSpec, tmp_path: Path) -> None:
        """Test that parse(write(spec, structure)) gives back both."""
        spec = li_spec.model_copy(
            update={"mixing_beta": 0.3, "extras": {"attempt": 3, "david_ndim": 4}}
        )
        path = write_input(spec, li, tmp_path / "Li.pwi")
        parsed_spec, parsed = parse_input(path)
        assert parsed_spec == spec
        assert parsed == li

    def test_slab_roundtrip_keeps_constraints(self, tmp_path: Path) -> None:
        """Test that fixed atoms and slab periodicity survive a write/parse cycle."""
        slab, _ = build_surface("Pt", "fcc", 3.92, "111", [2, 2, 4])
        spec = CalcSpec.for_structure(slab, PSEUDOS)
        _, parsed = parse_input(write_input(spec, slab, tmp_path / "slab.pwi"))
        assert parsed.pbc == (True, True, False)
        assert parsed.fixed_indices == slab.fixed_indices
        assert np.array_equal(parsed.positions, slab.positions)

    def test_deterministic(self, li: StructureModel, li_spec: CalcSpec) -> None:
        """Test that rendering twice gives identical text."""
        assert render_input(li_spec, li) == render_input(li_spec, li)

    def test_suffix_required(self, li: StructureModel, li_spec: CalcSpec, tmp_path: Path) -> None:
        """Test that input files must end in .pwi."""
        with pytest.raises(InvariantViolation):
            write_input(li_spec, li, tmp_path / "Li.in")

    def test_nat_mismatch(self, li: StructureModel, li_spec: CalcSpec) -> None:
        """Test that nat must match the structure."""
        with pytest.raises(InvariantViolation):
            render_input(li_spec.model_copy(update={"nat": 3}), li)

    def test_cutoff_warning(
        self, li: StructureModel, li_spec: CalcSpec, caplog: pytest.LogCaptureFixture
    ) -> None:
        """Test that a cutoff outside the guidance range is logged."""
        with caplog.at_level(logging.WARNING, logger="matscreen.qeio"):
            render_input(li_spec.model_copy(update={"ecutwfc": 120.0}), li)
        assert "outside the recommended" in caplog.text

    def test_bad_value_reports_line(self, li: StructureModel, li_spec: CalcSpec) -> None:
        """Test that a malformed value reports its line number."""
        lines = render_input(li_spec, li).splitlines()
        index = lines.index("    ecutwfc = 40.0")
        lines[index] = "    ecutwfc = forty"
        with pytest.raises(QESyntaxError) as excinfo:
            parse_input_text("\n".join(lines))
        assert excinfo.value.line == index + 1

    def test_unclosed_namelist(self) -> None:
        """Test that a namelist without '/' is rejected."""
        with pytest.raises(QESyntaxError, match="not closed"):
            parse_input_text("&CONTROL\n    calculation = 'scf'\n")

    def test_strict_unknown_variable(self, li: StructureModel, li_spec: CalcSpec) -> None:
        """Test that strict parsing rejects unknown namelist variables."""
        text = render_input(li_spec, li).replace("&SYSTEM\n", "&SYSTEM\n    lda_plus_u = .true.\n")
        assert parse_input_text(text)[0].extras["lda_plus_u"] is True
        with pytest.raises(UnknownField):
            parse_input_text(text, strict=True)


class TestOutputDocuments:
    """Tests for surrogate output documents."""

    def test_roundtrip(self, tmp_path: Path) -> None:
        """Test that parse(write(summary)) gives back the summary."""
        summary = OutputSummary(
            total_energy=-29.6,
            converged=False,
            n_scf=3,
            accuracy_series=[0.1, 0.01, 0.001],
            ensemble_energies=[-29.6, -29.61],
            wall_seconds=274.0,
            system="Li-bcc",
        )
        assert parse_output(write_output(summary, tmp_path / "Li.pwo")) == summary

    def test_failure_marker(self) -> None:
        """Test that the non-convergence marker sets converged=False."""
        text = render_output(OutputSummary(-1.0, False, 1, [0.5]))
        assert "convergence NOT achieved" in text
        assert parse_output_text(text).converged is False

    def test_missing_energy(self) -> None:
        """Test that an output without a total energy is rejected."""
        with pytest.raises(MissingEnergy):
            parse_output_text("matscreen-surrogate-output v1\niter 1 accuracy 0.1\n")

    def test_truncated_ensemble(self) -> None:
        """Test that a short ensemble block is rejected."""
        text = "matscreen-surrogate-output v1\n! total energy = -1.0 Ry\nENSEMBLE 3\n-1.0\n"
        with pytest.raises(QESyntaxError):
            parse_output_text(text)

    def test_wrong_header(self) -> None:
        """Test that foreign documents are rejected."""
        with pytest.raises(QESyntaxError):
            parse_output_text("hello\n")


EXTRA_KEYS = ["attempt", "scale", "note", "nspin", "david_ndim", "tprnfor", "verbosity"]
PERIODICITIES = [(True, True, True), (True, True, False), (False, False, False)]


def random_structure(rng: np.random.Generator, index: int) -> StructureModel:
    natoms = int(rng.integers(1, 9))
    a = float(rng.uniform(3.0, 8.0))
    cell = np.eye(3) * a + rng.uniform(-0.1, 0.1, (3, 3))
    fixed = [i for i in range(natoms) if rng.random() < 0.3]
    return StructureModel(
        symbols=[str(s) for s in rng.choice(["Li", "Pt"], natoms)],
        positions=rng.uniform(0.0, a, (natoms, 3)),
        cell=cell,
        pbc=PERIODICITIES[int(rng.integers(len(PERIODICITIES)))],
        fixed_indices=frozenset(fixed),
        name=f"random{index}" if rng.random() < 0.5 else "",
    )


def random_extra(rng: np.random.Generator) -> bool | int | float | str:
    kind = int(rng.integers(4))
    if kind == 0:
        return bool(rng.random() < 0.5)
    if kind == 1:
        return int(rng.integers(-5, 100))
    if kind == 2:
        return float(rng.normal() * 10.0 ** int(rng.integers(-8, 4)))
    return "".join(str(c) for c in rng.choice(list("abcxyz_-"), int(rng.integers(1, 8))))


def random_spec(rng: np.random.Generator, structure: StructureModel, index: int) -> CalcSpec:
    dft = str(rng.choice(["LDA", "PBE", "BEEF-vdW"]))
    ecutwfc = float(rng.uniform(25.0, 100.0))
    extras = {str(k): random_extra(rng) for k in rng.choice(EXTRA_KEYS, int(rng.integers(0, 4)))}
    return CalcSpec.for_structure(
        structure,
        PSEUDOS,
        calculation="ensemble" if dft == "BEEF-vdW" and rng.random() < 0.5 else "scf",
        prefix=f"job{index}",
        ecutwfc=ecutwfc,
        ecutrho=None if rng.random() < 0.5 else float(ecutwfc * rng.uniform(4.0, 12.0)),
        degauss=float(rng.uniform(0.005, 0.05)),
        conv_thr=float(10.0 ** -rng.uniform(4.0, 10.0)),
        electron_maxstep=int(rng.integers(50, 500)),
        mixing_beta=float(rng.uniform(0.05, 1.0)),
        mixing_mode=str(rng.choice(["plain", "local-TF", "TF"])),
        kspacing=float(rng.uniform(0.05, 0.5)),
        input_dft=dft,
        extras=extras,
    )


class TestRandomizedRoundTrip:
    """Seeded round trips over random specs and structures."""

    def test_parse_inverts_render(self) -> None:
        """Test that 500 random pairs parse back field for field and render byte-identically."""
        rng = np.random.default_rng(20240611)
        for index in range(500):
            structure = random_structure(rng, index)
            spec = random_spec(rng, structure, index)
            text = render_input(spec, structure)
            assert render_input(spec, structure) == text
            parsed_spec, parsed = parse_input_text(text)
            assert parsed_spec == spec, index
            assert parsed == structure, index
