"""End-to-end tests of the three workflows on the surrogate backend."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from matscreen.canvas import Canvas
from matscreen.config import RunConfig
from matscreen.errors import (
    FixtureNotFound,
    LoopLimitExceeded,
    UnknownLattice,
    UnsupportedObjective,
)
from matscreen.pipelines import (
    SNAPSHOT_NAME,
    TRACE_NAME,
    AdsorptionResult,
    EnsembleResult,
    run_adsorption,
    run_beef,
    run_lattice,
    run_sol27,
)


@pytest.fixture(scope="module")
def adsorption(tmp_path_factory: pytest.TempPathFactory) -> AdsorptionResult:
    config = RunConfig(workdir=tmp_path_factory.mktemp("adsorption"))
    return run_adsorption(config, "Pt", "111", "CO", "PBE")


@pytest.fixture(scope="module")
def ensemble(tmp_path_factory: pytest.TempPathFactory) -> EnsembleResult:
    config = RunConfig(workdir=tmp_path_factory.mktemp("beef"), ensemble_members=200)
    return run_beef(config)


class TestLattice:
    """Tests for the lattice-constant workflow."""

    def test_li(self, tmp_path: Path) -> None:
        """Test that bcc Li converges to the fixture equilibrium with 40 Ry and 0.15 1/A."""
        result = run_lattice(RunConfig(workdir=tmp_path), "Li", "bcc", 3.451)
        assert result.computed_a == pytest.approx(3.44, abs=1e-3)
        assert (result.ecutwfc, result.kspacing, result.kgrid) == (40.0, 0.15, [13, 13, 13])
        assert result.error_vs_experiment_pct == pytest.approx(0.32, abs=0.05)
        assert result.run_dir is not None
        assert (result.run_dir / SNAPSHOT_NAME).is_file()
        assert (result.run_dir / TRACE_NAME).read_text().startswith("0.000 submit job-0001")

    def test_transcripts(self, tmp_path: Path) -> None:
        """Test that every worker action starts with a canvas inspection."""
        result = run_lattice(RunConfig(workdir=tmp_path), "Li", "bcc", 3.451)
        assert result.run_dir is not None
        lines = (result.run_dir / "transcripts" / "hpc_agent.jsonl").read_text().splitlines()
        first = json.loads(lines[0])
        assert (first["agent"], first["step"], first["action"]) == (
            "hpc_agent",
            0,
            "inspect_my_canvas",
        )

    def test_snapshot_restores_results(self, tmp_path: Path) -> None:
        """Test that the saved canvas holds the published lattice constant."""
        result = run_lattice(RunConfig(workdir=tmp_path), "Li", "bcc", 3.451)
        assert result.run_dir is not None
        canvas = Canvas.restore(result.run_dir / SNAPSHOT_NAME)
        assert canvas.read("lattice_constant") == result.computed_a
        assert canvas.read("objective")["element"] == "Li"

    def test_unknown_lattice(self, tmp_path: Path) -> None:
        """Test that an unknown lattice is refused before a run directory exists."""
        with pytest.raises(UnknownLattice):
            run_lattice(RunConfig(workdir=tmp_path), "Li", "wurtzite", 3.451)
        assert list(tmp_path.iterdir()) == []

    def test_wrong_lattice_for_fixture(self, tmp_path: Path) -> None:
        """Test that the lattice must match the fixture's lattice."""
        with pytest.raises(FixtureNotFound, match="bcc"):
            run_lattice(RunConfig(workdir=tmp_path), "Li", "fcc", 4.3)

    def test_sol27_subset(self, tmp_path: Path) -> None:
        """Test that the benchmark runner keeps library order and filters by name."""
        results = run_sol27(RunConfig(workdir=tmp_path), systems=["Cu", "Li"])
        assert [r.system for r in results] == ["Li", "Cu"]
        assert all(abs(r.error_vs_expert_pct or 0.0) < 2.0 for r in results)


class TestAdsorption:
    """Tests for the adsorption-site workflow."""

    def test_delta_be(self, adsorption: AdsorptionResult) -> None:
        """Test the ontop - fcc difference and the favored site."""
        assert adsorption.delta_be == pytest.approx(0.104, abs=2e-3)
        assert adsorption.favored_site == "fcc"
        assert adsorption.literature == 0.108

    def test_configurations(self, adsorption: AdsorptionResult) -> None:
        """Test that three orientations were tried at both sites."""
        assert sorted(adsorption.energies) == [
            "fcc/flipped",
            "fcc/tilted",
            "fcc/upright",
            "ontop/flipped",
            "ontop/tilted",
            "ontop/upright",
        ]
        assert adsorption.best_fcc["configuration"] == "fcc/upright"
        assert adsorption.best_ontop["configuration"] == "ontop/upright"

    def test_repair_history(self, adsorption: AdsorptionResult) -> None:
        """Test that seven of eight production jobs failed and two repair rounds fixed them."""
        assert (adsorption.initial_failed, adsorption.initial_jobs) == (7, 8)
        assert adsorption.repair_rounds == 2

    def test_loop_limit(self, tmp_path: Path) -> None:
        """Test that one allowed repair round is not enough and the canvas is still saved."""
        config = RunConfig(workdir=tmp_path, repair_round_limit=1)
        with pytest.raises(LoopLimitExceeded):
            run_adsorption(config, "Pt", "111", "CO", "PBE")
        snapshots = list(tmp_path.glob(f"*/{SNAPSHOT_NAME}"))
        assert len(snapshots) == 1
        assert Canvas.restore(snapshots[0]).read("failed_jobs")

    def test_unknown_functional(self, tmp_path: Path) -> None:
        """Test that only the three supported functionals are accepted."""
        with pytest.raises(UnsupportedObjective):
            run_adsorption(RunConfig(workdir=tmp_path), xc="HSE06")


class TestEnsemble:
    """Tests for the ensemble workflow."""

    def test_statistics(self, ensemble: EnsembleResult) -> None:
        """Test the ensemble mean and spread of ontop - fcc."""
        assert ensemble.n == 200
        assert ensemble.mean == pytest.approx(0.120, abs=3e-3)
        assert ensemble.std == pytest.approx(0.010, rel=0.2)
        assert ensemble.route_difference < 1e-8

    def test_verdict(self, ensemble: EnsembleResult) -> None:
        """Test that fcc is favored by more than ten standard deviations."""
        assert ensemble.favored_site == "fcc"
        assert ensemble.sigma_distance > 10
        assert ensemble.verdict == "fcc favored"
        assert ensemble.repair_rounds == 2
