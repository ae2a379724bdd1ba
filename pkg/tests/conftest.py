"""Shared fixtures: a run context wired to the packaged fixture library and cluster."""

from __future__ import annotations

from pathlib import Path

import pytest

from matscreen.agentcore import ToolContext
from matscreen.canvas import Canvas
from matscreen.config import RunConfig, load_pseudopotential_catalog
from matscreen.hpcsim import ClusterSimulator, load_cluster_spec
from matscreen.surrogate import SurrogateBackend, load_fixture_library


@pytest.fixture
def tool_context(tmp_path: Path) -> ToolContext:
    """Fresh canvas, calc directory and simulated cluster for one test."""
    config = RunConfig(workdir=tmp_path)
    library = load_fixture_library()
    backend = SurrogateBackend(library, seed=config.seed, ensemble_members=200)
    calc_dir = tmp_path / "calc"
    calc_dir.mkdir()
    return ToolContext(
        canvas=Canvas(),
        calc_dir=calc_dir,
        config=config,
        cluster=ClusterSimulator(load_cluster_spec(), backend),
        library=library,
        catalog=load_pseudopotential_catalog(),
        actor="dft_agent",
    )
