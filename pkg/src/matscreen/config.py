"""
Run configuration and packaged data files.

This module provides:
- `RunConfig`: validated settings shared by every pipeline run
- `data_path`: location of files shipped in ``matscreen/data``
- `load_pseudopotential_catalog`: element -> pseudopotential filename

Example usage:
    ```python
    from pathlib import Path
    from matscreen.config import RunConfig

    config = RunConfig(workdir=Path("/scratch/runs"), seed=7)
    run_dir = config.run_dir("li-bcc")
    ```
"""

from __future__ import annotations

import json
from importlib.resources import files
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field


DEFAULT_WORKDIR = Path("matscreen-runs")
WORKDIR_ENVVAR = "MATSCREEN_WORKDIR"


def data_path(name: str) -> Path:
    """Path of a file shipped in the package's data directory."""
    return Path(str(files("matscreen") / "data" / name))


class RunConfig(BaseModel):
    """
    Settings for one pipeline run.

    Attributes:
        workdir: Root directory; each run gets its own subdirectory.
        cluster_config: INI file describing the simulated cluster.
        fixture_library: JSON surrogate fixture library.
        pseudopotential_catalog: JSON element -> filename catalog.
        seed: Seed for the surrogate's counter-based generator.
        repair_round_limit: Maximum number of convergence repair rounds.
        convergence_threshold: Energy threshold in meV/atom.
        eos_step: Scale step between EOS points.
        ensemble_members: Number of BEEF ensemble members.
        max_agent_steps: Maximum tool calls per worker run.
    """

    model_config = ConfigDict(frozen=True)

    workdir: Path = DEFAULT_WORKDIR
    cluster_config: Path = Field(default_factory=lambda: data_path("cluster.ini"))
    fixture_library: Path = Field(default_factory=lambda: data_path("fixtures.json"))
    pseudopotential_catalog: Path = Field(
        default_factory=lambda: data_path("pseudopotentials.json")
    )
    seed: int = 42
    repair_round_limit: int = Field(3, ge=1)
    convergence_threshold: float = Field(1.0, gt=0)
    eos_step: float = Field(0.025, ge=0.01, le=0.1)
    ensemble_members: int = Field(2000, ge=2)
    max_agent_steps: int = Field(60, gt=0)

    def run_dir(self, name: str) -> Path:
        """Create (if needed) and return ``workdir/name``."""
        path = self.workdir / name
        path.mkdir(parents=True, exist_ok=True)
        return path


def load_pseudopotential_catalog(path: Path | None = None) -> dict[str, str]:
    """
    Load the element -> pseudopotential filename catalog.

    Args:
        path: Catalog file. Defaults to the packaged GBRV-named catalog.
    """
    path = path or data_path("pseudopotentials.json")
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != "matscreen-pseudopotentials":
        raise ValueError(f"{path}: not a matscreen pseudopotential catalog")
    return dict(payload["entries"])
