"""
matscreen - Autonomous DFT screening workflows on a simulated cluster.

A planner splits a natural-language objective into steps and hands each step
to a worker agent (DFT inputs and analysis, or job submission). Agents share
state through an audited canvas. Calculations run on a deterministic
surrogate behind a simulated batch scheduler, so whole workflows, including
their convergence failures and repair rounds, replay exactly from a seed.

Typical workflow:
    1. Pick a pipeline: lattice constants, adsorption configurations, or
       ensemble uncertainty
    2. Run it with a `RunConfig` (work directory, seed, limits)
    3. Read the result object, the reports, or the saved canvas

Example:
    ```python
    from pathlib import Path

    from matscreen import RunConfig, run_lattice

    config = RunConfig(workdir=Path("runs"))
    result = run_lattice(config, "Li", "bcc", 3.451)
    print(result.computed_a, result.error_vs_expert_pct)
    ```

Modules:
    canvas: Audited shared key-value store
    structlab: Bulk, slab and adsorbate structure builders
    qeio: Pseudopotential catalog and plane-wave input/output documents
    numerics: Convergence selection and equation-of-state fitting
    surrogate: Deterministic calculation backend driven by fixtures
    hpcsim: Resource suggestions and the simulated batch scheduler
    doctor: Convergence failure suggestions
    agentcore: Tool registry and the agent loop
    tools: The tool library exposed to agents
    planner: Plans, step records and replanning
    workers: Worker catalog and their scripted procedures
    pipelines: End-to-end lattice, adsorption and ensemble workflows
    reports: Text and CSV reports
    validation: Fixture, cluster and benchmark checks
    cli: Typer-based command-line interface
"""

from .canvas import Canvas, CanvasStats, EntryMode
from .config import RunConfig
from .errors import MatscreenError
from .pipelines import (
    AdsorptionResult,
    EnsembleResult,
    LatticeResult,
    Workflow,
    run_adsorption,
    run_beef,
    run_lattice,
    run_sol27,
)
from .validation import ValidationCheck, ValidationResult, validate_installation

__version__ = "0.1.0"

__all__ = [
    # Version
    "__version__",
    # Canvas
    "Canvas",
    "CanvasStats",
    "EntryMode",
    # Config and errors
    "MatscreenError",
    "RunConfig",
    # Pipelines
    "AdsorptionResult",
    "EnsembleResult",
    "LatticeResult",
    "Workflow",
    "run_adsorption",
    "run_beef",
    "run_lattice",
    "run_sol27",
    # Validation
    "ValidationCheck",
    "ValidationResult",
    "validate_installation",
]
