"""
Exception hierarchy for matscreen.

Every module raises subclasses of its own base (``CanvasError``,
``PlannerError``, ...), all rooted at ``MatscreenError``. Lookup failures also
subclass ``KeyError`` and bad arguments subclass ``ValueError`` so callers that
catch builtins keep working.
"""

from __future__ import annotations


class MatscreenError(Exception):
    """Root of all matscreen errors."""


# Canvas


class CanvasError(MatscreenError):
    """Base class for canvas errors."""


class KeyNotFound(CanvasError, KeyError):
    """Read of a key that is not on the canvas."""

    def __str__(self) -> str:
        # KeyError quotes its message; keep the text readable.
        return str(self.args[0]) if self.args else ""


class AlreadyExists(CanvasError):
    """Write to an existing key without overwrite=True."""


class ConstraintViolation(CanvasError):
    """Write rejected by the entry's access mode."""


class UnsupportedValue(CanvasError, ValueError):
    """Value outside the canvas value model."""


class CorruptSnapshot(CanvasError):
    """Snapshot file could not be restored."""

    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"{message} (line {line})")
        self.line = line


# Planner


class PlannerError(MatscreenError):
    """Base class for planner errors."""


class UnsupportedObjective(PlannerError, ValueError):
    """Objective does not belong to a known family."""


class NoActiveStep(PlannerError):
    """record_step called while no step is active."""


class LoopLimitExceeded(PlannerError):
    """Failure/repair cycle ran past the configured number of rounds."""


class WorkflowFailed(PlannerError):
    """A step failed and no planner rule can recover from it."""


# Agent runtime and tools


class AgentError(MatscreenError):
    """Base class for agent runtime errors."""


class DuplicateTool(AgentError):
    """A tool name was registered twice."""


class UnknownTool(AgentError, KeyError):
    """Tool name not present in the registry."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class ToolArgumentError(AgentError, ValueError):
    """Tool call arguments do not match the tool's schema."""


class ToolFailure(AgentError):
    """A tool implementation could not complete its work."""


class ParseFailure(AgentError, ValueError):
    """Doctor could not parse the input or output document."""


class UnknownWorker(AgentError, KeyError):
    """Worker name not present in the worker catalog."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


# Structures


class StructureError(MatscreenError):
    """Base class for structure construction errors."""


class UnknownLattice(StructureError, KeyError):
    """Lattice name not in the supported list."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class MissingParameter(StructureError, ValueError):
    """A lattice needs a parameter that was not given."""


class UnsupportedFacet(StructureError, ValueError):
    """Crystal/facet pair that cannot be built."""


class CountMismatch(StructureError, ValueError):
    """Number of symbols and positions differ."""


class SiteOutOfCell(StructureError, ValueError):
    """Adsorption site lies outside the in-plane cell footprint."""


class NonPositiveScale(StructureError, ValueError):
    """Scale factor must be > 0."""


class InvalidStructure(StructureError, ValueError):
    """StructureModel invariants do not hold."""


class InvalidSlabSpec(StructureError, ValueError):
    """Supercell, fixed-layer count or rotation axis out of range."""


class UnknownSite(StructureError, KeyError):
    """Site name not among the enumerated adsorption sites."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


# QE input/output


class QEIOError(MatscreenError):
    """Base class for input/output format errors."""


class InvariantViolation(QEIOError, ValueError):
    """CalcSpec and structure disagree, or spec invariants fail."""


class QESyntaxError(QEIOError, ValueError):
    """Malformed input or output document."""

    def __init__(self, message: str, line: int, column: int = 1) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UnknownField(QEIOError, KeyError):
    """Unrecognised namelist variable in strict parsing mode."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class MissingEnergy(QEIOError):
    """Output document without a final total energy line."""


class ElementNotInCatalog(QEIOError, KeyError):
    """No pseudopotential registered for the element."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class SingularCell(QEIOError, ValueError):
    """Cell matrix cannot be inverted."""


# Numerics


class NumericsError(MatscreenError):
    """Base class for numerical analysis errors."""


class NoConvergedValue(NumericsError):
    """Even the strictest sample misses the energy threshold."""


class NoInteriorMinimum(NumericsError):
    """Sampled energies have no interior minimum."""


class FitDiverged(NumericsError):
    """EOS least squares did not reach a valid minimum."""


class NonCubicReference(NumericsError, ValueError):
    """Lattice constant requested from a non-cubic cell."""


class LengthMismatch(NumericsError, ValueError):
    """Ensemble lists of different lengths."""


class InsufficientData(NumericsError, ValueError):
    """Too few samples, points or ensemble members for the analysis."""


class InvalidSeries(NumericsError, ValueError):
    """Convergence series with an unknown parameter, non-monotone values or non-finite energies."""


# Cluster simulation


class ClusterError(MatscreenError):
    """Base class for cluster simulation errors."""


class NoFeasiblePartition(ClusterError):
    """No partition can host the requested task count."""


class MissingSuggestion(ClusterError):
    """Job submitted without a persisted resource suggestion."""


class UnknownJobId(ClusterError, KeyError):
    """Job id never submitted to this cluster."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class JobNotFinished(ClusterError):
    """Energy requested from a job that did not finish successfully."""


# Surrogate


class SurrogateError(MatscreenError):
    """Base class for surrogate backend errors."""


class ClassMismatch(SurrogateError):
    """Fixture class does not match the structure kind."""


class EnsembleTooSmall(SurrogateError, ValueError):
    """Ensemble with fewer than two members."""


class FixtureNotFound(SurrogateError, KeyError):
    """No fixture for the requested system."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class UnknownConfiguration(SurrogateError, KeyError):
    """Site/orientation/functional combination missing from a fixture."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""
