"""
Worker-agent runtime.

This module provides:
- `ToolSpec` / `ParamSpec`: closed argument schemas
- `ToolRegistry`: name -> (spec, implementation)
- `run_agent`: the Thought -> Action -> Observation loop for one task
- `ScriptedPolicy`: deterministic policy built from task patterns and
  generator scripts, with an optional external decision backend

A run always starts with ``inspect_my_canvas`` executed by the runtime. After
that the policy returns either a `ToolCall` or a `FinalAnswer`. Calls to tools
outside the agent's allowlist, calls with bad arguments and tool errors come
back to the policy as ``Error: ...`` observations; they never end the run.

Example:
    ```python
    registry = build_registry()
    report = run_agent(config, "Find appropriate pseudopotential for Li",
                       registry, context, policy)
    report.status   # "ok"
    ```
"""

from __future__ import annotations

import json
import logging
import re
from collections.abc import Callable, Generator, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Literal, Protocol

from pydantic import ValidationError

from .errors import DuplicateTool, MatscreenError, ToolArgumentError, UnknownTool

if TYPE_CHECKING:
    from .canvas import Canvas
    from .config import RunConfig
    from .hpcsim import ClusterSimulator
    from .surrogate import FixtureLibrary

logger = logging.getLogger(__name__)

FAILED_PREFIX = "Job failed"
INSPECT_TOOL = "inspect_my_canvas"
OBSERVATION_LIMIT = 2000

ParamType = Literal["str", "int", "float", "bool", "list", "dict", "any"]

_TYPE_CHECKS: dict[str, Callable[[Any], bool]] = {
    "str": lambda v: isinstance(v, str),
    "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "float": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "bool": lambda v: isinstance(v, bool),
    "list": lambda v: isinstance(v, (list, tuple)),
    "dict": lambda v: isinstance(v, dict),
    "any": lambda v: True,
}


@dataclass(frozen=True)
class ParamSpec:
    type: ParamType
    required: bool = True
    default: Any = None
    doc: str = ""


@dataclass(frozen=True)
class ToolSpec:
    """Name, closed parameter schema, result type and doc string of a tool."""

    name: str
    params: dict[str, ParamSpec]
    result: str
    doc: str

    def validate(self, args: dict[str, Any]) -> dict[str, Any]:
        """
        Check call arguments and fill defaults.

        Raises:
            ToolArgumentError: Unknown, missing or mistyped arguments.
        """
        unknown = sorted(set(args) - set(self.params))
        if unknown:
            raise ToolArgumentError(
                f"{self.name} got unknown argument(s) {unknown}; accepted: {sorted(self.params)}"
            )
        bound: dict[str, Any] = {}
        for name, param in self.params.items():
            if name not in args:
                if param.required:
                    raise ToolArgumentError(f"{self.name} is missing required argument '{name}'")
                bound[name] = param.default
                continue
            value = args[name]
            if not _TYPE_CHECKS[param.type](value):
                raise ToolArgumentError(
                    f"{self.name} argument '{name}' must be {param.type}, "
                    f"got {type(value).__name__}"
                )
            bound[name] = float(value) if param.type == "float" else value
        return bound


ToolImpl = Callable[..., Any]


class ToolRegistry:
    """Tools available to agents. Fill it at startup; agents only read it."""

    def __init__(self) -> None:
        self._tools: dict[str, tuple[ToolSpec, ToolImpl]] = {}

    def register(self, spec: ToolSpec, impl: ToolImpl) -> ToolRegistry:
        if spec.name in self._tools:
            raise DuplicateTool(f"Tool '{spec.name}' is already registered")
        self._tools[spec.name] = (spec, impl)
        return self

    def get(self, name: str) -> tuple[ToolSpec, ToolImpl]:
        if name not in self._tools:
            raise UnknownTool(f"Unknown tool '{name}'. Available: {self.names()}")
        return self._tools[name]

    def names(self) -> list[str]:
        return sorted(self._tools)

    def __contains__(self, name: object) -> bool:
        return name in self._tools

    def __len__(self) -> int:
        return len(self._tools)


@dataclass
class ToolContext:
    """Everything a tool implementation may touch during a run."""

    canvas: Canvas
    calc_dir: Path
    config: RunConfig
    cluster: ClusterSimulator
    library: FixtureLibrary
    catalog: dict[str, str]
    actor: str = "user"
    jobs: dict[str, str] = field(default_factory=dict)

    def path(self, name: str) -> Path:
        """Resolve a file name from the canvas inside the run directory."""
        return self.calc_dir / Path(name).name


# ---------------------------------------------------------------------------
# Policies and reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AgentConfig:
    """
    A worker agent: prompt blocks, tool allowlist and step cap.

    The prompt blocks are carried as metadata; scripted policies do not read them.
    """

    name: str
    role: str
    objective: str
    instructions: str
    requirements: str
    tools: tuple[str, ...]
    max_steps: int = 60

    def __post_init__(self) -> None:
        if self.max_steps <= 0:
            raise ValueError("max_steps must be > 0")


@dataclass(frozen=True)
class ToolCall:
    thought: str
    tool: str
    args: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class FinalAnswer:
    status: Literal["ok", "failed"]
    summary: str
    artifacts: tuple[str, ...] = ()


@dataclass(frozen=True)
class Observation:
    tool: str
    ok: bool
    text: str
    value: Any = None


@dataclass(frozen=True)
class AgentReport:
    """Outcome of one worker run. Failed summaries start with "Job failed"."""

    status: Literal["ok", "failed"]
    summary: str
    artifacts: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.status == "failed" and not self.summary.startswith(FAILED_PREFIX):
            object.__setattr__(self, "summary", f"{FAILED_PREFIX}: {self.summary}")


Decision = ToolCall | FinalAnswer


class AgentPolicy(Protocol):
    def begin(self, config: AgentConfig, task: str) -> None: ...

    def decide(self, observation: Observation) -> Decision: ...


class DecisionBackend(Protocol):
    """External decision maker (for example a language model) consulted before the script."""

    def decide(self, config: AgentConfig, task: str, observation: Observation) -> Decision | None:
        ...


Script = Generator[ToolCall, Observation, FinalAnswer]
ScriptFactory = Callable[[str, re.Match[str]], Script]


class ScriptedPolicy:
    """
    Policy that picks a generator script by matching the task text.

    A script yields tool calls, receives each observation through ``send``
    and returns its `FinalAnswer`. The first pattern that matches wins.
    """

    def __init__(
        self,
        scripts: Sequence[tuple[str, ScriptFactory]],
        backend: DecisionBackend | None = None,
    ) -> None:
        self.scripts = [(re.compile(p, re.IGNORECASE), f) for p, f in scripts]
        self.backend = backend
        self._config: AgentConfig | None = None
        self._task = ""
        self._script: Script | None = None
        self._started = False

    def begin(self, config: AgentConfig, task: str) -> None:
        self._config = config
        self._task = task
        self._started = False
        self._script = None
        for pattern, factory in self.scripts:
            match = pattern.search(task)
            if match:
                self._script = factory(task, match)
                break

    def decide(self, observation: Observation) -> Decision:
        if self.backend is not None and self._config is not None:
            decision = self.backend.decide(self._config, self._task, observation)
            if decision is not None:
                return decision
        if self._script is None:
            return FinalAnswer("failed", f"{FAILED_PREFIX}: no procedure for task '{self._task}'")
        try:
            if not self._started:
                self._started = True
                return next(self._script)
            return self._script.send(observation)
        except StopIteration as stop:
            answer = stop.value
            if not isinstance(answer, FinalAnswer):
                return FinalAnswer("failed", f"{FAILED_PREFIX}: script ended without an answer")
            return answer


# ---------------------------------------------------------------------------
# Runtime
# ---------------------------------------------------------------------------


def _render(value: Any) -> str:
    if isinstance(value, str):
        return value
    try:
        text = json.dumps(value, sort_keys=True, default=str)
    except (TypeError, ValueError):
        text = repr(value)
    return text if len(text) <= OBSERVATION_LIMIT else text[: OBSERVATION_LIMIT - 3] + "..."


def execute(
    call: ToolCall, config: AgentConfig, registry: ToolRegistry, ctx: ToolContext
) -> Observation:
    """Run one tool call; every failure becomes an ``Error: ...`` observation."""
    if call.tool not in config.tools:
        return Observation(
            call.tool,
            False,
            f"Error: tool '{call.tool}' is not available to {config.name}. "
            f"Allowed: {sorted(config.tools)}",
        )
    try:
        spec, impl = registry.get(call.tool)
        args = spec.validate(dict(call.args))
        value = impl(ctx, **args)
    except (MatscreenError, ValidationError, OSError) as e:
        return Observation(call.tool, False, f"Error: {type(e).__name__}: {e}")
    return Observation(call.tool, True, _render(value), value)


def run_agent(
    config: AgentConfig,
    task: str,
    registry: ToolRegistry,
    ctx: ToolContext,
    policy: AgentPolicy,
    transcript: Path | None = None,
) -> AgentReport:
    """
    Execute one task with a worker agent.

    Args:
        config: The worker's prompt blocks, allowlist and step cap.
        task: Task text, usually a plan step description.
        registry: Registered tools.
        ctx: Shared run context; ``ctx.actor`` is set to the worker name.
        policy: Chooses tool calls and the final answer.
        transcript: JSON-lines file the thought/action/observation records are appended to.

    Raises:
        UnknownTool: An allowlisted tool is not registered.
    """
    for name in config.tools:
        registry.get(name)
    ctx.actor = config.name
    records: list[dict[str, Any]] = []

    def log(step: int, call: ToolCall, obs: Observation) -> None:
        records.append(
            {
                "agent": config.name,
                "step": step,
                "thought": call.thought,
                "action": call.tool,
                "args": call.args,
                "ok": obs.ok,
                "observation": obs.text[:OBSERVATION_LIMIT],
            }
        )

    inspect = ToolCall("Inspect the canvas before doing anything else.", INSPECT_TOOL)
    observation = execute(inspect, config, registry, ctx)
    log(0, inspect, observation)

    policy.begin(config, task)
    report: AgentReport | None = None
    for step in range(1, config.max_steps + 1):
        decision = policy.decide(observation)
        if isinstance(decision, FinalAnswer):
            report = AgentReport(decision.status, decision.summary, decision.artifacts)
            break
        observation = execute(decision, config, registry, ctx)
        if not observation.ok:
            logger.info("%s: %s", config.name, observation.text)
        log(step, decision, observation)
    if report is None:
        report = AgentReport(
            "failed", f"{FAILED_PREFIX}: max steps ({config.max_steps}) reached without an answer"
        )

    records.append(
        {"agent": config.name, "task": task, "status": report.status, "summary": report.summary}
    )
    if transcript is not None:
        transcript.parent.mkdir(parents=True, exist_ok=True)
        with transcript.open("a", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record, sort_keys=True, default=str) + "\n")
    logger.info("%s finished '%s': %s", config.name, task, report.status)
    return report
