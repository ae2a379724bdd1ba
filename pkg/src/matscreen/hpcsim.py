"""
Simulated SLURM-like cluster.

This module provides:
- `ClusterSpec` / `load_cluster_spec`: partitions read from an INI file
- `suggest_resources`: ntasks/nnodes/partition/runtime for one input file,
  persisted next to it as ``<stem>.resources``
- `ClusterSimulator`: deterministic discrete-event scheduler that runs jobs
  through a calculation backend and records an event trace

Scheduling rules:
    - jobs allocate whole nodes (``nnodes * cores_per_node`` cores)
    - each partition is a strict FIFO queue; a job that does not fit blocks
      the jobs behind it
    - a job's duration is the wall time the backend reports

Trace lines look like ``"12.000 start job-0003 debug"`` (event is one of
submit, start, done, failed). Identical submissions against identical
backends give identical traces.

Example:
    ```python
    cluster = load_cluster_spec()
    for path in inputs:
        write_suggestion(suggest_resources(path, cluster), path)

    sim = ClusterSimulator(cluster, SurrogateBackend(library, seed=42))
    ids = sim.submit(inputs)
    states = sim.wait_all(ids)
    ```
"""

from __future__ import annotations

import configparser
import heapq
import logging
import math
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Protocol

from pydantic import BaseModel, Field, model_validator

from .config import data_path
from .errors import (
    ClusterError,
    JobNotFinished,
    MatscreenError,
    MissingSuggestion,
    NoFeasiblePartition,
    UnknownJobId,
)
from .qeio import OutputSummary, parse_input, parse_output

logger = logging.getLogger(__name__)

RESOURCE_HEADER = "# matscreen resource suggestion, format 1"
RESOURCE_SUFFIX = ".resources"
OUTPUT_SUFFIX = ".pwo"
RUNTIME_SAFETY_FACTOR = 3.0
RUNTIME_GRANULARITY_MINUTES = 10

SUBMISSION_TEMPLATE = """#!/bin/bash
#SBATCH --job-name={job_name}
#SBATCH --partition={partition}
#SBATCH --nodes={nnodes}
#SBATCH --ntasks={ntasks}
#SBATCH --time={hours:02d}:{minutes:02d}:00

srun pw.x -in {input_file} > {output_file}
"""


class Partition(BaseModel):
    name: str = Field(min_length=1)
    node_count: int = Field(ge=1)
    cores_per_node: int = Field(ge=1)
    max_walltime_minutes: int = Field(ge=1)

    @property
    def total_cores(self) -> int:
        return self.node_count * self.cores_per_node


class ClusterSpec(BaseModel):
    """Partitions of the simulated cluster."""

    partitions: list[Partition] = Field(min_length=1)

    @model_validator(mode="after")
    def _unique_names(self) -> ClusterSpec:
        names = [p.name for p in self.partitions]
        if len(set(names)) != len(names):
            raise ValueError(f"partition names must be unique: {names}")
        return self

    def get(self, name: str) -> Partition:
        for partition in self.partitions:
            if partition.name == name:
                return partition
        available = sorted(p.name for p in self.partitions)
        raise ClusterError(f"Unknown partition '{name}'. Available: {available}")


def load_cluster_spec(path: Path | None = None) -> ClusterSpec:
    """
    Read a cluster description.

    Each ``[partition.<name>]`` section needs node_count, cores_per_node and
    max_walltime_minutes. Other sections are ignored.
    """
    path = Path(path) if path is not None else data_path("cluster.ini")
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise FileNotFoundError(f"cluster config not found: {path}")
    partitions = []
    for section in parser.sections():
        if not section.startswith("partition."):
            continue
        values = parser[section]
        partitions.append(
            {
                "name": section.split(".", 1)[1],
                "node_count": values.get("node_count"),
                "cores_per_node": values.get("cores_per_node"),
                "max_walltime_minutes": values.get("max_walltime_minutes"),
            }
        )
    return ClusterSpec.model_validate({"partitions": partitions})


# ---------------------------------------------------------------------------
# Resource suggestions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResourceSuggestion:
    """Scheduler request for one input file."""

    input_file: str
    partition: str
    nnodes: int
    ntasks: int
    runtime_minutes: int
    script: str

    def render(self) -> str:
        lines = [
            RESOURCE_HEADER,
            f"input_file = {self.input_file}",
            f"partition = {self.partition}",
            f"nnodes = {self.nnodes}",
            f"ntasks = {self.ntasks}",
            f"runtime_minutes = {self.runtime_minutes}",
            "script:",
        ]
        return "\n".join(lines) + "\n" + self.script

    @classmethod
    def parse(cls, text: str) -> ResourceSuggestion:
        head, sep, script = text.partition("script:\n")
        lines = head.splitlines()
        if not sep or not lines or lines[0] != RESOURCE_HEADER:
            raise ClusterError("not a matscreen resource file")
        fields = {}
        for line in lines[1:]:
            key, _, value = line.partition(" = ")
            fields[key.strip()] = value.strip()
        try:
            return cls(
                input_file=fields["input_file"],
                partition=fields["partition"],
                nnodes=int(fields["nnodes"]),
                ntasks=int(fields["ntasks"]),
                runtime_minutes=int(fields["runtime_minutes"]),
                script=script,
            )
        except (KeyError, ValueError) as e:
            raise ClusterError(f"malformed resource file: {e}") from e


def resource_path(input_path: Path) -> Path:
    return Path(input_path).with_suffix(RESOURCE_SUFFIX)


def output_path(input_path: Path) -> Path:
    return Path(input_path).with_suffix(OUTPUT_SUFFIX)


def estimate_runtime_minutes(maxstep: int, c0_seconds: float, c1_seconds: float) -> int:
    """
    Requested wall time: three times the worst-case duration, rounded up to 10 minutes.

    The worst case runs all ``maxstep`` SCF iterations with one task per atom.
    """
    worst = c0_seconds + c1_seconds * maxstep
    minutes = RUNTIME_SAFETY_FACTOR * worst / 60.0
    step = RUNTIME_GRANULARITY_MINUTES
    return max(step, math.ceil(round(minutes / step, 9)) * step)


def suggest_resources(
    input_path: Path,
    cluster: ClusterSpec,
    c0_seconds: float = 30.0,
    c1_seconds: float = 2.0,
) -> ResourceSuggestion:
    """
    Suggest resources for one input file.

    ntasks is the atom count. Among partitions that fit the request, the one
    with the fewest idle cores on the allocated nodes wins; ties go to the
    first name in sort order.

    Raises:
        NoFeasiblePartition: No partition has enough nodes or wall time.
    """
    input_path = Path(input_path)
    spec, structure = parse_input(input_path)
    ntasks = structure.natoms
    runtime = estimate_runtime_minutes(spec.electron_maxstep, c0_seconds, c1_seconds)

    candidates = []
    for partition in cluster.partitions:
        nnodes = math.ceil(ntasks / partition.cores_per_node)
        if nnodes > partition.node_count or runtime > partition.max_walltime_minutes:
            continue
        waste = nnodes * partition.cores_per_node - ntasks
        candidates.append((waste, partition.name, nnodes))
    if not candidates:
        raise NoFeasiblePartition(
            f"no partition can run {input_path.name}: ntasks={ntasks}, runtime={runtime} min"
        )
    _, name, nnodes = min(candidates)

    hours, minutes = divmod(runtime, 60)
    script = SUBMISSION_TEMPLATE.format(
        job_name=input_path.stem,
        partition=name,
        nnodes=nnodes,
        ntasks=ntasks,
        hours=hours,
        minutes=minutes,
        input_file=input_path.name,
        output_file=output_path(input_path).name,
    )
    return ResourceSuggestion(
        input_file=input_path.name,
        partition=name,
        nnodes=nnodes,
        ntasks=ntasks,
        runtime_minutes=runtime,
        script=script,
    )


def write_suggestion(suggestion: ResourceSuggestion, input_path: Path) -> Path:
    path = resource_path(input_path)
    path.write_text(suggestion.render(), encoding="utf-8")
    return path


def read_suggestion(input_path: Path) -> ResourceSuggestion:
    """
    Load the persisted suggestion for an input file.

    Raises:
        MissingSuggestion: No ``.resources`` file next to the input.
    """
    path = resource_path(input_path)
    if not path.is_file():
        raise MissingSuggestion(f"no resource suggestion for {Path(input_path).name}")
    return ResourceSuggestion.parse(path.read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Scheduler
# ---------------------------------------------------------------------------


class CalculationBackend(Protocol):
    """Runs one input file and writes its output document."""

    def run(self, input_path: Path, output_path: Path, ntasks: int) -> OutputSummary: ...


class Scheduler(Protocol):
    """Submit/wait interface shared by the simulator and any real-scheduler adapter."""

    def submit(self, inputs: Sequence[Path]) -> list[str]: ...

    def wait_all(self, job_ids: Sequence[str]) -> dict[str, JobState]: ...

    def collect_energies(
        self, job_ids: Sequence[str], indices: Sequence[int]
    ) -> list[tuple[int, float]]: ...


class JobState(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"

    @property
    def terminal(self) -> bool:
        return self in (JobState.DONE, JobState.FAILED)


@dataclass
class JobRecord:
    job_id: str
    input_path: Path
    output_path: Path
    partition: str
    nnodes: int
    ntasks: int
    state: JobState = JobState.PENDING
    submit_time: float = 0.0
    start_time: float | None = None
    finish_time: float | None = None
    outcome: bool | None = None


class ClusterSimulator:
    """
    Discrete-event cluster executing jobs through a backend.

    The backend is called synchronously when a job starts; its reported wall
    time schedules the finish event. Simulated time carries over between
    batches.
    """

    def __init__(self, cluster: ClusterSpec, backend: CalculationBackend) -> None:
        self.cluster = cluster
        self.backend = backend
        self.clock = 0.0
        self.trace: list[str] = []
        self._jobs: dict[str, JobRecord] = {}
        self._queues: dict[str, deque[str]] = {p.name: deque() for p in cluster.partitions}
        self._free_nodes = {p.name: p.node_count for p in cluster.partitions}
        self._events: list[tuple[float, int, str, bool]] = []
        self._seq = 0

    def job(self, job_id: str) -> JobRecord:
        if job_id not in self._jobs:
            raise UnknownJobId(f"Unknown job id '{job_id}'")
        return self._jobs[job_id]

    def state(self, job_id: str) -> JobState:
        return self.job(job_id).state

    def _record(self, event: str, job: JobRecord) -> None:
        self.trace.append(f"{self.clock:.3f} {event} {job.job_id} {job.partition}")

    def submit(self, inputs: Sequence[Path]) -> list[str]:
        """
        Queue one job per input file, in order.

        Raises:
            MissingSuggestion: Some input has no resource file; nothing is queued.
        """
        suggestions = [(Path(p), read_suggestion(p)) for p in inputs]
        ids = []
        for path, suggestion in suggestions:
            partition = self.cluster.get(suggestion.partition)
            if suggestion.nnodes > partition.node_count:
                raise NoFeasiblePartition(
                    f"{path.name} asks for {suggestion.nnodes} nodes on {partition.name}"
                )
            job_id = f"job-{len(self._jobs) + 1:04d}"
            job = JobRecord(
                job_id=job_id,
                input_path=path,
                output_path=output_path(path),
                partition=partition.name,
                nnodes=suggestion.nnodes,
                ntasks=suggestion.ntasks,
                submit_time=self.clock,
            )
            self._jobs[job_id] = job
            self._queues[partition.name].append(job_id)
            self._record("submit", job)
            ids.append(job_id)
        for name in sorted({self._jobs[i].partition for i in ids}):
            self._dispatch(name)
        logger.info("submitted %d job(s)", len(ids))
        return ids

    def _dispatch(self, partition: str) -> None:
        queue = self._queues[partition]
        while queue and self._jobs[queue[0]].nnodes <= self._free_nodes[partition]:
            self._start(self._jobs[queue.popleft()])

    def _start(self, job: JobRecord) -> None:
        job.state = JobState.RUNNING
        job.start_time = self.clock
        self._free_nodes[job.partition] -= job.nnodes
        self._record("start", job)
        try:
            summary = self.backend.run(job.input_path, job.output_path, job.ntasks)
            converged, wall = summary.converged, summary.wall_seconds
        except MatscreenError as e:
            logger.warning("%s crashed at start: %s", job.job_id, e)
            converged, wall = False, 0.0
        self._seq += 1
        heapq.heappush(self._events, (self.clock + wall, self._seq, job.job_id, converged))

    def _step(self) -> None:
        time, _, job_id, converged = heapq.heappop(self._events)
        self.clock = time
        job = self._jobs[job_id]
        job.state = JobState.DONE if converged else JobState.FAILED
        job.finish_time = time
        job.outcome = converged
        self._free_nodes[job.partition] += job.nnodes
        self._record(job.state.value, job)
        self._dispatch(job.partition)

    def wait_all(self, job_ids: Sequence[str]) -> dict[str, JobState]:
        """
        Advance simulated time until every listed job is terminal.

        Raises:
            UnknownJobId: An id was never submitted here.
        """
        jobs = [self.job(i) for i in job_ids]
        while not all(j.state.terminal for j in jobs):
            if not self._events:
                raise ClusterError("jobs are pending but nothing is running")
            self._step()
        states = {j.job_id: j.state for j in jobs}
        failed = sum(s is JobState.FAILED for s in states.values())
        logger.info("%d job(s) finished, %d failed", len(states), failed)
        return states

    def collect_energies(
        self, job_ids: Sequence[str], indices: Sequence[int]
    ) -> list[tuple[int, float]]:
        """
        Total energies (Ry) of ``job_ids[i]`` for each index, sorted by index.

        Raises:
            JobNotFinished: A referenced job is not done.
        """
        results = []
        for index in sorted(indices):
            job = self.job(job_ids[index])
            if job.state is not JobState.DONE:
                raise JobNotFinished(
                    f"{job.job_id} ({job.input_path.name}) is {job.state.value}, not done"
                )
            results.append((index, parse_output(job.output_path).total_energy))
        return results
