"""Tests for the shared canvas."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
import pytest

from matscreen.canvas import DEFAULT_KEY_MODES, Canvas, CanvasStats, EntryKind, EntryMode
from matscreen.errors import (
    AlreadyExists,
    ConstraintViolation,
    CorruptSnapshot,
    KeyNotFound,
    UnsupportedValue,
)


def fixed_clock() -> str:
    return "2024-01-01T00:00:00.000000+00:00"


@pytest.fixture
def canvas() -> Canvas:
    return Canvas(clock=fixed_clock)


class TestReadWrite:
    """Tests for plain writes and reads."""

    def test_write_then_read(self, canvas: Canvas) -> None:
        """Test that a written value reads back unchanged."""
        canvas.write("lattice", "bcc", actor="dft_agent")
        assert canvas.read("lattice") == "bcc"
        assert canvas.inspect() == ["lattice"]

    def test_read_missing_key(self, canvas: Canvas) -> None:
        """Test that a missing key names the inspect remedy."""
        with pytest.raises(KeyNotFound, match="inspect"):
            canvas.read("nothing")

    def test_get_default(self, canvas: Canvas) -> None:
        """Test that get returns the default for a missing key."""
        assert canvas.get("nothing", 7) == 7

    def test_existing_key_needs_overwrite(self, canvas: Canvas) -> None:
        """Test that rewriting without overwrite keeps the old value."""
        canvas.write("a", 1)
        with pytest.raises(AlreadyExists):
            canvas.write("a", 2)
        assert canvas.read("a") == 1
        canvas.write("a", 2, overwrite=True)
        assert canvas.read("a") == 2

    def test_read_returns_copy(self, canvas: Canvas) -> None:
        """Test that mutating a read value does not change the canvas."""
        canvas.write("jobs", ["a.pwi"])
        jobs = canvas.read("jobs")
        jobs.append("b.pwi")
        assert canvas.read("jobs") == ["a.pwi"]

    def test_inspect_is_sorted(self, canvas: Canvas) -> None:
        """Test that inspect lists keys in sorted order."""
        canvas.write("b", 1)
        canvas.write("a", 2)
        assert canvas.inspect() == ["a", "b"]

    @pytest.mark.parametrize("value", [None, (1, 2), {1: "a"}, {"x": None}, object()])
    def test_unsupported_values(self, canvas: Canvas, value: object) -> None:
        """Test that values outside the value model are rejected and logged."""
        with pytest.raises(UnsupportedValue):
            canvas.write("k", value)
        assert "k" not in canvas
        assert canvas.log[-1].op == "rejected"

    def test_empty_key(self, canvas: Canvas) -> None:
        """Test that an empty key is rejected."""
        with pytest.raises(UnsupportedValue):
            canvas.write("", 1)


class TestModes:
    """Tests for entry access modes."""

    def test_objective_is_read_only(self, canvas: Canvas) -> None:
        """Test that the objective cannot be overwritten once written."""
        canvas.write("objective", "Find the lattice constant")
        with pytest.raises(ConstraintViolation, match="read-only"):
            canvas.write("objective", "other", overwrite=True)
        assert canvas.read("objective") == "Find the lattice constant"

    def test_plan_is_protected(self, canvas: Canvas) -> None:
        """Test that only the creator may overwrite a protected entry."""
        canvas.write("plan", ["step 1"], actor="planner")
        with pytest.raises(ConstraintViolation, match="planner"):
            canvas.write("plan", ["hijack"], overwrite=True, actor="dft_agent")
        canvas.write("plan", ["step 1", "step 2"], overwrite=True, actor="planner")
        assert canvas.read("plan") == ["step 1", "step 2"]

    def test_job_list_schema(self, canvas: Canvas) -> None:
        """Test that job_list only accepts lists of file names."""
        canvas.write("job_list", ["Li.pwi", "Li_2.pwi"])
        with pytest.raises(ConstraintViolation):
            canvas.write("job_list", ["not a file"], overwrite=True)
        with pytest.raises(ConstraintViolation):
            canvas.write("job_list", "Li.pwi", overwrite=True)
        canvas.write("job_list", [], overwrite=True)
        assert canvas.read("job_list") == []

    def test_explicit_mode(self, canvas: Canvas) -> None:
        """Test that an explicit mode applies to a new key."""
        canvas.write("threshold", 1.0, mode=EntryMode.format_restricted("positive-number"))
        with pytest.raises(ConstraintViolation):
            canvas.write("threshold", -1.0, overwrite=True)
        assert canvas.entry("threshold").mode.kind is EntryKind.FORMAT_RESTRICTED

    def test_unknown_schema(self) -> None:
        """Test that an unregistered schema cannot be used."""
        with pytest.raises(KeyError):
            EntryMode.format_restricted("no-such-schema")


class TestAuditLog:
    """Tests for the audit log and statistics."""

    def test_every_attempt_is_logged(self, canvas: Canvas) -> None:
        """Test that writes, overwrites and rejections each get a record."""
        canvas.write("a", 1, actor="user")
        canvas.write("a", 2, overwrite=True, actor="dft_agent")
        with pytest.raises(AlreadyExists):
            canvas.write("a", 3, actor="hpc_agent")
        ops = [r.op for r in canvas.log]
        assert ops == ["write", "overwrite", "rejected"]
        assert [r.seq for r in canvas.log] == [1, 2, 3]

    def test_stats(self, canvas: Canvas) -> None:
        """Test that stats count operations per kind and actor."""
        canvas.write("a", 1, actor="user")
        canvas.write("a", 2, overwrite=True, actor="dft_agent")
        with pytest.raises(AlreadyExists):
            canvas.write("a", 3, actor="dft_agent")
        stats = CanvasStats.from_log(canvas.log)
        assert (stats.writes, stats.overwrites, stats.rejected) == (1, 1, 1)
        assert stats.by_actor == {"user": 1, "dft_agent": 2}

    def test_long_summary_is_bounded(self, canvas: Canvas) -> None:
        """Test that log summaries are truncated."""
        canvas.write("big", "x" * 1000)
        assert len(canvas.log[0].summary) <= 200


class TestSnapshot:
    """Tests for snapshot and restore."""

    def test_restore_reproduces_state(self, canvas: Canvas, tmp_path: Path) -> None:
        """Test that a restored canvas has the same entries, modes and log."""
        canvas.write("objective", "goal")
        canvas.write("record", {"a": [1, 2.5, True], "path": Path("Li.pwi")})
        canvas.write("plan", ["s"], actor="planner")
        path = canvas.snapshot(tmp_path / "canvas.snapshot")

        restored = Canvas.restore(path, clock=fixed_clock)
        assert restored.inspect() == canvas.inspect()
        assert restored.read("record") == {"a": [1, 2.5, True], "path": Path("Li.pwi")}
        assert restored.log == canvas.log
        with pytest.raises(ConstraintViolation):
            restored.write("plan", ["x"], overwrite=True, actor="user")

    def test_snapshot_is_deterministic(self, canvas: Canvas, tmp_path: Path) -> None:
        """Test that snapshotting twice gives identical bytes."""
        canvas.write("a", 1)
        first = canvas.snapshot(tmp_path / "one").read_bytes()
        second = canvas.snapshot(tmp_path / "two").read_bytes()
        assert first == second

    def test_missing_snapshot(self, tmp_path: Path) -> None:
        """Test that restoring a missing file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            Canvas.restore(tmp_path / "absent")

    def test_truncated_snapshot(self, canvas: Canvas, tmp_path: Path) -> None:
        """Test that a snapshot without its end record is corrupt."""
        canvas.write("a", 1)
        path = canvas.snapshot(tmp_path / "canvas.snapshot")
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(CorruptSnapshot):
            Canvas.restore(path)

    def test_bad_record_line_number(self, canvas: Canvas, tmp_path: Path) -> None:
        """Test that a malformed record reports its line number."""
        canvas.write("a", 1)
        path = canvas.snapshot(tmp_path / "canvas.snapshot")
        lines = path.read_text().splitlines()
        lines[1] = "entry {not json"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(CorruptSnapshot) as excinfo:
            Canvas.restore(path)
        assert excinfo.value.line == 2

    def test_dump_lists_modes(self, canvas: Canvas) -> None:
        """Test that dump shows each key with its mode label."""
        canvas.write("job_list", ["a.pwi"])
        assert 'job_list [format-restricted(filename-list)] = {"l":[{"s":"a.pwi"}]}' in (
            canvas.dump()
        )


KEYS = ("a", "b", "c", "energy", "objective", "plan", "job_list", "failed_jobs")
ACTORS = ("user", "planner", "dft_agent", "hpc_agent")


def random_value(rng: np.random.Generator) -> Any:
    kind = int(rng.integers(0, 7))
    if kind == 0:
        return int(rng.integers(-5, 50))
    if kind == 1:
        return float(rng.uniform(-10.0, 10.0))
    if kind == 2:
        return "".join(rng.choice(list("abcxyz "), int(rng.integers(0, 8))))
    if kind == 3:
        return bool(rng.random() < 0.5)
    if kind == 4:
        return [f"job{int(i)}.pwi" for i in rng.integers(0, 9, int(rng.integers(0, 4)))]
    if kind == 5:
        return Path(f"runs/job{int(rng.integers(0, 9))}.pwo")
    return {"n": int(rng.integers(0, 5)), "tags": ["x", 1.5, False]}


class TestRandomizedOperations:
    """Randomized operation sequences checked against a plain dictionary model."""

    def test_operation_sequence(self, tmp_path: Path) -> None:
        """Test reads, overwrite protection, log completeness and restores over 1000 operations."""
        rng = np.random.default_rng(8080)
        canvas = Canvas(clock=fixed_clock)
        model: dict[str, tuple[Any, EntryMode, str]] = {}
        expected_ops: list[tuple[str, str, str]] = []

        for step in range(1000):
            key = str(rng.choice(KEYS))
            actor = str(rng.choice(ACTORS))
            value = random_value(rng)
            overwrite = bool(rng.random() < 0.6)

            if key not in model:
                mode = DEFAULT_KEY_MODES.get(key, EntryMode())
                outcome = "write" if mode.accepts(value) else "rejected"
            else:
                _, mode, creator = model[key]
                if not overwrite:
                    outcome = "exists"
                elif mode.kind is EntryKind.READ_ONLY:
                    outcome = "rejected"
                elif mode.kind is EntryKind.PROTECTED and actor != creator:
                    outcome = "rejected"
                elif not mode.accepts(value):
                    outcome = "rejected"
                else:
                    outcome = "overwrite"

            if outcome == "exists":
                with pytest.raises(AlreadyExists):
                    canvas.write(key, value, overwrite=overwrite, actor=actor)
                expected_ops.append(("rejected", actor, key))
            elif outcome == "rejected":
                with pytest.raises(ConstraintViolation):
                    canvas.write(key, value, overwrite=overwrite, actor=actor)
                expected_ops.append(("rejected", actor, key))
            else:
                record = canvas.write(key, value, overwrite=overwrite, actor=actor)
                assert record.op == outcome
                creator = actor if outcome == "write" else model[key][2]
                model[key] = (value, mode, creator)
                expected_ops.append((outcome, actor, key))
                assert canvas.read(key) == value

            assert canvas.inspect() == sorted(model)
            for known, (stored, _, _) in model.items():
                assert canvas.read(known) == stored

            log = canvas.log
            assert len(log) == step + 1
            assert (log[-1].op, log[-1].actor, log[-1].key) == expected_ops[-1]
            assert log[-1].seq == step + 1

            if step % 100 == 99:
                path = canvas.snapshot(tmp_path / f"canvas-{step}.snapshot")
                restored = Canvas.restore(path, clock=fixed_clock)
                assert restored.log == canvas.log
                assert restored.inspect() == canvas.inspect()
                for known in model:
                    assert restored.entry(known) == canvas.entry(known)
                assert restored.snapshot(tmp_path / "again").read_bytes() == path.read_bytes()

        stats = CanvasStats.from_log(canvas.log)
        assert stats.writes == sum(op == "write" for op, _, _ in expected_ops)
        assert stats.overwrites == sum(op == "overwrite" for op, _, _ in expected_ops)
        assert stats.rejected == sum(op == "rejected" for op, _, _ in expected_ops)
        assert sum(stats.by_actor.values()) == 1000
