"""
Checks for the shipped data and for benchmark results.

This module provides:
- ValidationCheck and ValidationResult dataclasses for structured results
- Fixture checks: benchmark coverage, reference lattice constants, the
  adsorption-energy anchors and the ensemble spread
- Cluster check: every fixture fits on some partition
- `check_benchmark`: computed lattice constants against the reference columns

Example:
    ```python
    from matscreen.validation import validate_installation

    result = validate_installation()
    print(result.summary())
    ```
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .hpcsim import ClusterSpec, load_cluster_spec
from .numerics import RY_TO_EV
from .pipelines import LatticeResult
from .reports import class_mape, lattice_table
from .structlab import KIND_SLAB_ADSORBATE
from .surrogate import FixtureLibrary, ensemble_normals, load_fixture_library

BENCHMARK_SIZE = 27
DELTA_BE_ANCHORS = {"PBE": 0.104, "LDA": 0.318}
DELTA_BE_TOLERANCE = 0.002
BEEF_MEAN = 0.12
BEEF_STD = 0.01
PER_SYSTEM_TOLERANCE_PCT = 0.2
CLASS_MAPE = {"bcc": 0.36, "fcc": 0.51, "diamond": 1.00}
CLASS_MAPE_TOLERANCE = 0.05
# Largest production system: p(2x2) four-layer slab plus a diatomic.
LARGEST_SYSTEM_ATOMS = 18


@dataclass
class ValidationCheck:
    """Result of a single validation check."""

    name: str
    passed: bool
    expected: str
    actual: str
    details: str | None = None

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        msg = f"[{status}] {self.name}: expected={self.expected}, actual={self.actual}"
        if self.details:
            msg += f" ({self.details})"
        return msg


@dataclass
class ValidationResult:
    """Aggregated result of multiple validation checks."""

    source: str
    checks: list[ValidationCheck] = field(default_factory=list)

    def add_check(self, check: ValidationCheck) -> None:
        self.checks.append(check)

    @property
    def all_passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failed_checks(self) -> list[ValidationCheck]:
        return [check for check in self.checks if not check.passed]

    def summary(self) -> str:
        """Human-readable summary of all checks."""
        lines = [f"Validation Results for: {self.source}", "=" * 60]
        for check in self.checks:
            status = "✅ PASS" if check.passed else "❌ FAIL"
            lines.append(f"{status} {check.name}")
            lines.append(f"       Expected: {check.expected}")
            lines.append(f"       Actual:   {check.actual}")
            if check.details:
                lines.append(f"       Details:  {check.details}")
        lines.append("=" * 60)
        if self.all_passed:
            lines.append("✅ All validations passed!")
        else:
            failed_names = [c.name for c in self.failed_checks]
            lines.append(f"❌ {len(failed_names)} check(s) failed: {failed_names}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Fixture library
# ---------------------------------------------------------------------------


def check_benchmark_coverage(
    library: FixtureLibrary, expected: int = BENCHMARK_SIZE
) -> ValidationCheck:
    systems = library.benchmark_systems()
    return ValidationCheck(
        name="benchmark_systems",
        passed=len(systems) == expected,
        expected=str(expected),
        actual=str(len(systems)),
        details=None if len(systems) == expected else f"found {[f.system for f in systems]}",
    )


def check_reference_lattice(library: FixtureLibrary, rel_tol: float = 1e-6) -> ValidationCheck:
    """The fixture equilibrium volume reproduces each reference lattice constant."""
    off = []
    for fixture in library.benchmark_systems():
        assert fixture.bm is not None and fixture.reference is not None
        a = fixture.bm.V0 ** (1.0 / 3.0)
        if not math.isclose(a, fixture.reference.agent_a, rel_tol=rel_tol):
            off.append(f"{fixture.system} {a:.5f} != {fixture.reference.agent_a}")
    return ValidationCheck(
        name="reference_lattice",
        passed=not off,
        expected="V0^(1/3) matches the reference column",
        actual="all match" if not off else f"{len(off)} mismatch(es)",
        details="; ".join(off) or None,
    )


def _site_minimum(energies: dict[str, float], site: str) -> float:
    return min(e for key, e in energies.items() if key.startswith(f"{site}/"))


def fixture_delta_be(library: FixtureLibrary, functional: str) -> float:
    """ontop - fcc difference (eV) of the most favorable configurations in the fixture table."""
    fixture = next(f for f in library.fixtures if f.kind == KIND_SLAB_ADSORBATE)
    table = fixture.energies[functional]
    return (_site_minimum(table, "ontop") - _site_minimum(table, "fcc")) * RY_TO_EV


def check_delta_be(
    library: FixtureLibrary, functional: str, expected: float, tol: float = DELTA_BE_TOLERANCE
) -> ValidationCheck:
    value = fixture_delta_be(library, functional)
    return ValidationCheck(
        name=f"delta_be_{functional}",
        passed=abs(value - expected) <= tol,
        expected=f"{expected:.3f} ± {tol} eV",
        actual=f"{value:.4f} eV",
    )


def check_beef_spread(library: FixtureLibrary, seed: int = 42, n: int = 2000) -> ValidationCheck:
    """Member-wise ontop/upright - fcc/upright differences have the calibrated mean and spread."""
    fixture = next(f for f in library.fixtures if f.kind == KIND_SLAB_ADSORBATE)
    if fixture.beef is None:
        return ValidationCheck("beef_spread", False, "ensemble parameters", "none")
    z = ensemble_normals(seed, n)
    table = fixture.energies["BEEF-vdW"]

    def members(key: str) -> np.ndarray:
        assert fixture.beef is not None
        offset = fixture.beef.mean_offset.get(key, 0.0)
        return table[key] + offset + fixture.beef.spread.get(key, 0.0) * z

    diff = (members("ontop/upright") - members("fcc/upright")) * RY_TO_EV
    mean, std = float(diff.mean()), float(diff.std(ddof=1))
    passed = abs(abs(mean) - BEEF_MEAN) <= 3 * BEEF_STD / math.sqrt(n) and (
        abs(std - BEEF_STD) <= 0.2 * BEEF_STD
    )
    return ValidationCheck(
        name="beef_spread",
        passed=passed,
        expected=f"|mean| {BEEF_MEAN} eV, std {BEEF_STD} eV ± 20%",
        actual=f"mean {mean:.4f} eV, std {std:.4f} eV",
    )


# ---------------------------------------------------------------------------
# Cluster
# ---------------------------------------------------------------------------


def check_cluster(cluster: ClusterSpec, atoms: int = LARGEST_SYSTEM_ATOMS) -> ValidationCheck:
    capacity = max(p.total_cores for p in cluster.partitions)
    return ValidationCheck(
        name="cluster_partitions",
        passed=capacity >= atoms,
        expected=f">= {atoms} cores on one partition",
        actual=f"{len(cluster.partitions)} partition(s), largest {capacity} cores",
    )


# ---------------------------------------------------------------------------
# Benchmark results
# ---------------------------------------------------------------------------


def check_benchmark(results: Sequence[LatticeResult], library: FixtureLibrary) -> ValidationResult:
    """
    Compare computed lattice constants with the reference columns.

    Each system must land within 0.2% of its reference value, and each lattice
    class MAPE against the expert column within 0.05 points of the published value.
    """
    result = ValidationResult("lattice benchmark")
    off = []
    for r in results:
        reference = library.get(r.system).reference
        if reference is None:
            continue
        error = abs(r.computed_a - reference.agent_a) / reference.agent_a * 100.0
        if error > PER_SYSTEM_TOLERANCE_PCT:
            off.append(f"{r.system} {r.computed_a:.4f} vs {reference.agent_a} ({error:.3f}%)")
    result.add_check(
        ValidationCheck(
            name="per_system",
            passed=not off,
            expected=f"within {PER_SYSTEM_TOLERANCE_PCT}% of reference",
            actual=f"{len(results) - len(off)}/{len(results)} within tolerance",
            details="; ".join(off) or None,
        )
    )
    mape = class_mape(lattice_table(results)).set_index("lattice")["mape_vs_expert_pct"]
    for lattice, expected in CLASS_MAPE.items():
        if lattice not in mape.index:
            continue
        value = float(mape[lattice])
        result.add_check(
            ValidationCheck(
                name=f"mape_{lattice}",
                passed=abs(value - expected) <= CLASS_MAPE_TOLERANCE,
                expected=f"{expected:.2f}% ± {CLASS_MAPE_TOLERANCE}",
                actual=f"{value:.3f}%",
            )
        )
    return result


def validate_installation(
    fixture_library: Path | None = None, cluster_config: Path | None = None
) -> ValidationResult:
    """Run every data check on the fixture library and cluster config."""
    library = load_fixture_library(fixture_library)
    cluster = load_cluster_spec(cluster_config)
    result = ValidationResult(str(fixture_library or "packaged data"))
    result.add_check(check_benchmark_coverage(library))
    result.add_check(check_reference_lattice(library))
    for functional, expected in DELTA_BE_ANCHORS.items():
        result.add_check(check_delta_be(library, functional, expected))
    result.add_check(check_beef_spread(library))
    result.add_check(check_cluster(cluster))
    return result
