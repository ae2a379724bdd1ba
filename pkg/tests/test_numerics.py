"""Tests for convergence selection, EOS fitting and ensemble statistics."""

from __future__ import annotations

import logging
import math

import numpy as np
import pytest

from matscreen import qeio, tools, validation
from matscreen.errors import (
    InsufficientData,
    InvalidSeries,
    LengthMismatch,
    NoConvergedValue,
    NoInteriorMinimum,
    NonCubicReference,
)
from matscreen.numerics import (
    RY_TO_EV,
    ConvergenceSeries,
    EOSFit,
    adsorption_energy,
    analyze_beef,
    birch_murnaghan,
    bulk_modulus,
    delta_be,
    fit_eos,
    lattice_from_fit,
    select_converged,
)
from matscreen.structlab import build_bulk

MEV_IN_RY = 1.0 / (RY_TO_EV * 1000.0)


def series(parameter: str, values: list[float], errors_mev: list[float]) -> ConvergenceSeries:
    reference = -15.0
    energies = [reference + e * MEV_IN_RY for e in errors_mev]
    return ConvergenceSeries(parameter, values, energies, reference)  # type: ignore[arg-type]


class TestSelectConverged:
    """Tests for convergence-parameter selection."""

    def test_cheapest_converged_cutoff(self) -> None:
        """Test that the cheapest cutoff within threshold is chosen."""
        s = series("ecutwfc", [30, 40, 50, 60], [6.8, 0.8, 0.4, 0.1])
        assert select_converged(s, 1.0) == 40

    def test_tail_must_stay_converged(self) -> None:
        """Test that an early dip below threshold does not count when a stricter value misses."""
        s = series("ecutwfc", [30, 40, 50, 60], [0.1, 2.0, 0.5, 0.1])
        assert select_converged(s, 1.0) == 50

    def test_kspacing_cost_order(self) -> None:
        """Test that larger k-spacing counts as cheaper."""
        s = series("kspacing", [0.25, 0.2, 0.15, 0.1], [3.0, 2.0, 0.5, 0.1])
        assert select_converged(s, 1.0) == pytest.approx(0.15)

    def test_nothing_converged(self) -> None:
        """Test that a strictest value outside the threshold raises."""
        s = series("ecutwfc", [30, 40], [5.0, 3.0])
        with pytest.raises(NoConvergedValue):
            select_converged(s, 1.0)

    def test_length_mismatch(self) -> None:
        """Test that values and energies must pair up."""
        with pytest.raises(LengthMismatch):
            ConvergenceSeries("ecutwfc", [30, 40], [-1.0], -1.0)

    def test_values_must_be_monotone(self) -> None:
        """Test that unsorted samples are rejected."""
        with pytest.raises(ValueError):
            ConvergenceSeries("ecutwfc", [30, 50, 40], [-1.0, -1.0, -1.0], -1.0)

    @pytest.mark.parametrize(
        ("parameter", "energies"),
        [("ecutrho", [-1.0, -1.0]), ("ecutwfc", [-1.0, float("nan")])],
    )
    def test_invalid_series(self, parameter: str, energies: list[float]) -> None:
        """Test that unknown parameters and non-finite energies raise InvalidSeries."""
        with pytest.raises(InvalidSeries):
            ConvergenceSeries(parameter, [30, 40], energies, -1.0)  # type: ignore[arg-type]

    def test_single_sample(self) -> None:
        """Test that one sample is not a convergence series."""
        with pytest.raises(InsufficientData):
            select_converged(series("ecutwfc", [30], [0.1]), 1.0)


class TestFitEos:
    """Tests for the Birch-Murnaghan fit."""

    TRUE = {"e0": -14.5, "v0": 41.1, "b0": 8.0e-4, "b0_prime": 3.6}

    def sample(self, shift: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        scales = np.linspace(0.95, 1.05, 7) + shift
        volumes = self.TRUE["v0"] * scales**3
        return volumes, birch_murnaghan(volumes, **self.TRUE)

    def test_recovers_parameters(self) -> None:
        """Test that exact BM data gives back the generating parameters."""
        fit = fit_eos(*self.sample())
        assert fit.e0 == pytest.approx(self.TRUE["e0"], rel=1e-8)
        assert fit.v0 == pytest.approx(self.TRUE["v0"], rel=1e-6)
        assert fit.b0 == pytest.approx(self.TRUE["b0"], rel=1e-5)
        assert fit.b0_prime == pytest.approx(self.TRUE["b0_prime"], rel=1e-4)

    def test_unsorted_input(self) -> None:
        """Test that point order does not matter."""
        volumes, energies = self.sample()
        order = np.array([3, 0, 6, 1, 5, 2, 4])
        fit = fit_eos(volumes[order], energies[order])
        assert fit.v0 == pytest.approx(self.TRUE["v0"], rel=1e-6)

    def test_minimum_at_edge(self) -> None:
        """Test that a minimum outside the sampled range raises."""
        with pytest.raises(NoInteriorMinimum):
            fit_eos(*self.sample(shift=0.1))

    def test_too_few_points(self) -> None:
        """Test that fewer than five points are rejected."""
        volumes, energies = self.sample()
        with pytest.raises(InsufficientData):
            fit_eos(volumes[:4], energies[:4])


class TestLatticeAndModulus:
    """Tests for lattice constants and bulk moduli from fits."""

    def test_lattice_from_cubic_reference(self) -> None:
        """Test that a conventional cubic cell gives a = V0**(1/3)."""
        reference = build_bulk("Li", "bcc", 3.451)
        fit = EOSFit(e0=-15.0, v0=3.44**3, b0=1e-3, b0_prime=4.0)
        assert lattice_from_fit(fit, reference) == pytest.approx(3.44)

    def test_non_cubic_reference(self) -> None:
        """Test that a hexagonal reference is rejected."""
        reference = build_bulk("Mg", "hcp", 3.21, c=5.21)
        fit = EOSFit(e0=-15.0, v0=46.0, b0=1e-3, b0_prime=4.0)
        with pytest.raises(NonCubicReference):
            lattice_from_fit(fit, reference)

    def test_bulk_modulus_units(self) -> None:
        """Test the Ry/A^3 to GPa conversion."""
        assert bulk_modulus(1.0) == pytest.approx(RY_TO_EV * 160.2176634)
        fit = EOSFit(e0=0.0, v0=1.0, b0=1e-3, b0_prime=4.0)
        assert fit.b0_gpa == pytest.approx(bulk_modulus(fit))


class TestAdsorption:
    """Tests for adsorption energies and their difference."""

    def test_adsorption_energy(self) -> None:
        """Test E_ads = E(system) - E(molecule) - E(slab)."""
        assert adsorption_energy(-100.0, -70.0, -29.0) == pytest.approx(-1.0)

    def test_delta_be_sign(self) -> None:
        """Test that a positive difference means the fcc site binds more strongly."""
        assert delta_be(-1.2, -1.3) == pytest.approx(0.1)


class TestAnalyzeBeef:
    """Tests for ensemble statistics."""

    def members(self, n: int = 200) -> dict[str, np.ndarray]:
        rng = np.random.default_rng(7)
        noise = rng.standard_normal(n)
        return {
            "slab": -500.0 + 0.01 * rng.standard_normal(n),
            "molecule": -43.0 + 0.01 * rng.standard_normal(n),
            "ontop": -544.0 + 0.001 * noise,
            "fcc": -544.0 - 0.12 / RY_TO_EV + 0.0005 * noise,
        }

    def test_statistics(self) -> None:
        """Test mean, spread, favored site and route agreement."""
        m = self.members()
        stats = analyze_beef(m["slab"], m["molecule"], m["ontop"], m["fcc"])
        diff = (m["ontop"] - m["fcc"]) * RY_TO_EV
        assert stats.n == 200
        assert stats.mean == pytest.approx(float(diff.mean()))
        assert stats.std == pytest.approx(float(diff.std(ddof=1)))
        assert stats.sigma_distance == pytest.approx(abs(stats.mean) / stats.std)
        assert stats.favored_site == "fcc"
        assert stats.route_difference < 1e-8

    def test_length_mismatch(self) -> None:
        """Test that all four member lists must have the same length."""
        with pytest.raises(LengthMismatch):
            analyze_beef([0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0])

    def test_single_member(self) -> None:
        """Test that one member is not an ensemble."""
        with pytest.raises(InsufficientData):
            analyze_beef([-1.0], [-1.0], [-2.0], [-2.1])

    def test_degenerate_spread(self, caplog: pytest.LogCaptureFixture) -> None:
        """Test that identical members give an infinite sigma distance and a warning."""
        with caplog.at_level(logging.WARNING, logger="matscreen.numerics"):
            stats = analyze_beef([-1.0] * 2, [-1.0] * 2, [-2.0] * 2, [-2.1] * 2)
        assert math.isinf(stats.sigma_distance)
        assert "degenerate" in caplog.text


def brute_force_choice(s: ConvergenceSeries, threshold: float) -> float | None:
    order = s.cost_order()
    errors = s.errors_mev()
    for position, index in enumerate(order):
        if all(errors[later] <= threshold for later in order[position:]):
            return float(s.values[index])
    return None


class TestRandomizedSelection:
    """Randomized checks of convergence selection against an exhaustive scan."""

    def test_matches_exhaustive_scan(self) -> None:
        """Test that the chosen value is the first in cost order with a converged tail."""
        rng = np.random.default_rng(1311)
        for _ in range(500):
            n = int(rng.integers(2, 9))
            parameter = "ecutwfc" if rng.random() < 0.5 else "kspacing"
            if parameter == "ecutwfc":
                values = sorted(rng.choice(np.arange(20, 125, 5), n, replace=False).tolist())
            else:
                values = sorted(rng.choice(np.arange(5, 55), n, replace=False) / 100.0)
            if rng.random() < 0.5:
                values = values[::-1]
            by_cost = 20.0 * rng.random() * np.exp(-rng.uniform(0.3, 2.0) * np.arange(n))
            by_cost += np.where(rng.random(n) < 0.2, rng.uniform(0.0, 3.0, n), 0.0)
            ranking = series(parameter, values, [0.0] * n)  # type: ignore[arg-type]
            errors = [0.0] * n
            for rank, index in enumerate(ranking.cost_order()):
                errors[index] = float(by_cost[rank])
            s = series(parameter, values, errors)  # type: ignore[arg-type]
            expected = brute_force_choice(s, 1.0)
            if expected is None:
                with pytest.raises(NoConvergedValue):
                    select_converged(s, 1.0)
            else:
                assert select_converged(s, 1.0) == pytest.approx(expected)


class TestRandomizedEos:
    """Randomized checks that exact Birch-Murnaghan data is fitted back."""

    def test_recovers_random_parameters(self) -> None:
        """Test V0 and B0 recovery on random seven-point samples spanning 15% in volume."""
        rng = np.random.default_rng(4242)
        for _ in range(100):
            truth = {
                "e0": float(rng.uniform(-200.0, -5.0)),
                "v0": float(rng.uniform(8.0, 80.0)),
                "b0": float(rng.uniform(10.0, 300.0)) / bulk_modulus(1.0),
                "b0_prime": float(rng.uniform(3.0, 6.0)),
            }
            volumes = truth["v0"] * np.linspace(0.925, 1.075, 7)
            fit = fit_eos(volumes, birch_murnaghan(volumes, **truth))
            assert fit.v0 == pytest.approx(truth["v0"], rel=1e-6)
            assert fit.b0 == pytest.approx(truth["b0"], rel=1e-3)


class TestEnergyUnits:
    """Tests for the shared energy conversion."""

    def test_single_rydberg_constant(self) -> None:
        """Test that every module converts Rydberg with the numerics constant."""
        assert not hasattr(qeio, "RY_TO_EV")
        assert tools.RY_TO_EV is RY_TO_EV
        assert validation.RY_TO_EV is RY_TO_EV
