"""
Numerical analysis of calculation results.

- Convergence-parameter selection (`select_converged`) with the monotone-tail rule
- Third-order Birch-Murnaghan EOS fitting (`fit_eos`), lattice constant and bulk modulus
- Adsorption energies and the ontop/fcc binding-energy difference
- BEEF ensemble statistics (`analyze_beef`)

Energies are Ry unless a name says otherwise; eV only appears in ensemble
statistics and reports.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.optimize import least_squares

from .errors import (
    FitDiverged,
    InsufficientData,
    InvalidSeries,
    LengthMismatch,
    NoConvergedValue,
    NoInteriorMinimum,
    NonCubicReference,
    NumericsError,
)
from .structlab import StructureModel

logger = logging.getLogger(__name__)

RY_TO_EV = 13.605693
RY_TO_MEV = RY_TO_EV * 1000.0
EV_PER_A3_TO_GPA = 160.2176634
RY_PER_A3_TO_GPA = RY_TO_EV * EV_PER_A3_TO_GPA
SMALL_ENSEMBLE = 30


@dataclass(frozen=True)
class ConvergenceSeries:
    """Energy per atom (Ry/atom) sampled over one convergence parameter."""

    parameter: Literal["ecutwfc", "kspacing"]
    values: Sequence[float]
    energies: Sequence[float]
    reference: float

    def __post_init__(self) -> None:
        if self.parameter not in ("ecutwfc", "kspacing"):
            raise InvalidSeries(f"unknown convergence parameter '{self.parameter}'")
        if len(self.values) != len(self.energies):
            raise LengthMismatch("values and energies differ in length")
        diffs = np.diff(np.asarray(self.values, dtype=float))
        if len(diffs) and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise InvalidSeries("convergence values must be strictly monotone")
        if not np.all(np.isfinite(self.energies)) or not math.isfinite(self.reference):
            raise InvalidSeries("convergence energies must be finite")

    def cost_order(self) -> list[int]:
        """Indices from cheapest to strictest: ecutwfc ascending, kspacing descending."""
        reverse = self.parameter == "kspacing"
        return sorted(range(len(self.values)), key=lambda i: self.values[i], reverse=reverse)

    def errors_mev(self) -> np.ndarray:
        """|E - E_ref| in meV/atom, in the order of ``values``."""
        return np.abs(np.asarray(self.energies, dtype=float) - self.reference) * RY_TO_MEV


def select_converged(series: ConvergenceSeries, threshold: float = 1.0) -> float:
    """
    Cheapest value whose error, and that of every stricter value, is within threshold.

    Args:
        series: Sampled energies per atom and the reference.
        threshold: Allowed |E - E_ref| in meV/atom.

    Raises:
        NoConvergedValue: The strictest sample already misses the threshold.
    """
    if len(series.values) < 2:
        raise InsufficientData("at least 2 samples are needed")
    order = series.cost_order()
    errors = series.errors_mev()
    chosen: int | None = None
    for index in reversed(order):
        if errors[index] > threshold:
            break
        chosen = index
    if chosen is None:
        raise NoConvergedValue(
            f"no {series.parameter} value within {threshold} meV/atom "
            f"(strictest error {errors[order[-1]]:.3f} meV/atom)"
        )
    return float(series.values[chosen])


# ---------------------------------------------------------------------------
# Equation of state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EOSFit:
    """Birch-Murnaghan parameters: E0 (Ry), V0 (A^3), B0 (Ry/A^3), B0'."""

    e0: float
    v0: float
    b0: float
    b0_prime: float
    residual_norm: float = 0.0

    @property
    def b0_gpa(self) -> float:
        return self.b0 * RY_PER_A3_TO_GPA


def birch_murnaghan(
    volume: np.ndarray | float, e0: float, v0: float, b0: float, b0_prime: float
) -> np.ndarray:
    """Third-order Birch-Murnaghan energy."""
    x = (v0 / np.asarray(volume, dtype=float)) ** (2.0 / 3.0)
    s = (x - 1.0) ** 3 * b0_prime + (x - 1.0) ** 2 * (6.0 - 4.0 * x)
    return e0 + 9.0 * v0 * b0 / 16.0 * s


def _bm_jacobian(params: np.ndarray, volume: np.ndarray) -> np.ndarray:
    _, v0, b0, bp = params
    x = (v0 / volume) ** (2.0 / 3.0)
    s = (x - 1.0) ** 3 * bp + (x - 1.0) ** 2 * (6.0 - 4.0 * x)
    ds_dx = 3.0 * (x - 1.0) ** 2 * bp + 2.0 * (x - 1.0) * (6.0 - 4.0 * x) - 4.0 * (x - 1.0) ** 2
    jac = np.empty((len(volume), 4))
    jac[:, 0] = 1.0
    jac[:, 1] = 9.0 * b0 / 16.0 * (s + (2.0 / 3.0) * x * ds_dx)
    jac[:, 2] = 9.0 * v0 / 16.0 * s
    jac[:, 3] = 9.0 * v0 * b0 / 16.0 * (x - 1.0) ** 3
    return jac


def fit_eos(volumes: Sequence[float], energies: Sequence[float]) -> EOSFit:
    """
    Fit E(V) to the third-order Birch-Murnaghan form.

    The fit runs in normalised units (V / mean V, energies rescaled to [0, 1]),
    starting from the vertex and curvature of a quadratic fit with B0' = 4.

    Raises:
        NoInteriorMinimum: Lowest energy at either end, or a non-convex quadratic.
        FitDiverged: Solver failure, B0 <= 0, or V0 outside the sampled range.
    """
    v = np.asarray(volumes, dtype=float)
    e = np.asarray(energies, dtype=float)
    if v.shape != e.shape:
        raise LengthMismatch("volumes and energies differ in length")
    if len(v) < 5:
        raise InsufficientData(f"at least 5 points are needed, got {len(v)}")
    order = np.argsort(v)
    v, e = v[order], e[order]

    lowest = int(np.argmin(e))
    if lowest in (0, len(e) - 1):
        raise NoInteriorMinimum("lowest energy lies at the edge of the sampled volumes")
    v_scale = float(v.mean())
    e_shift = float(e.min())
    e_scale = float(e.max() - e.min())
    if e_scale <= 0:
        raise NoInteriorMinimum("energies are constant")
    x = v / v_scale
    y = (e - e_shift) / e_scale

    c2, c1, c0 = np.polyfit(x, y, 2)
    if c2 <= 0:
        raise NoInteriorMinimum("quadratic fit has no minimum")
    v0 = -c1 / (2.0 * c2)
    start = np.array([c0 - c1**2 / (4.0 * c2), v0, 2.0 * c2 * v0, 4.0])

    result = least_squares(
        lambda p: birch_murnaghan(x, *p) - y,
        start,
        jac=lambda p: _bm_jacobian(p, x),
        method="lm",
        xtol=1e-14,
        ftol=1e-14,
        gtol=1e-14,
        max_nfev=2000,
    )
    e0_n, v0_n, b0_n, bp = (float(p) for p in result.x)
    if not result.success or not np.all(np.isfinite(result.x)):
        raise FitDiverged(f"least squares did not converge: {result.message}")
    if b0_n <= 0:
        raise FitDiverged(f"fitted bulk modulus is not positive ({b0_n})")
    if not x[0] <= v0_n <= x[-1]:
        raise FitDiverged("fitted V0 lies outside the sampled volumes")

    fit = EOSFit(
        e0=e0_n * e_scale + e_shift,
        v0=v0_n * v_scale,
        b0=b0_n * e_scale / v_scale,
        b0_prime=bp,
        residual_norm=float(np.linalg.norm(result.fun)) * e_scale,
    )
    logger.debug("EOS fit: V0=%.6f B0=%.6g B0'=%.3f", fit.v0, fit.b0, fit.b0_prime)
    return fit


def lattice_from_fit(fit: EOSFit, reference: StructureModel) -> float:
    """
    Equilibrium lattice constant from an EOS fit on scaled copies of ``reference``.

    Raises:
        NonCubicReference: ``reference`` is not a conventional cubic cell.
    """
    cell = reference.cell
    a_ref = float(cell[0, 0])
    off_diagonal = cell - np.diag(np.diag(cell))
    if not (
        np.allclose(off_diagonal, 0.0, atol=1e-9)
        and np.allclose(np.diag(cell), a_ref, rtol=1e-12, atol=1e-12)
    ):
        raise NonCubicReference(f"{reference.name or 'reference'} is not a cubic cell")
    return float(fit.v0 ** (1.0 / 3.0) * (a_ref / reference.volume ** (1.0 / 3.0)))


def bulk_modulus(fit: EOSFit | float) -> float:
    """Bulk modulus in GPa from a fit (or a B0 in Ry/A^3)."""
    b0 = fit.b0 if isinstance(fit, EOSFit) else float(fit)
    return b0 * RY_PER_A3_TO_GPA


# ---------------------------------------------------------------------------
# Adsorption
# ---------------------------------------------------------------------------


def adsorption_energy(e_system: float, e_slab: float, e_molecule: float) -> float:
    """E_ads = E(slab+adsorbate) - E(molecule) - E(slab)."""
    return e_system - e_molecule - e_slab


def delta_be(e_ads_ontop: float, e_ads_fcc: float) -> float:
    """E_ads(ontop) - E_ads(fcc); positive when the fcc hollow binds more strongly."""
    return e_ads_ontop - e_ads_fcc


@dataclass(frozen=True)
class EnsembleStats:
    """Statistics of per-member binding-energy differences, in eV."""

    mean: float
    std: float
    n: int
    sigma_distance: float
    route_difference: float = 0.0
    members: tuple[float, ...] = ()

    @property
    def favored_site(self) -> str:
        return "fcc" if self.mean > 0 else "ontop"


def analyze_beef(
    slab: Sequence[float],
    molecule: Sequence[float],
    ontop: Sequence[float],
    fcc: Sequence[float],
) -> EnsembleStats:
    """
    Ensemble statistics of the ontop/fcc binding-energy difference.

    Each member's difference is computed from full adsorption energies and,
    with the slab and molecule terms cancelled, as ``ontop - fcc``; the two
    must agree.

    Raises:
        LengthMismatch: The four lists differ in length.
    """
    arrays = [np.asarray(a, dtype=float) for a in (slab, molecule, ontop, fcc)]
    lengths = {len(a) for a in arrays}
    if len(lengths) != 1:
        raise LengthMismatch(f"ensemble lengths differ: {[len(a) for a in arrays]}")
    n = lengths.pop()
    if n < 2:
        raise InsufficientData("at least 2 ensemble members are needed")
    if n < SMALL_ENSEMBLE:
        logger.warning("only %d ensemble members; statistics will be unreliable", n)

    e_slab, e_mol, e_ontop, e_fcc = arrays
    full = ((e_ontop - e_slab - e_mol) - (e_fcc - e_slab - e_mol)) * RY_TO_EV
    cancelled = (e_ontop - e_fcc) * RY_TO_EV
    route_difference = float(np.max(np.abs(full - cancelled)))
    if route_difference > 1e-8:
        raise NumericsError(f"ensemble routes disagree by {route_difference:.3g} eV")

    mean = float(np.mean(cancelled))
    std = float(np.std(cancelled, ddof=1))
    if std <= 1e-12:
        logger.warning("ensemble spread is degenerate (std=%.3g eV)", std)
        sigma_distance = math.inf
    else:
        sigma_distance = abs(mean) / std
    return EnsembleStats(
        mean=mean,
        std=std,
        n=n,
        sigma_distance=sigma_distance,
        route_difference=route_difference,
        members=tuple(float(v) for v in cancelled),
    )
