"""
Text and CSV reports for the three pipelines.

Every report is written twice: an aligned text table for people and a CSV
file for tools. CSV files start with one ``# matscreen-report <kind> v1``
comment line; read them back with `read_report_csv`.

    lattice      one row per solid plus a per-class MAPE table
    adsorption   one row per configuration with E_ads and the site picks
    beef         one row of ensemble statistics
"""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import pandas as pd

from .pipelines import AdsorptionResult, EnsembleResult, LatticeResult

REPORT_VERSION = 1
FLOAT_FORMAT = "%.6f"

LATTICE_COLUMNS = [
    "system",
    "lattice",
    "experimental_a",
    "expert_a",
    "computed_a",
    "ecutwfc",
    "kspacing",
    "kgrid",
    "bulk_modulus_gpa",
    "error_vs_expert_pct",
    "error_vs_experiment_pct",
]
ADSORPTION_COLUMNS = ["configuration", "site", "orientation", "E_ads_eV", "most_favorable"]


def _header(kind: str) -> str:
    return f"# matscreen-report {kind} v{REPORT_VERSION}\n"


def write_csv(table: pd.DataFrame, path: Path, kind: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = table.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    path.write_text(_header(kind) + body, encoding="utf-8")
    return path


def read_report_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def _text(table: pd.DataFrame) -> str:
    return table.to_string(index=False, float_format=lambda v: f"{v:.4f}")


# ---------------------------------------------------------------------------
# Lattice constants
# ---------------------------------------------------------------------------


def lattice_table(results: Sequence[LatticeResult]) -> pd.DataFrame:
    rows = [
        {
            "system": r.system,
            "lattice": r.lattice,
            "experimental_a": r.experimental_a,
            "expert_a": r.expert_a,
            "computed_a": r.computed_a,
            "ecutwfc": r.ecutwfc,
            "kspacing": r.kspacing,
            "kgrid": "x".join(str(k) for k in r.kgrid),
            "bulk_modulus_gpa": r.bulk_modulus_gpa,
            "error_vs_expert_pct": r.error_vs_expert_pct,
            "error_vs_experiment_pct": r.error_vs_experiment_pct,
        }
        for r in results
    ]
    return pd.DataFrame(rows, columns=LATTICE_COLUMNS)


def class_mape(table: pd.DataFrame) -> pd.DataFrame:
    """Mean absolute percentage error per lattice class, in first-seen class order."""
    grouped = table.groupby("lattice", sort=False)
    summary = grouped.agg(
        n=("system", "count"),
        mape_vs_expert_pct=("error_vs_expert_pct", "mean"),
        mape_vs_experiment_pct=("error_vs_experiment_pct", "mean"),
    )
    return summary.reset_index()


def format_lattice_report(results: Sequence[LatticeResult]) -> str:
    table = lattice_table(results)
    lines = [
        "Lattice constants (Å)",
        _text(table),
        "",
        "MAPE per lattice class (%)",
        _text(class_mape(table)),
    ]
    return "\n".join(lines) + "\n"


def write_lattice_report(results: Sequence[LatticeResult], out_dir: Path) -> list[Path]:
    """Write ``lattice.txt``, ``lattice.csv`` and ``lattice_mape.csv``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = lattice_table(results)
    text_path = out_dir / "lattice.txt"
    text_path.write_text(format_lattice_report(results), encoding="utf-8")
    return [
        text_path,
        write_csv(table, out_dir / "lattice.csv", "lattice"),
        write_csv(class_mape(table), out_dir / "lattice_mape.csv", "lattice-mape"),
    ]


# ---------------------------------------------------------------------------
# Adsorption
# ---------------------------------------------------------------------------


def adsorption_table(result: AdsorptionResult) -> pd.DataFrame:
    best = {result.best_fcc["configuration"], result.best_ontop["configuration"]}
    rows = []
    for config in sorted(result.energies):
        site, _, orientation = config.partition("/")
        rows.append(
            {
                "configuration": config,
                "site": site,
                "orientation": orientation,
                "E_ads_eV": result.energies[config],
                "most_favorable": config in best,
            }
        )
    return pd.DataFrame(rows, columns=ADSORPTION_COLUMNS)


def format_adsorption_report(result: AdsorptionResult) -> str:
    lines = [
        f"{result.adsorbate} on {result.metal}({result.facet}), {result.xc}",
        _text(adsorption_table(result)),
        "",
        f"most favorable fcc:   {result.best_fcc['configuration']} "
        f"({result.best_fcc['E_ads']:.3f} eV)",
        f"most favorable ontop: {result.best_ontop['configuration']} "
        f"({result.best_ontop['E_ads']:.3f} eV)",
        f"dBE (ontop - fcc):    {result.delta_be:.3f} eV, {result.favored_site} favored",
    ]
    if result.literature is not None:
        lines.append(f"literature:           {result.literature:.3f} eV")
    if result.initial_failed is not None:
        lines.append(
            f"initial production:   {result.initial_failed} of {result.initial_jobs} jobs failed"
        )
    lines.append(f"repair rounds:        {result.repair_rounds}")
    return "\n".join(lines) + "\n"


def write_adsorption_report(result: AdsorptionResult, out_dir: Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text_path = out_dir / "adsorption.txt"
    text_path.write_text(format_adsorption_report(result), encoding="utf-8")
    table = adsorption_table(result)
    return [text_path, write_csv(table, out_dir / "adsorption.csv", "adsorption")]


# ---------------------------------------------------------------------------
# Ensemble
# ---------------------------------------------------------------------------


def beef_table(result: EnsembleResult) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "system": f"{result.adsorbate}/{result.metal}({result.facet})",
                "n": result.n,
                "mean_eV": result.mean,
                "std_eV": result.std,
                "sigma_distance": result.sigma_distance,
                "favored_site": result.favored_site,
                "verdict": result.verdict,
                "repair_rounds": result.repair_rounds,
            }
        ]
    )


def format_beef_report(result: EnsembleResult) -> str:
    lines = [
        f"Ensemble analysis of {result.adsorbate} on {result.metal}({result.facet})",
        f"members:          {result.n}",
        f"mean dBE:         {result.mean:.4f} eV",
        f"std dBE:          {result.std:.4f} eV",
        f"sigma distance:   {result.sigma_distance:.1f}",
        f"route difference: {result.route_difference:.2e} eV",
        f"verdict:          {result.verdict}",
    ]
    return "\n".join(lines) + "\n"


def write_beef_report(result: EnsembleResult, out_dir: Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text_path = out_dir / "beef.txt"
    text_path.write_text(format_beef_report(result), encoding="utf-8")
    return [text_path, write_csv(beef_table(result), out_dir / "beef.csv", "beef")]
