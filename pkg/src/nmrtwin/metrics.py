"""Relative deviation between theory and experiment, and experiment reports."""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .qmat import ContractError, ShapeError, as_matrix, spectral_norm


def deviation_error(rho_teo, rho_exp):
    """``100 * ||teo - exp|| / ||teo||`` in percent, with the spectral norm."""
    teo, exp = as_matrix(rho_teo), as_matrix(rho_exp)
    if teo.shape != exp.shape:
        raise ShapeError(f"dimension mismatch: {teo.shape} vs {exp.shape}")
    denom = spectral_norm(teo)
    if denom == 0:
        raise ContractError("deviation_error is undefined for a zero theory matrix")
    return 100.0 * spectral_norm(teo - exp) / denom


def scale_invariance_check(rho_teo, rho_exp, alpha, tol=1e-10):
    if alpha == 0:
        raise ContractError("alpha must be nonzero")
    base = deviation_error(rho_teo, rho_exp)
    scaled = deviation_error(alpha * as_matrix(rho_teo), alpha * as_matrix(rho_exp))
    return abs(base - scaled) <= tol * max(1.0, base)


# Printed theory and experimental matrices (normalized units).
def _c(re, im=0.0):
    return complex(re, im)


THEORY = {
    "S1": np.diag([1.0, -1.0]).astype(complex),
    "S2": np.diag([-1.0, 1.0]).astype(complex),
    "S3": np.array([[0, 1], [1, 0]], dtype=complex),
    "pps": np.diag([1 / 3, 1 / 3, 1 / 3, -1.0]).astype(complex),
    "pps_h": np.array(
        [[1 / 3, 0, 0, 0], [0, -1 / 3, 0, 2 / 3], [0, 0, 1 / 3, 0], [0, 2 / 3, 0, -1 / 3]], dtype=complex
    ),
}

PRINTED_EXPERIMENT = {
    "S1": np.array([[0.9603, _c(-0.0501, -0.0822)], [_c(-0.0501, 0.0822), -0.9603]]),
    "S2": np.array([[-0.9342, _c(0.0059, -0.0007)], [_c(0.0059, 0.0007), 0.9342]]),
    "S3": np.array([[-0.1104, _c(1.0221, -0.1443)], [_c(1.0221, 0.1443), 0.1104]]),
    "pps": np.array(
        [
            [_c(0.2844, -0.0253), _c(-0.05497, -0.09281), _c(0.03786, -0.02695), _c(0.01413, 0.03190)],
            [_c(-0.05497, 0.09281), _c(0.3408, 0.0115), _c(-0.01169, 0.01876), _c(-0.07782, -0.01776)],
            [_c(0.03786, 0.02695), _c(-0.01169, -0.01876), _c(0.2990, 0.0013), _c(-0.0383, -0.2076)],
            [_c(0.01413, -0.03190), _c(-0.07782, 0.01776), _c(-0.0383, 0.2076), _c(-0.9242, -0.0615)],
        ]
    ),
    "pps_h": np.array(
        [
            [_c(0.2985, -0.0527), _c(-0.0179, 0.1592), _c(0.03942, 0.03982), _c(-0.01039, -0.07239)],
            [_c(-0.0179, -0.1592), _c(-0.3825, -0.0360), _c(-0.05330, 0.11672), _c(0.4873, -0.0725)],
            [_c(0.03942, -0.03982), _c(-0.05330, -0.11672), _c(0.2856, -0.0056), _c(0.0607, 0.1693)],
            [_c(-0.01039, 0.07239), _c(0.4873, 0.0725), _c(0.0607, -0.1693), _c(-0.2016, 0.0004)],
        ]
    ),
}

PRINTED_DELTA = {"S1": 5.02, "S2": 7.71, "S3": 10.79, "pps": 23.41, "pps_h": 33.78}


@dataclass(frozen=True)
class FixtureComparison:
    key: str
    recomputed: float
    printed: float

    @property
    def mismatch(self):
        # printed values carry two decimals
        return abs(self.recomputed - self.printed) > 0.005

    def as_dict(self):
        return {"key": self.key, "recomputed": self.recomputed, "printed": self.printed, "mismatch": self.mismatch}


def fixture_deltas():
    """Recompute every printed delta from the printed matrices, next to the printed value."""
    return [
        FixtureComparison(k, deviation_error(THEORY[k], PRINTED_EXPERIMENT[k]), PRINTED_DELTA[k])
        for k in PRINTED_DELTA
    ]


@dataclass
class ExperimentReport:
    experiment_id: str
    rho_theory: np.ndarray
    rho_experiment: np.ndarray
    delta_percent: float
    purity: float = None
    convention_flags: dict = field(default_factory=dict)
    seeds: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)  # experiment-specific values (state readout, fixture comparison)

    def __post_init__(self):
        if not self.delta_percent >= 0:
            raise ContractError("delta_percent must be non-negative")

    def __eq__(self, other):
        if not isinstance(other, ExperimentReport):
            return NotImplemented
        return report_to_dict(self) == report_to_dict(other)


def _matrix_doc(m):
    m = as_matrix(m)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def report_to_dict(report):
    return {
        "experiment_id": report.experiment_id,
        "rho_theory": _matrix_doc(report.rho_theory),
        "rho_experiment": _matrix_doc(report.rho_experiment),
        "delta_percent": float(report.delta_percent),
        "purity": _finite_or_none(report.purity),
        "convention_flags": dict(report.convention_flags),
        "seeds": [int(s) for s in report.seeds],
        "notes": [str(n) for n in report.notes],
        "extras": report.extras,
    }


def _format_complex(z):
    z = complex(z)
    if abs(z.imag) < 5e-5:
        return f"{z.real:.4f}"
    sign = "+" if z.imag >= 0 else "-"
    return f"{z.real:.4f}{sign}{abs(z.imag):.4f}i"


def format_matrix(m):
    m = as_matrix(m)
    cells = [[_format_complex(z) for z in row] for row in m]
    width = max(len(c) for row in cells for c in row)
    return "\n".join("  [ " + "  ".join(c.rjust(width) for c in row) + " ]" for row in cells)


def emit_report(report, fmt="json"):
    """Serialize deterministically: ``json`` (fixed schema) or ``text`` (4 decimals)."""
    if fmt == "json":
        return json.dumps(report_to_dict(report), indent=2, sort_keys=True, allow_nan=False) + "\n"
    if fmt != "text":
        raise ValueError("format must be 'json' or 'text'")
    lines = [
        f"experiment: {report.experiment_id}",
        "rho_teo =",
        format_matrix(report.rho_theory),
        "rho_exp =",
        format_matrix(report.rho_experiment),
        f"delta = {report.delta_percent:.4f} %",
    ]
    purity = _finite_or_none(report.purity)
    if purity is not None:
        lines.append(f"purity = {purity:.4f}")
    if report.convention_flags:
        lines.append("conventions: " + ", ".join(f"{k}={v}" for k, v in sorted(report.convention_flags.items())))
    if report.seeds:
        lines.append("seeds: " + ", ".join(str(s) for s in report.seeds))
    lines.extend(f"note: {n}" for n in report.notes)
    return "\n".join(lines) + "\n"


def parse_report(text):
    """Inverse of ``emit_report(..., 'json')``."""
    doc = json.loads(text)

    def mat(d):
        return np.array(d["re"], dtype=float) + 1j * np.array(d["im"], dtype=float)

    return ExperimentReport(
        experiment_id=doc["experiment_id"],
        rho_theory=mat(doc["rho_theory"]),
        rho_experiment=mat(doc["rho_experiment"]),
        delta_percent=doc["delta_percent"],
        purity=doc["purity"],
        convention_flags=doc["convention_flags"],
        seeds=doc["seeds"],
        notes=doc["notes"],
        extras=doc.get("extras", {}),
    )
