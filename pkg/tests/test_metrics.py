import json

import numpy as np
import pytest

from nmrtwin import metrics, qmat
from conftest import SZ

# frozen from an independent route: largest |eigenvalue| of the Hermitian dilation
ORACLE_DELTA = {
    "S1": 10.412943868090329,
    "S2": 6.606769255846609,
    "S3": 18.302748427490343,
    "pps": 27.41072642311753,
    "pps_h": 39.78424390579262,
}


def dilation_norm(a):
    n = len(a)
    z = np.zeros((n, n))
    return np.abs(np.linalg.eigvalsh(np.block([[z, a], [a.conj().T, z]]))).max()


def test_identical_matrices():
    assert metrics.deviation_error(SZ, SZ) == 0


def test_s1_closed_form():
    # the S1 difference is Hermitian and traceless: eigenvalues +-sqrt(d^2 + |b|^2)
    expected = 100 * np.sqrt(0.0397**2 + 0.0501**2 + 0.0822**2)
    assert metrics.deviation_error(SZ, metrics.PRINTED_EXPERIMENT["S1"]) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("key", sorted(ORACLE_DELTA))
def test_fixture_deltas_against_oracle(key):
    teo, exp = metrics.THEORY[key], metrics.PRINTED_EXPERIMENT[key]
    assert 100 * dilation_norm(teo - exp) / dilation_norm(teo) == pytest.approx(ORACLE_DELTA[key], abs=1e-9)
    assert metrics.deviation_error(teo, exp) == pytest.approx(ORACLE_DELTA[key], abs=0.05)


def test_fixture_comparison_flags_mismatch():
    rows = {c.key: c for c in metrics.fixture_deltas()}
    assert {k: c.printed for k, c in rows.items()} == {
        "S1": 5.02,
        "S2": 7.71,
        "S3": 10.79,
        "pps": 23.41,
        "pps_h": 33.78,
    }
    assert all(c.mismatch for c in rows.values())
    assert not metrics.FixtureComparison("x", 5.024, 5.02).mismatch


def test_errors():
    with pytest.raises(qmat.ContractError):
        metrics.deviation_error(np.zeros((2, 2)), SZ)
    with pytest.raises(qmat.ShapeError):
        metrics.deviation_error(SZ, np.eye(4))
    with pytest.raises(qmat.ContractError):
        metrics.scale_invariance_check(SZ, SZ, 0.0)


@pytest.mark.parametrize("alpha", [1.0, -1.0, 5.86e-5])
def test_scale_invariance(alpha):
    assert metrics.scale_invariance_check(metrics.THEORY["pps"], metrics.PRINTED_EXPERIMENT["pps"], alpha)


def test_unitary_invariance(rng):
    for _ in range(20):
        a, b = qmat.random_hermitian(4, rng), qmat.random_hermitian(4, rng)
        u = qmat.random_unitary(4, rng)
        lhs = metrics.deviation_error(u @ a @ u.conj().T, u @ b @ u.conj().T)
        assert lhs == pytest.approx(metrics.deviation_error(a, b), abs=1e-10)


def make_report(**kw):
    base = dict(
        experiment_id="gate-1q:S1",
        rho_theory=SZ,
        rho_experiment=metrics.PRINTED_EXPERIMENT["S1"],
        delta_percent=10.41,
    )
    base.update(kw)
    return metrics.ExperimentReport(**base)


def test_report_validation():
    with pytest.raises(qmat.ContractError):
        make_report(delta_percent=-1.0)
    with pytest.raises(qmat.ContractError):
        make_report(delta_percent=float("nan"))


def test_json_schema_and_round_trip():
    r = make_report(purity=0.9, convention_flags={"rf_convention": "standard"}, seeds=[3], notes=["n"])
    text = metrics.emit_report(r, "json")
    doc = json.loads(text)
    assert set(doc) == {
        "experiment_id",
        "rho_theory",
        "rho_experiment",
        "delta_percent",
        "purity",
        "convention_flags",
        "seeds",
        "notes",
        "extras",
    }
    assert set(doc["rho_theory"]) == {"re", "im"}
    assert metrics.parse_report(text) == r
    assert metrics.emit_report(metrics.parse_report(text), "json") == text


def test_empty_notes_report_is_valid_json():
    doc = json.loads(metrics.emit_report(make_report()))
    assert doc["notes"] == [] and doc["purity"] is None


def test_text_report_four_decimals():
    text = metrics.emit_report(make_report(), "text")
    assert "0.9603" in text and "-0.0501-0.0822i" in text and "-0.0501+0.0822i" in text
    assert "delta = 10.4100 %" in text
    with pytest.raises(ValueError):
        metrics.emit_report(make_report(), "xml")


def test_emission_is_deterministic():
    assert metrics.emit_report(make_report()) == metrics.emit_report(make_report())
