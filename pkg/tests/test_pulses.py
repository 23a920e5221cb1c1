import numpy as np
import pytest

from nmrtwin import pulses, qmat, spin
from conftest import HADAMARD, I2, SX, SY, SZ

S1Q, S2Q = spin.chloroform_1q(), spin.chloroform_2q()
VERBATIM = pulses.CompileOptions(convention=pulses.VERBATIM)


def test_pi_pulse_verbatim_is_i_sigma_x():
    u = pulses.event_unitary(pulses.PulseEvent("H", np.pi), S1Q, VERBATIM)
    assert np.allclose(u, 1j * SX, atol=1e-12)


def test_half_pi_pulse_verbatim_closed_form():
    u = pulses.event_unitary(pulses.PulseEvent("H", np.pi / 2), S1Q, VERBATIM)
    assert np.allclose(u, np.array([[1, 1j], [1j, 1]]) / np.sqrt(2), atol=1e-12)


def test_standard_convention_is_opposite_sense():
    u = pulses.event_unitary(pulses.PulseEvent("H", np.pi / 2), S1Q)
    assert np.allclose(u, np.array([[1, -1j], [-1j, 1]]) / np.sqrt(2), atol=1e-12)
    assert pulses.DEFAULT_OPTIONS.convention == pulses.STANDARD


def test_j_delay_unitary():
    u = pulses.event_unitary(pulses.DelayEvent(half_j=True), S2Q)
    e = np.exp(-1j * np.pi / 4)
    assert np.allclose(u, np.diag([e, e.conjugate(), e.conjugate(), e]), atol=1e-12)
    assert pulses.delay_duration(pulses.DelayEvent(half_j=True), S2Q) == pytest.approx(1 / 416)


def test_j_delay_needs_coupling():
    with pytest.raises(spin.ConfigError):
        pulses.event_unitary(pulses.DelayEvent(half_j=True), S1Q)


def test_unknown_channel_is_config_error():
    with pytest.raises(spin.ConfigError):
        pulses.event_unitary(pulses.PulseEvent("C", np.pi), S1Q)


def test_pulse_duration_from_flip_angle():
    assert pulses.PulseEvent("H", np.pi).duration(S1Q) == pytest.approx(np.pi / S1Q.channels[0].rf_amplitude)


def test_event_validation():
    with pytest.raises(qmat.ContractError):
        pulses.PulseEvent("H", 0.0)
    with pytest.raises(qmat.ContractError):
        pulses.DelayEvent(-1.0)
    with pytest.raises(qmat.ContractError):
        pulses.SimultaneousGroup((pulses.PulseEvent("H", 1.0), pulses.PulseEvent("H", 2.0)))
    assert pulses.PulseEvent("H", 1.0, -np.pi / 2).phase == pytest.approx(3 * np.pi / 2)


def test_empty_sequence_is_identity():
    assert np.allclose(pulses.sequence_unitary(pulses.PulseSequence(), S1Q), I2)


def test_sequence_order_first_event_rightmost():
    a, b = pulses.PulseEvent("H", np.pi / 2), pulses.PulseEvent("H", np.pi / 3, np.pi / 2)
    u = pulses.sequence_unitary(pulses.PulseSequence((a, b)), S1Q)
    assert np.allclose(u, pulses.event_unitary(b, S1Q) @ pulses.event_unitary(a, S1Q))


@pytest.mark.parametrize("gate,target", [("S1", SZ), ("S2", SX), ("S3", HADAMARD)])
def test_one_qubit_gates_up_to_phase(gate, target):
    u = pulses.sequence_unitary(pulses.named_sequence(gate), S1Q)
    assert qmat.phase_equivalent(u, target)


def test_x_then_y_pi_pulses_give_sigma_z():
    seq = pulses.PulseSequence((pulses.PulseEvent("H", np.pi), pulses.PulseEvent("H", np.pi, np.pi / 2)))
    assert qmat.phase_equivalent(pulses.sequence_unitary(seq, S1Q), SZ)


def test_h2q_is_hadamard_on_first_spin():
    u = pulses.sequence_unitary(pulses.named_sequence("H2Q"), S2Q)
    assert qmat.phase_equivalent(u, np.kron(HADAMARD, I2))


@pytest.mark.parametrize("gate,system", [("S1", S1Q), ("S2", S1Q), ("S3", S1Q), ("H2Q", S2Q)])
def test_gate_idempotence(gate, system):
    u = pulses.sequence_unitary(pulses.named_sequence(gate), system)
    assert qmat.phase_equivalent(u @ u, np.eye(system.dim))


@pytest.mark.parametrize("seq_id", pulses.NAMED_SEQUENCE_IDS)
def test_named_sequences_compile_unitary(seq_id):
    system = S1Q if seq_id in ("S1", "S2", "S3", "PI1") else S2Q
    assert qmat.is_unitary(pulses.sequence_unitary(pulses.named_sequence(seq_id), system))


def test_named_sequence_shapes():
    pi1 = pulses.named_sequence("PI1")
    assert pi1.events == (pulses.PulseEvent("H", np.pi / 2, 0.0),)
    (grp,) = pulses.named_sequence("OMEGA4").events
    assert {(p.channel, p.phase) for p in grp.pulses} == {("H", np.pi / 2), ("C", 0.0)}
    kinds = [type(e).__name__ for e in pulses.named_sequence("P1").events]
    assert kinds == ["PulseEvent", "DelayEvent", "PulseEvent", "PulseEvent", "DelayEvent", "PulseEvent"]
    with pytest.raises(KeyError):
        pulses.named_sequence("OMEGA9")


def test_apply_examples():
    rho = SZ
    assert np.allclose(pulses.apply(I2, rho), rho)
    assert np.allclose(pulses.apply(SX, rho), -SZ)
    assert np.allclose(pulses.apply(HADAMARD, rho), SX)
    with pytest.raises(qmat.ShapeError):
        pulses.apply(np.eye(4), rho)


def test_apply_preserves_trace_and_hermiticity(rng):
    for _ in range(20):
        u = qmat.random_unitary(4, rng)
        rho = qmat.random_hermitian(4, rng)
        out = pulses.apply(u, rho)
        assert abs(np.trace(out) - np.trace(rho)) < 1e-12
        assert qmat.is_hermitian(out, 1e-12)


def test_temporal_average_examples():
    assert np.allclose(pulses.temporal_average([SY]), SY)
    assert np.allclose(pulses.temporal_average([SZ, -SZ]), 0)
    with pytest.raises(qmat.ContractError):
        pulses.temporal_average([])
    with pytest.raises(qmat.ShapeError):
        pulses.temporal_average([I2, np.eye(4)])


@pytest.mark.parametrize("source", ["reference", "compiled"])
def test_temporal_average_of_preparations_is_pseudo_pure(source):
    rho0 = np.diag([1, 0.5981, -0.5981, -1]).astype(complex)
    if source == "reference":
        us = [pulses.reference_matrix(k) for k in ("P0", "P1", "P2")]
    else:
        us = [pulses.sequence_unitary(pulses.named_sequence(k), S2Q) for k in ("P0", "P1", "P2")]
    avg = pulses.temporal_average([pulses.apply(u, rho0) for u in us])
    assert np.allclose(avg, np.diag([1 / 3, 1 / 3, 1 / 3, -1]), atol=1e-12)


def test_reference_matrices():
    assert np.array_equal(pulses.reference_matrix("P0"), np.eye(4))
    p1 = pulses.reference_matrix("P1")
    assert (p1[0, 1], p1[1, 2], p1[2, 0], p1[3, 3]) == (-1j, -1, -1, 1j)
    p2 = pulses.reference_matrix("P2")
    assert (p2[0, 2], p2[1, 0], p2[2, 1], p2[3, 3]) == (-1, -1j, -1, 1j)
    with pytest.raises(KeyError):
        pulses.reference_matrix("P3")


def test_convention_resolution_reports_diagonal_factor():
    rep = pulses.resolve_convention(S1Q, S2Q)
    assert rep.chosen == pulses.STANDARD
    assert rep.j_delay_reading == "1/(2J)"
    text = " ".join(rep.findings)
    assert "P1" in text and "P2" in text and "diagonal phase factor D" in text
    for ref in ("P1", "P2"):
        u = pulses.sequence_unitary(pulses.named_sequence(ref), S2Q)
        r = pulses.reference_matrix(ref)
        d = u @ r.conj().T
        assert np.allclose(d, np.diag(np.diag(d)), atol=1e-12)


def test_miscalibration_scales_flip_angle():
    opts = pulses.CompileOptions(miscalibration=0.1)
    u = pulses.event_unitary(pulses.PulseEvent("H", np.pi / 2), S1Q, opts)
    ref = pulses.event_unitary(pulses.PulseEvent("H", 1.1 * np.pi / 2), S1Q)
    assert np.allclose(u, ref)


def test_soft_pulses_include_coupling():
    hard = pulses.sequence_unitary(pulses.named_sequence("OMEGA1"), S2Q)
    soft = pulses.sequence_unitary(pulses.named_sequence("OMEGA1"), S2Q, pulses.CompileOptions(soft_pulses=True))
    assert not np.allclose(hard, soft, atol=1e-6)
    assert qmat.phase_fidelity(hard, soft) > 0.999


def test_pseudo_pure_coefficients_symbolic():
    xi1, xi2, eps, _ = pulses.pseudo_pure_coefficients()
    assert (xi2 + 4 * eps / 3).simplify() == 0
    assert (xi1 - 1 - eps / 3).simplify() == 0
