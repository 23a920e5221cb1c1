import numpy as np
import pytest
import scipy.constants as sc

from nmrtwin import spin
from conftest import I2, SX, SY, SZ

W1 = 2 * np.pi * 25e3


def test_h_rot_1q_examples():
    assert np.allclose(spin.h_rot_1q(W1, 0.0), -W1 * SX / 2)
    assert np.allclose(spin.h_rot_1q(W1, np.pi / 2), W1 * SY / 2)
    assert np.allclose(spin.h_rot_1q(0.0, 1.234), 0)


def test_h_rot_2q_examples():
    j = 208.0
    assert np.allclose(spin.h_rot_2q(0, 0, 0, 0, j, True), 2 * np.pi * j * np.diag([0.25, -0.25, -0.25, 0.25]))
    assert np.allclose(spin.h_rot_2q(W1, 0, 0, 0, j, False), np.kron(-W1 * SX / 2, I2))
    assert np.allclose(spin.h_rot_2q(0, 0, 0, 0, 0, True), 0)


@pytest.mark.parametrize("phi", [0.0, 0.3, np.pi / 2, 2.0, 5.5])
def test_h_rot_2q_embeds_single_channel_terms_exactly(phi):
    one = spin.h_rot_1q(W1, phi)
    assert np.array_equal(spin.h_rot_2q(W1, phi, 0, 0, 208, False), np.kron(one, I2))
    assert np.array_equal(spin.h_rot_2q(0, 0, W1, phi, 208, False), np.kron(I2, one))


@pytest.mark.parametrize("args", [(W1, 0.4, 0, 0, 208, True), (W1, 1.0, W1 / 2, 2.0, 208, True)])
def test_hamiltonians_hermitian_traceless(args):
    h = spin.h_rot_2q(*args)
    assert np.allclose(h, h.conj().T, atol=1e-12)
    assert abs(np.trace(h)) < 1e-12


def test_equilibrium_deviation_one_qubit():
    assert np.allclose(spin.equilibrium_deviation(spin.chloroform_1q()), SZ)


def test_equilibrium_deviation_two_qubit():
    rho = spin.equilibrium_deviation(spin.chloroform_2q())
    r = (42.57 - 10.71) / (42.57 + 10.71)
    assert np.allclose(rho, np.diag([1, r, -r, -1]), atol=1e-15)
    # printed four-decimal ratio 0.5981 differs from the exact quotient by 1.3e-4
    assert rho[1, 1].real == pytest.approx(0.5981, abs=5e-4)
    assert abs(np.trace(rho)) < 1e-15
    d = np.diag(rho).real
    assert np.array_equal(d, -d[::-1])


def test_equilibrium_deviation_symmetric_limit():
    sys_ = spin.chloroform_2q()
    h = sys_.channels[0]
    same = sys_.with_changes(channels=(h, spin.carbon(gamma=h.gamma)))
    assert np.allclose(spin.equilibrium_deviation(same), np.diag([1, 0, 0, -1]))


def test_deviation_prefactor_independent_route():
    system = spin.chloroform_2q()
    gsum = 2 * np.pi * (42.57 + 10.71) * 1e6
    expected = sc.hbar * 7.0 * gsum / (2 * sc.k * 293.15)
    assert spin.deviation_prefactor(system) == pytest.approx(expected, rel=1e-12)
    assert spin.deviation_prefactor(system) == pytest.approx(3.05e-5, rel=1e-2)
    assert spin.PRINTED_DEVIATION_PREFACTOR == 5.86e-5


def test_free_evolution_hamiltonian():
    assert np.allclose(spin.free_evolution_hamiltonian(spin.chloroform_1q()), 0)
    assert np.allclose(
        spin.free_evolution_hamiltonian(spin.chloroform_2q()), 2 * np.pi * 208 * np.diag([0.25, -0.25, -0.25, 0.25])
    )
    assert np.allclose(spin.free_evolution_hamiltonian(spin.chloroform_1q(), (100.0,)), -100.0 * SZ / 2)


def test_free_evolution_wrong_detuning_count():
    with pytest.raises(spin.ConfigError):
        spin.free_evolution_hamiltonian(spin.chloroform_2q(), (1.0,))


@pytest.mark.parametrize(
    "build",
    [
        lambda: spin.SpinSystem(channels=()),
        lambda: spin.SpinSystem(channels=(spin.hydrogen(),), j_coupling=5.0),
        lambda: spin.SpinSystem(channels=(spin.hydrogen(), spin.hydrogen())),
        lambda: spin.SpinSystem(channels=(spin.hydrogen(),), temperature=0.0),
        lambda: spin.SpinSystem(channels=(spin.hydrogen(),), t1=(0.1,), t2=(0.3,)),
        lambda: spin.hydrogen(gamma=-1.0),
        lambda: spin.hydrogen(rf_amplitude=0.0),
    ],
)
def test_invalid_systems_rejected(build):
    with pytest.raises(spin.ConfigError):
        build()


def test_defaults():
    s = spin.chloroform_2q()
    assert s.channel_names == ("H", "C")
    assert s.j_coupling == 208.0 and s.b0 == 7.0
    assert s.channels[0].rf_amplitude == pytest.approx(W1)
    assert s.channels[0].larmor == pytest.approx(2 * np.pi * 300e6)
    with pytest.raises(spin.ConfigError):
        s.channel_index("N")
