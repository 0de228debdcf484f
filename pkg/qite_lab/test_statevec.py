import math

import numpy as np
import pytest
import scipy.linalg

import statevec
from conftest import H2_DOUBLY_EXCITED, H2_GROUND, H4_GROUND, H4_SECOND_AG
from errors import DimensionError, SeriesNotConverged
from pauli_core import PauliTerm, parse_pauli_text
from statevec import (
    OpenShellPair,
    StateVector,
    apply_pauli_rotation,
    braket,
    exact_diag,
    exact_ite,
    exact_ite_composed,
    expectation,
    imag_propagate,
    open_shell_pair,
    parse_state_spec,
    prepare,
    reachable_levels,
    run_exact_ite,
    sector_indices,
)


def _plus(n_qubits=1):
    amps = np.full(1 << n_qubits, 1 / math.sqrt(1 << n_qubits), dtype=complex)
    return StateVector(amps, n_qubits)


def _random_state(rng, n_qubits):
    amps = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
    return StateVector(amps, n_qubits).normalized()


def test_prepare_uses_rightmost_qubit_zero():
    """'0011' is basis index 3."""
    state = prepare("0011")
    assert state.n_qubits == 4
    assert state.amplitudes[3] == 1.0
    assert state.norm == pytest.approx(1.0)


def test_open_shell_pair_amplitudes():
    """(|i> + (-1)^s |j>)/sqrt(2)."""
    state = prepare(open_shell_pair("1001", "0110", 1))
    assert state.amplitudes[9] == pytest.approx(1 / math.sqrt(2))
    assert state.amplitudes[6] == pytest.approx(-1 / math.sqrt(2))


@pytest.mark.parametrize("spec, exc", [
    ("012", ValueError),
    (OpenShellPair("0011", "0011", 0), ValueError),
    (OpenShellPair("0011", "0111", 0), ValueError),
])
def test_prepare_rejects_bad_specs(spec, exc):
    """Bad characters, repeated patterns and mixed particle numbers."""
    with pytest.raises(exc):
        prepare(spec)


def test_prepare_length_mismatch():
    """A bitstring must match the register."""
    with pytest.raises(DimensionError):
        prepare("011", n_qubits=4)


def test_parse_state_spec():
    """Plain bitstrings and pair specs."""
    assert parse_state_spec(" 0101 ") == "0101"
    assert parse_state_spec("pair:1001,0110,1") == OpenShellPair("1001", "0110", 1)
    with pytest.raises(ValueError):
        parse_state_spec("pair:1001,0110")


@pytest.mark.parametrize("label", ["X0", "Y1", "Z0 Z1", "X0 Y2", "Y0 Y1 Y2"])
def test_rotation_matches_matrix_exponential(rng, label):
    """exp(-i theta sigma) applied in place equals expm."""
    sigma = PauliTerm.from_label(3, label)
    state = _random_state(rng, 3)
    theta = 0.37
    out = apply_pauli_rotation(state, sigma, theta)
    ref = scipy.linalg.expm(-1j * theta * sigma.to_matrix()) @ state.amplitudes
    np.testing.assert_allclose(out.amplitudes, ref, atol=1e-12)
    assert out.norm == pytest.approx(1.0)


def test_rotation_needs_unit_coefficient():
    """Weighted strings are not rotation generators."""
    with pytest.raises(ValueError):
        apply_pauli_rotation(_plus(), PauliTerm.from_label(1, "X0", 0.5), 0.1)


def test_braket_variants(rng, two_qubit_h):
    """None is the overlap; terms and sums act on the ket."""
    a, b = _random_state(rng, 2), _random_state(rng, 2)
    assert braket(a, None, b) == pytest.approx(np.vdot(a.amplitudes, b.amplitudes))
    x1 = PauliTerm.from_label(2, "X1")
    assert braket(a, x1, b) == pytest.approx(a.amplitudes.conj() @ x1.to_matrix() @ b.amplitudes)
    assert braket(a, two_qubit_h, b) == pytest.approx(
        a.amplitudes.conj() @ two_qubit_h.to_matrix() @ b.amplitudes)
    with pytest.raises(DimensionError):
        braket(a, None, _plus())


def test_exact_ite_matches_expm(two_qubit_h):
    """Normalized exp(-tau H)|psi> and c = <psi|exp(-2 tau H)|psi>."""
    state = _plus(2)
    tau = 0.3
    out, c = exact_ite(state, two_qubit_h, tau)
    prop = scipy.linalg.expm(-tau * two_qubit_h.to_matrix()) @ state.amplitudes
    np.testing.assert_allclose(out.amplitudes, prop / np.linalg.norm(prop), atol=1e-12)
    assert c == pytest.approx(np.vdot(prop, prop).real, rel=1e-12)


def test_exact_ite_rejects_non_positive_tau(z0):
    """tau must be positive."""
    with pytest.raises(ValueError):
        exact_ite(_plus(), z0, 0.0)


def test_series_cap_is_reported(z0):
    """A truncated series raises instead of returning a wrong state."""
    with pytest.raises(SeriesNotConverged):
        imag_propagate(_plus().amplitudes, z0, 5.0, 0.0, max_terms=5)


def test_composed_evolution_after_halving(monkeypatch, two_qubit_h):
    """Halved and composed steps give the same state and the product of norms."""
    original = statevec.exact_ite

    def capped(state, h, tau):
        if tau > 0.3:
            raise SeriesNotConverged("cap")
        return original(state, h, tau)

    monkeypatch.setattr(statevec, "exact_ite", capped)
    state = _plus(2)
    out, c = exact_ite_composed(state, two_qubit_h, 1.0)
    prop = scipy.linalg.expm(-two_qubit_h.to_matrix()) @ state.amplitudes
    np.testing.assert_allclose(out.amplitudes, prop / np.linalg.norm(prop), atol=1e-10)
    assert c == pytest.approx(np.vdot(prop, prop).real, rel=1e-10)


def test_exact_trajectory_descends(two_qubit_h):
    """Energies fall monotonically toward the ground state."""
    traj = run_exact_ite(prepare("00"), two_qubit_h, 0.2, 60)
    assert len(traj.states) == len(traj.energies) == 61
    assert len(traj.c) == 60
    assert all(e1 <= e0 + 1e-12 for e0, e1 in zip(traj.energies, traj.energies[1:]))
    ground = np.linalg.eigvalsh(two_qubit_h.to_matrix())[0]
    assert traj.energies[-1] == pytest.approx(ground, abs=1e-4)


def test_exact_diag_full_spectrum(two_qubit_h):
    """Without a sector the whole register is diagonalized."""
    decomp = exact_diag(two_qubit_h)
    np.testing.assert_allclose(decomp.eigenvalues, np.linalg.eigvalsh(two_qubit_h.to_matrix()), atol=1e-12)
    v = decomp.vector(0)
    assert expectation(v, two_qubit_h) == pytest.approx(decomp.eigenvalues[0])


def test_exact_diag_limits(h2_hamiltonian):
    """Oversized registers and empty sectors are rejected."""
    with pytest.raises(DimensionError):
        exact_diag(h2_hamiltonian, limit=3)
    with pytest.raises(DimensionError):
        exact_diag(h2_hamiltonian, n_electrons=5)


def test_sector_indices():
    """One alpha and one beta electron in two spatial orbitals."""
    assert list(sector_indices(4, 2, 0.0)) == [3, 6, 9, 12]
    assert list(sector_indices(4, 1)) == [1, 2, 4, 8]


def test_reachable_levels_of_closed_shells(h2_hamiltonian):
    """Closed-shell determinants only reach the two gerade singlets."""
    decomp = exact_diag(h2_hamiltonian, n_electrons=2)
    for bits in ("0011", "1100"):
        levels = reachable_levels(decomp, [prepare(bits)], 2)
        np.testing.assert_allclose(levels, [H2_GROUND, H2_DOUBLY_EXCITED], atol=1e-10)


def test_h4_levels_reached_by_closed_shells(h4_hamiltonian):
    """The open-shell level between the two closed-shell states is skipped."""
    decomp = exact_diag(h4_hamiltonian, n_electrons=4, sz=0.0)
    levels = reachable_levels(decomp, [prepare("00001111"), prepare("00110011")], 2)
    np.testing.assert_allclose(levels, [H4_GROUND, H4_SECOND_AG], atol=1e-6)
    assert decomp.eigenvalues[0] == pytest.approx(H4_GROUND, abs=1e-6)
    assert decomp.eigenvalues[1] < H4_SECOND_AG - 0.1
