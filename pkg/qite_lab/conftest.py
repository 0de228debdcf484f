import math
from pathlib import Path

import numpy as np
import pytest

from fermion_map import build_hamiltonian, build_spin_ops, parse_fcidump
from pauli_core import parse_pauli_text

FIXTURES = Path(__file__).parent / "fixtures"

# scripts, not test modules
collect_ignore = ["smoke_test.py", "fixtures/make_fixtures.py"]

# closed-form two-orbital H2 energies from the tabulated integrals
H2_E_SIGMA_G2 = 2 * -1.2528 + 0.6746
H2_E_SIGMA_U2 = 2 * -0.4756 + 0.6975
H2_K = 0.1813
H2_E_NUC = 1 / 1.4
_mean = 0.5 * (H2_E_SIGMA_G2 + H2_E_SIGMA_U2)
_root = math.hypot(0.5 * (H2_E_SIGMA_U2 - H2_E_SIGMA_G2), H2_K)
H2_GROUND = _mean - _root + H2_E_NUC
H2_DOUBLY_EXCITED = _mean + _root + H2_E_NUC
H2_TRIPLET = -1.2528 - 0.4756 + 0.6636 - 0.1813 + H2_E_NUC
H2_OPEN_SINGLET = -1.2528 - 0.4756 + 0.6636 + 0.1813 + H2_E_NUC

# square H4 (1 angstrom, STO-6G, zeta = 1.24): ground and second totally symmetric singlet
H4_GROUND = -1.932645
H4_SECOND_AG = -1.781254


@pytest.fixture
def fixtures_dir():
    """Directory holding the bundled data files."""
    return FIXTURES


@pytest.fixture
def h2_ints():
    """Minimal-basis H2 integrals at 1.4 bohr."""
    return parse_fcidump(FIXTURES / "h2_minimal.fcidump")


@pytest.fixture
def h2_hamiltonian(h2_ints):
    """Qubit Hamiltonian of H2 (4 qubits)."""
    return build_hamiltonian(h2_ints)


@pytest.fixture
def h2_spin(h2_ints):
    """(S^2, S_z, N) for the two H2 spatial orbitals."""
    return build_spin_ops(h2_ints.n_spatial)


@pytest.fixture(scope="session")
def h4_ints():
    """Square H4 integrals in symmetry-adapted orbitals."""
    return parse_fcidump(FIXTURES / "h4_square.fcidump")


@pytest.fixture(scope="session")
def h4_hamiltonian(h4_ints):
    """Qubit Hamiltonian of square H4 (8 qubits)."""
    return build_hamiltonian(h4_ints)


@pytest.fixture
def hubbard_ints():
    """Half-filled four-site Hubbard ring in the Walsh orbital basis."""
    return parse_fcidump(FIXTURES / "hubbard_ring4.fcidump")


@pytest.fixture
def z0():
    """H = Z0 on one qubit."""
    return parse_pauli_text("1.0 Z0", 1)


@pytest.fixture
def two_qubit_h():
    """Toy two-spin Hamiltonian from the fixtures."""
    return parse_pauli_text((FIXTURES / "two_qubit.pauli").read_text(), 2)


@pytest.fixture
def rng():
    """Seeded random generator."""
    return np.random.default_rng(1234)
