"""
statevec.py

Dense statevector engine and the exact oracles.

Qubit q is bit q of the amplitude index, so the rightmost character of a
printed ket is qubit 0: "0011" is index 3.

Environment:
  QITE_DENSE_LIMIT: largest register exact_diag will diagonalize (default 14)
"""

import logging
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from errors import DimensionError, SeriesNotConverged
from pauli_core import PHASES, PauliSum, PauliTerm, bit_parity, popcount

logger = logging.getLogger("statevec")

DENSE_LIMIT = int(os.getenv("QITE_DENSE_LIMIT", "14"))

SERIES_TOL = 1e-14
SERIES_MAX_TERMS = 400


@dataclass
class StateVector:
    amplitudes: np.ndarray
    n_qubits: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise DimensionError(
                f"expected {1 << self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {self.amplitudes.shape}"
            )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        return StateVector(self.amplitudes / self.norm, self.n_qubits)


@dataclass(frozen=True)
class OpenShellPair:
    """(|bits_i> + (-1)^s |bits_j>)/sqrt(2).

    Whether s = 0 gives the singlet depends on the orbital ordering of the two
    patterns; check with S^2 when it matters.
    """

    bits_i: str
    bits_j: str
    s: int = 0


StateSpec = Union[str, OpenShellPair]


def open_shell_pair(bits_i: str, bits_j: str, s: int = 0) -> OpenShellPair:
    return OpenShellPair(bits_i, bits_j, s)


def _bits_to_index(bits: str, n_qubits: int) -> int:
    if len(bits) != n_qubits:
        raise DimensionError(f"bitstring {bits!r} has length {len(bits)}, expected {n_qubits}")
    if set(bits) - {"0", "1"}:
        raise ValueError(f"bitstring {bits!r} may only contain 0 and 1")
    return int(bits, 2)


def prepare(spec: StateSpec, n_qubits: Optional[int] = None) -> StateVector:
    if isinstance(spec, OpenShellPair):
        n = n_qubits if n_qubits is not None else len(spec.bits_i)
        i = _bits_to_index(spec.bits_i, n)
        j = _bits_to_index(spec.bits_j, n)
        if i == j:
            raise ValueError(f"open-shell pair needs two different patterns, got {spec.bits_i!r} twice")
        if popcount(i) != popcount(j):
            raise ValueError(f"patterns {spec.bits_i!r} and {spec.bits_j!r} differ in particle number")
        amps = np.zeros(1 << n, dtype=complex)
        amps[i] = 1.0 / math.sqrt(2.0)
        amps[j] = (-1.0) ** spec.s / math.sqrt(2.0)
        return StateVector(amps, n)
    n = n_qubits if n_qubits is not None else len(spec)
    amps = np.zeros(1 << n, dtype=complex)
    amps[_bits_to_index(spec, n)] = 1.0
    return StateVector(amps, n)


def parse_state_spec(text: str) -> StateSpec:
    """``0011`` or ``pair:0110,1001,0``."""
    text = text.strip()
    if text.startswith("pair:"):
        parts = [p.strip() for p in text[len("pair:"):].split(",")]
        if len(parts) != 3:
            raise ValueError(f"pair spec needs 'pair:<bits>,<bits>,<s>', got {text!r}")
        return OpenShellPair(parts[0], parts[1], int(parts[2]))
    return text


# ---------------------------------------------------------------------------
# Pauli action
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _indices(n_qubits: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits)
    idx.setflags(write=False)
    return idx


@lru_cache(maxsize=8192)
def _signs(n_qubits: int, z_mask: int) -> np.ndarray:
    s = (1 - 2 * bit_parity(_indices(n_qubits), z_mask)).astype(float)
    s.setflags(write=False)
    return s


def pauli_apply(amplitudes: np.ndarray, term: PauliTerm) -> np.ndarray:
    """Amplitudes of term|psi> (coefficient included)."""
    idx = _indices(term.n_qubits)
    phase = term.coeff * PHASES[popcount(term.x_mask & term.z_mask) % 4]
    out = np.empty_like(amplitudes)
    out[idx ^ term.x_mask] = phase * _signs(term.n_qubits, term.z_mask) * amplitudes
    return out


def apply_pauli_rotation(state: StateVector, sigma: PauliTerm, theta: float) -> StateVector:
    """exp(-i theta sigma)|psi> = cos(theta)|psi> - i sin(theta) sigma|psi>."""
    if abs(sigma.coeff - 1.0) > 1e-12:
        raise ValueError(f"rotation generator must have coefficient 1, got {sigma.coeff}")
    if sigma.n_qubits != state.n_qubits:
        raise DimensionError(f"qubit-count mismatch: {sigma.n_qubits} vs {state.n_qubits}")
    amps = state.amplitudes
    new = math.cos(theta) * amps - 1j * math.sin(theta) * pauli_apply(amps, sigma)
    return StateVector(new, state.n_qubits)


def apply_op(op: PauliSum, amplitudes: np.ndarray) -> np.ndarray:
    return op.to_sparse() @ amplitudes


def braket(bra: StateVector, op: Union[PauliSum, PauliTerm, None], ket: StateVector) -> complex:
    if bra.n_qubits != ket.n_qubits:
        raise DimensionError(f"bra on {bra.n_qubits} qubits, ket on {ket.n_qubits}")
    if op is None:
        return complex(np.vdot(bra.amplitudes, ket.amplitudes))
    if op.n_qubits != ket.n_qubits:
        raise DimensionError(f"operator on {op.n_qubits} qubits, states on {ket.n_qubits}")
    if isinstance(op, PauliTerm):
        return complex(np.vdot(bra.amplitudes, pauli_apply(ket.amplitudes, op)))
    return complex(np.vdot(bra.amplitudes, apply_op(op, ket.amplitudes)))


def expectation(state: StateVector, op: PauliSum) -> float:
    return braket(state, op, state).real


# ---------------------------------------------------------------------------
# Exact imaginary-time evolution
# ---------------------------------------------------------------------------

def imag_propagate(amplitudes: np.ndarray, h: PauliSum, tau: float, shift: float,
                   max_terms: int = SERIES_MAX_TERMS) -> np.ndarray:
    """Unnormalized exp(-tau (H - shift))|psi> by Taylor series."""
    mat = h.to_sparse()
    term = np.array(amplitudes, dtype=complex)
    total = term.copy()
    for k in range(1, max_terms + 1):
        term = (-tau / k) * (mat @ term - shift * term)
        total += term
        term_norm = np.linalg.norm(term)
        if not np.isfinite(term_norm):
            break
        if term_norm <= SERIES_TOL * max(1.0, np.linalg.norm(total)):
            return total
    raise SeriesNotConverged(
        f"Taylor series for exp(-tau(H-E)) did not converge in {max_terms} terms at tau={tau:g}; "
        "halve tau and compose"
    )


def exact_ite(state: StateVector, h: PauliSum, tau: float) -> Tuple[StateVector, float]:
    """Normalized exp(-tau H)|psi> and c = <psi|exp(-2 tau H)|psi>."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    energy = expectation(state, h)
    v = imag_propagate(state.amplitudes, h, tau, energy)
    nrm2 = float(np.vdot(v, v).real)
    c = math.exp(-2.0 * tau * energy) * nrm2
    return StateVector(v / math.sqrt(nrm2), state.n_qubits), c


def exact_ite_composed(state: StateVector, h: PauliSum, tau: float,
                       max_halvings: int = 12) -> Tuple[StateVector, float]:
    """exact_ite that halves tau and composes when the series cap is hit."""
    try:
        return exact_ite(state, h, tau)
    except SeriesNotConverged:
        if max_halvings <= 0:
            raise
        logger.debug("halving tau=%g", tau)
        half, c1 = exact_ite_composed(state, h, tau / 2, max_halvings - 1)
        out, c2 = exact_ite_composed(half, h, tau / 2, max_halvings - 1)
        return out, c1 * c2


@dataclass
class ExactTrajectory:
    states: List[StateVector] = field(default_factory=list)
    energies: List[float] = field(default_factory=list)
    # c[l] = <Phi_l| exp(-2 dbeta H) |Phi_l>
    c: List[float] = field(default_factory=list)


def run_exact_ite(init: StateVector, h: PauliSum, dbeta: float, n_steps: int) -> ExactTrajectory:
    traj = ExactTrajectory()
    state = init
    for _ in range(n_steps):
        traj.states.append(state)
        traj.energies.append(expectation(state, h))
        state, c = exact_ite_composed(state, h, dbeta)
        traj.c.append(c)
    traj.states.append(state)
    traj.energies.append(expectation(state, h))
    return traj


# ---------------------------------------------------------------------------
# Exact diagonalization
# ---------------------------------------------------------------------------

@dataclass
class SpectralDecomposition:
    eigenvalues: np.ndarray
    # columns, embedded in the full 2^n register
    eigenvectors: np.ndarray
    n_qubits: int

    def vector(self, k: int) -> StateVector:
        return StateVector(self.eigenvectors[:, k], self.n_qubits)


def sector_indices(n_qubits: int, n_electrons: Optional[int] = None,
                   sz: Optional[float] = None) -> np.ndarray:
    """Basis indices with the given particle number and S_z (interleaved spins)."""
    alpha_mask = int("01" * ((n_qubits + 1) // 2), 2) & ((1 << n_qubits) - 1)
    keep = []
    for i in range(1 << n_qubits):
        n_a = popcount(i & alpha_mask)
        n_b = popcount(i & ~alpha_mask)
        if n_electrons is not None and n_a + n_b != n_electrons:
            continue
        if sz is not None and abs(0.5 * (n_a - n_b) - sz) > 1e-9:
            continue
        keep.append(i)
    return np.array(keep, dtype=np.int64)


def exact_diag(h: PauliSum, n_electrons: Optional[int] = None, sz: Optional[float] = None,
               limit: Optional[int] = None) -> SpectralDecomposition:
    limit = DENSE_LIMIT if limit is None else limit
    if h.n_qubits > limit:
        raise DimensionError(f"{h.n_qubits} qubits exceeds the dense-diagonalization limit of {limit}")
    dim = 1 << h.n_qubits
    mat = h.to_sparse()
    if n_electrons is None and sz is None:
        basis = np.arange(dim)
        dense = mat.toarray()
    else:
        basis = sector_indices(h.n_qubits, n_electrons, sz)
        if basis.size == 0:
            raise DimensionError(f"empty sector n_electrons={n_electrons}, sz={sz}")
        dense = mat[basis][:, basis].toarray()
    evals, evecs = scipy.linalg.eigh(dense)
    full = np.zeros((dim, evals.size), dtype=complex)
    full[basis, :] = evecs
    return SpectralDecomposition(evals, full, h.n_qubits)


def spin_labels(decomp: SpectralDecomposition, s2: PauliSum) -> np.ndarray:
    mat = s2.to_sparse()
    vecs = decomp.eigenvectors
    return np.real(np.einsum("ik,ik->k", vecs.conj(), mat @ vecs))


def reachable_levels(decomp: SpectralDecomposition, states: Sequence[StateVector], k: int,
                     degeneracy_tol: float = 1e-8, overlap_tol: float = 1e-6) -> np.ndarray:
    """Lowest k exact levels whose eigenspaces overlap the span of ``states``.

    Imaginary-time evolution of a model space can only reach these levels, so
    they are the reference energies for a run started from ``states``.
    """
    basis, _ = np.linalg.qr(np.column_stack([s.amplitudes for s in states]))
    evals = decomp.eigenvalues
    out: List[float] = []
    start = 0
    while start < evals.size and len(out) < k:
        stop = start + 1
        while stop < evals.size and evals[stop] - evals[start] < degeneracy_tol:
            stop += 1
        overlap = basis.conj().T @ decomp.eigenvectors[:, start:stop]
        sv = np.linalg.svd(overlap, compute_uv=False)
        rank = int(np.sum(sv > overlap_tol))
        out.extend([float(evals[start])] * rank)
        start = stop
    return np.array(out[:k])
