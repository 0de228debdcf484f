"""
msqite.py

Model-space QITE: a set of n states propagated together so that they stay an
orthonormal basis of the low-lying space.

One exact step maps the model space to the Loewdin-orthonormalized targets

    Phi'_I = sum_J exp(-dbeta (H - E_J)) |Phi_J> d_JI,   d = S~^(-1/2)

with S~ the overlap of the propagated states truncated at first order in
dbeta. State-specific mode fits one unitary per state to its target (the d
term in b keeps the states apart); state-averaged mode fits a single unitary
to all targets at once and preserves orthonormality exactly.

The propagator may be spin shifted, H + lambda (S^2 - s(s+1)); energies,
H_IJ and the effective spectrum always use the physical H.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from errors import ConfigError, NotPositiveDefinite, SingularOverlapError
from fermion_map import OperatorPool
from pauli_core import PauliSum
from qite import StepReport, apply_trotter, build_b, build_M, pool_columns, solve_amplitudes
from qlanczos import MAX_VECTORS, QlanczosResult, krylov_grid, stabilized_solve
from statevec import StateVector, apply_op, expectation, imag_propagate

logger = logging.getLogger("msqite")

MS_MODES = ("state_specific", "state_averaged")
SINGULAR_S = 1e-10
# condition number above which a D-matrix product is treated as singular
D_COND_LIMIT = 1e12


def operator_matrix(states: Sequence[StateVector], op: Optional[PauliSum]) -> np.ndarray:
    """<Phi_I|op|Phi_J> (plain overlaps when op is None)."""
    kets = np.column_stack([s.amplitudes for s in states])
    images = kets if op is None else np.column_stack([apply_op(op, s.amplitudes) for s in states])
    m = kets.conj().T @ images
    m = 0.5 * (m + m.conj().T)
    return m.real if np.allclose(m.imag, 0.0, atol=1e-14) else m


@dataclass
class ModelSpace:
    states: List[StateVector]
    energies: np.ndarray
    overlap: np.ndarray
    hamiltonian: np.ndarray

    @classmethod
    def from_states(cls, states: Sequence[StateVector], h: PauliSum) -> "ModelSpace":
        states = list(states)
        if not states:
            raise ConfigError("model space needs at least one state")
        hm = operator_matrix(states, h)
        return cls(states, np.real(np.diag(hm)).copy(), operator_matrix(states, None), hm)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def max_offdiag_overlap(self) -> float:
        if self.n_states < 2:
            return 0.0
        off = np.abs(self.overlap - np.diag(np.diag(self.overlap)))
        return float(off.max())


@dataclass
class MsqiteConfig:
    dbeta: float
    beta_max: float
    pool: OperatorPool
    mode: str = "state_specific"
    reg: float = 0.0
    grad_tol: float = 1e-8
    orthogonality_term: bool = True
    spin_shift: float = 0.0
    spin_target: float = 0.0
    s2: Optional[PauliSum] = None
    # form d at every step even when b does not need it (MS-QLanczos)
    keep_d: bool = False

    def __post_init__(self):
        if not self.dbeta > 0:
            raise ConfigError(f"dbeta must be positive, got {self.dbeta}")
        if self.dbeta > self.beta_max + 1e-12:
            raise ConfigError(f"dbeta={self.dbeta} exceeds beta_max={self.beta_max}")
        if self.mode not in MS_MODES:
            raise ConfigError(f"mode must be one of {MS_MODES}, got {self.mode!r}")
        if self.reg < 0:
            raise ConfigError(f"reg must be >= 0, got {self.reg}")
        if self.spin_shift < 0:
            raise ConfigError(f"spin_shift must be >= 0, got {self.spin_shift}")
        if self.spin_shift > 0 and self.s2 is None:
            raise ConfigError("spin_shift needs the S^2 operator")
        if len(self.pool) == 0:
            raise ConfigError("operator pool is empty")

    @property
    def n_steps(self) -> int:
        return int(round(self.beta_max / self.dbeta))

    @property
    def uses_d_in_b(self) -> bool:
        return self.mode == "state_specific" and self.orthogonality_term


def shift_hamiltonian_spin(h: PauliSum, s2: PauliSum, lam: float, s: float) -> PauliSum:
    """H + lam (S^2 - s(s+1))."""
    if not lam > 0:
        raise ConfigError(f"spin-shift lambda must be positive, got {lam}")
    target = s * (s + 1.0)
    return (h + (s2 - PauliSum.identity(h.n_qubits, target)) * lam).real_part()


def propagator(h: PauliSum, cfg: MsqiteConfig) -> PauliSum:
    if cfg.spin_shift > 0:
        return shift_hamiltonian_spin(h, cfg.s2, cfg.spin_shift, cfg.spin_target)
    return h


def lowdin_d(S: np.ndarray, H: np.ndarray, E: Sequence[float], dbeta: float) -> np.ndarray:
    """Symmetric inverse square root of the first-order propagated overlap."""
    S = np.asarray(S)
    E = np.asarray(E, dtype=float)
    mean_e = 0.5 * (E[:, None] + E[None, :])
    s_tilde = S - 2.0 * dbeta * (np.asarray(H) - mean_e * S)
    s_tilde = 0.5 * (s_tilde + s_tilde.conj().T)
    eta, u = scipy.linalg.eigh(s_tilde)
    if eta.min() <= 0:
        raise NotPositiveDefinite(
            f"propagated overlap has eigenvalue {eta.min():.3e} <= 0; reduce dbeta"
        )
    return (u / np.sqrt(eta)) @ u.conj().T


@dataclass
class MsStep:
    """Outcome of one model-space step; norms refer to the input states."""

    space: ModelSpace
    grad_norms: np.ndarray
    a_norms: np.ndarray
    d: Optional[np.ndarray]
    # diagonal of the propagator in the input space, the shifts of this step
    prop_energies: np.ndarray


def _orthogonality_b(index: int, d: np.ndarray, columns: List[np.ndarray],
                     states: Sequence[StateVector], dbeta: float) -> np.ndarray:
    """(2/dbeta) sum_{J != I} Im(d_JI <Phi_I|sigma_mu|Phi_J>)."""
    bra = states[index].amplitudes.conj()
    acc = np.zeros(columns[index].shape[1])
    for j, cols_j in enumerate(columns):
        if j == index:
            continue
        acc += np.imag(d[j, index] * (bra @ cols_j))
    return (2.0 / dbeta) * acc


def _step(space: ModelSpace, h: PauliSum, h_prop: PauliSum, cfg: MsqiteConfig) -> MsStep:
    states = space.states
    n = len(states)
    prop_matrix = space.hamiltonian if h_prop is h else operator_matrix(states, h_prop)
    prop_energies = np.real(np.diag(prop_matrix)).copy()

    d = None
    if n > 1 and (cfg.uses_d_in_b or cfg.keep_d):
        d = lowdin_d(space.overlap, prop_matrix, prop_energies, cfg.dbeta)

    columns = [pool_columns(s, cfg.pool) for s in states]
    ms = [build_M(s, cfg.pool, columns=c) for s, c in zip(states, columns)]
    bs = [build_b(s, h_prop, cfg.pool, "commutator", columns=c) for s, c in zip(states, columns)]
    if d is not None and cfg.uses_d_in_b:
        bs = [b + _orthogonality_b(i, d, columns, states, cfg.dbeta) for i, b in enumerate(bs)]
    grad_norms = np.array([np.linalg.norm(b) for b in bs])

    if cfg.mode == "state_specific":
        amps = [solve_amplitudes(m, b, cfg.reg) for m, b in zip(ms, bs)]
    else:
        shared = solve_amplitudes(sum(ms), sum(bs), cfg.reg)
        amps = [shared] * n
    new_states = [
        apply_trotter(s, cfg.pool, cfg.dbeta * a).normalized() for s, a in zip(states, amps)
    ]
    a_norms = np.array([np.linalg.norm(a) for a in amps])
    return MsStep(ModelSpace.from_states(new_states, h), grad_norms, a_norms, d, prop_energies)


def msqite_step(space: ModelSpace, h: PauliSum, mode: str, cfg: MsqiteConfig) -> ModelSpace:
    if mode != cfg.mode:
        raise ConfigError(f"step mode {mode!r} does not match configured mode {cfg.mode!r}")
    return _step(space, h, propagator(h, cfg), cfg).space


def effective_spectrum(space: ModelSpace) -> np.ndarray:
    """Eigenvalues of H c = S c E, ascending."""
    s_eigs = scipy.linalg.eigvalsh(space.overlap)
    if s_eigs.min() < SINGULAR_S:
        raise SingularOverlapError(f"model-space overlap is singular (eigenvalue {s_eigs.min():.3e})")
    return scipy.linalg.eigh(space.hamiltonian, space.overlap, eigvals_only=True)


# ---------------------------------------------------------------------------
# MS-QLanczos
# ---------------------------------------------------------------------------

@dataclass
class DMatrixHistory:
    """Per-step model-space data for MS-QLanczos.

    Entry l of ``d_tilde`` maps the states of step l to those of step l + 1:
    Phi^(l+1) = exp(-dbeta (H - E0)) Phi^(l) d~^(l).
    """

    dbeta: float
    e0: float
    d: List[np.ndarray] = field(default_factory=list)
    d_tilde: List[np.ndarray] = field(default_factory=list)
    overlaps: List[np.ndarray] = field(default_factory=list)
    hamiltonians: List[np.ndarray] = field(default_factory=list)
    # extra operator blocks (e.g. "s2"), one per step
    operators: Dict[str, List[np.ndarray]] = field(default_factory=dict)

    def record_space(self, states: Sequence[StateVector], overlap: np.ndarray, hamiltonian: np.ndarray,
                     operators: Optional[Dict[str, PauliSum]] = None) -> None:
        self.overlaps.append(overlap)
        self.hamiltonians.append(hamiltonian)
        for name, op in (operators or {}).items():
            self.operators.setdefault(name, []).append(operator_matrix(states, op))

    def record_d(self, d: np.ndarray, prop_energies: Sequence[float]) -> None:
        shift = np.exp(self.dbeta * (np.asarray(prop_energies) - self.e0))
        self.d.append(d)
        self.d_tilde.append(shift[:, None] * d)

    @property
    def n_states(self) -> int:
        return self.overlaps[0].shape[0]

    def __len__(self) -> int:
        return len(self.overlaps)

    def d_product(self, first: int, last: int) -> np.ndarray:
        """d~^(first) d~^(first+1) ... d~^(last); identity when last < first."""
        out = np.eye(self.n_states)
        for ell in range(first, last + 1):
            out = out @ self.d_tilde[ell]
        return out


def _inverse(m: np.ndarray) -> np.ndarray:
    if np.linalg.cond(m) > D_COND_LIMIT:
        raise SingularOverlapError("d-matrix product is not invertible")
    return scipy.linalg.inv(m)


def ms_block_matrix(history: DMatrixHistory, blocks: Sequence[np.ndarray],
                    newest: Optional[int] = None) -> Tuple[np.ndarray, List[Tuple[int, int]]]:
    """Krylov-space matrix of an operator commuting with the propagator.

    Block (l, l') with l >= l' and m = (l + l')/2 is
    D^(m..l-1)^dagger X^(m) (D^(l'..m-1))^-1; the upper blocks follow by
    Hermitian symmetry. Rows are labelled (l, I).
    """
    newest = len(history) - 1 if newest is None else newest
    if len(history.d_tilde) < newest:
        raise ValueError(f"d matrices recorded for {len(history.d_tilde)} steps, need {newest}")
    grid = krylov_grid(newest)
    n = history.n_states
    k = len(grid)
    dtype = np.result_type(*blocks[: newest + 1], *history.d_tilde[:newest])
    out = np.zeros((k * n, k * n), dtype=dtype)
    for a, la in enumerate(grid):
        for b, lb in enumerate(grid[: a + 1]):
            mid = (la + lb) // 2
            left = history.d_product(mid, la - 1)
            right = _inverse(history.d_product(lb, mid - 1))
            block = left.conj().T @ blocks[mid] @ right
            out[a * n:(a + 1) * n, b * n:(b + 1) * n] = block
            out[b * n:(b + 1) * n, a * n:(a + 1) * n] = block.conj().T
    labels = [(ell, i) for ell in grid for i in range(n)]
    return out, labels


def ms_qlanczos_matrices(history: DMatrixHistory,
                         newest: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, List[Tuple[int, int]]]:
    s, labels = ms_block_matrix(history, history.overlaps, newest)
    h, _ = ms_block_matrix(history, history.hamiltonians, newest)
    return s, h, labels


def ms_qlanczos(history: DMatrixHistory, newest: Optional[int] = None, **solve_kw) -> QlanczosResult:
    s, h, labels = ms_qlanczos_matrices(history, newest)
    solve_kw.setdefault("max_vectors", MAX_VECTORS * history.n_states)
    return stabilized_solve(s, h, labels, **solve_kw)


def ms_qlanczos_expectations(result: QlanczosResult, history: DMatrixHistory, name: str,
                             newest: Optional[int] = None) -> np.ndarray:
    """<v_k|op|v_k> for each MS-QLanczos eigenvector (e.g. name="s2")."""
    op, _ = ms_block_matrix(history, history.operators[name], newest)
    sub = op[np.ix_(result.chosen, result.chosen)]
    v = result.vectors
    return np.real(np.einsum("ik,ij,jk->k", v.conj(), sub, v))


# ---------------------------------------------------------------------------
# Drivers and oracles
# ---------------------------------------------------------------------------

@dataclass
class MsqiteRun:
    reports: List[StepReport] = field(default_factory=list)
    spaces: List[ModelSpace] = field(default_factory=list)
    effective: List[np.ndarray] = field(default_factory=list)
    max_overlap: List[float] = field(default_factory=list)
    history: Optional[DMatrixHistory] = None
    converged: bool = False

    @property
    def final_space(self) -> ModelSpace:
        return self.spaces[-1]


def _s2_values(states: Sequence[StateVector], cfg: MsqiteConfig) -> List[float]:
    if cfg.s2 is None:
        return [float("nan")] * len(states)
    return [expectation(s, cfg.s2) for s in states]


def run_msqite(init: Sequence[StateVector], h: PauliSum, cfg: MsqiteConfig) -> MsqiteRun:
    h_prop = propagator(h, cfg)
    space = ModelSpace.from_states(init, h)
    if space.n_states > 1 and space.max_offdiag_overlap() > 1e-8:
        logger.warning("initial model space is not orthonormal (max |S_IJ| = %.3e)", space.max_offdiag_overlap())
    init_prop = space.energies if h_prop is h else np.real(np.diag(operator_matrix(space.states, h_prop)))
    history = DMatrixHistory(cfg.dbeta, float(np.mean(init_prop)))
    extra_ops = {"s2": cfg.s2} if cfg.s2 is not None else None

    run = MsqiteRun(history=history)
    n_steps = cfg.n_steps
    for ell in range(n_steps + 1):
        run.spaces.append(space)
        run.effective.append(effective_spectrum(space))
        run.max_overlap.append(space.max_offdiag_overlap())
        history.record_space(space.states, space.overlap, space.hamiltonian, extra_ops)
        s2_vals = _s2_values(space.states, cfg)
        beta = ell * cfg.dbeta

        step = None
        if ell < n_steps:
            step = _step(space, h, h_prop, cfg)
            grads, a_norms = step.grad_norms, step.a_norms
        else:
            grads = _final_grads(space, h_prop, cfg)
            a_norms = np.zeros(space.n_states)
        converged = _converged(grads, space, h_prop, cfg)
        if converged:
            a_norms = np.zeros(space.n_states)
        for i in range(space.n_states):
            run.reports.append(StepReport(ell, beta, float(space.energies[i]), float(grads[i]),
                                          s2_vals[i], float(a_norms[i]), state=i))
        logger.debug("ell=%d beta=%.4f energies=%s max|S_IJ|=%.2e", ell, beta,
                     np.array2string(space.energies, precision=10), run.max_overlap[-1])
        if converged or step is None:
            run.converged = converged
            logger.info("MSQITE (%s) stopped at ell=%d beta=%.4f effective=%s (%s)", cfg.mode, ell, beta,
                        np.array2string(run.effective[-1], precision=10),
                        "converged" if converged else "beta_max")
            break
        if step.d is not None:
            history.record_d(step.d, step.prop_energies)
        space = step.space
    return run


def _final_grads(space: ModelSpace, h_prop: PauliSum, cfg: MsqiteConfig) -> np.ndarray:
    # gradient of the last state without the orthogonality correction
    return np.array([np.linalg.norm(build_b(s, h_prop, cfg.pool)) for s in space.states])


def _converged(grads: np.ndarray, space: ModelSpace, h_prop: PauliSum, cfg: MsqiteConfig) -> bool:
    if cfg.mode == "state_specific":
        return bool(grads.max() < cfg.grad_tol)
    # individual states of an invariant subspace keep a gradient; their sum does not
    total = sum(build_b(s, h_prop, cfg.pool) for s in space.states)
    return bool(np.linalg.norm(total) < cfg.grad_tol)


def exact_model_space_step(states: Sequence[StateVector], h: PauliSum,
                           dbeta: float) -> Tuple[List[StateVector], np.ndarray, np.ndarray]:
    """Exact Loewdin-orthonormalized step: (new states, d, shift energies E_J)."""
    energies = np.array([expectation(s, h) for s in states])
    prop = np.column_stack([imag_propagate(s.amplitudes, h, dbeta, e) for s, e in zip(states, energies)])
    s_tilde = prop.conj().T @ prop
    s_tilde = 0.5 * (s_tilde + s_tilde.conj().T)
    eta, u = scipy.linalg.eigh(s_tilde)
    if eta.min() <= 0:
        raise NotPositiveDefinite(f"propagated states are linearly dependent (eigenvalue {eta.min():.3e})")
    d = (u / np.sqrt(eta)) @ u.conj().T
    new = prop @ d
    n_qubits = states[0].n_qubits
    d = d.real if np.allclose(d.imag, 0.0, atol=1e-14) else d
    return [StateVector(new[:, i], n_qubits) for i in range(new.shape[1])], d, energies
