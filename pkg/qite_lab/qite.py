"""
qite.py

Single-state quantum imaginary time evolution on a statevector.

Each step replaces exp(-dbeta H) by the unitary exp(-i dbeta A) with
A = sum_mu a_mu sigma_mu. The amplitudes solve M a + b = 0 where

    M_{mu nu} = 2 Re <Phi| sigma_mu sigma_nu |Phi>
    b_mu      = Im <Phi| [H, sigma_mu] |Phi>                 (commutator form)
    b_mu      = (2 / sqrt(c)) Im <Phi| H sigma_mu |Phi>        (legacy form)

with c ~ 1 - 2 dbeta <H> in the legacy form. Both M and b are built from
the columns sigma_mu|Phi> so every pool string is applied once per step.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from errors import ConfigError, NormEstimateError
from fermion_map import OperatorPool
from pauli_core import PauliSum
from statevec import StateVector, apply_op, apply_pauli_rotation, exact_ite_composed, expectation, pauli_apply

logger = logging.getLogger("qite")

B_VARIANTS = ("commutator", "legacy")
# relative singular-value cutoff of the unregularized least-squares solve
PINV_CUTOFF = 1e-8


@dataclass
class QiteConfig:
    dbeta: float
    beta_max: float
    pool: OperatorPool
    b_variant: str = "commutator"
    reg: float = 0.0
    grad_tol: float = 1e-8
    # reporting only
    s2: Optional[PauliSum] = None
    track_fidelity: bool = False

    def __post_init__(self):
        if not self.dbeta > 0:
            raise ConfigError(f"dbeta must be positive, got {self.dbeta}")
        if self.dbeta > self.beta_max + 1e-12:
            raise ConfigError(f"dbeta={self.dbeta} exceeds beta_max={self.beta_max}")
        if self.reg < 0:
            raise ConfigError(f"reg must be >= 0, got {self.reg}")
        if self.b_variant not in B_VARIANTS:
            raise ConfigError(f"b_variant must be one of {B_VARIANTS}, got {self.b_variant!r}")
        if len(self.pool) == 0:
            raise ConfigError("operator pool is empty")

    @property
    def n_steps(self) -> int:
        return int(round(self.beta_max / self.dbeta))


@dataclass
class StepReport:
    """One trace row: state ``ell`` and the step taken from it."""

    ell: int
    beta: float
    energy: float
    grad_norm: float
    s2: float
    a_norm: float
    fidelity_F: Optional[float] = None
    state: int = 0
    # folded-spectrum runs only
    beta2: Optional[float] = None
    folded_residual: Optional[float] = None


@dataclass
class QiteRun:
    reports: List[StepReport] = field(default_factory=list)
    states: List[StateVector] = field(default_factory=list)
    energies: List[float] = field(default_factory=list)
    converged: bool = False

    @property
    def final_state(self) -> StateVector:
        return self.states[-1]


def pool_columns(state: StateVector, pool: OperatorPool) -> np.ndarray:
    """Matrix whose column mu is sigma_mu|Phi>."""
    amps = state.amplitudes
    cols = np.empty((amps.size, len(pool)), dtype=complex)
    for mu, sigma in enumerate(pool.generators):
        cols[:, mu] = pauli_apply(amps, sigma)
    return cols


def build_M(state: StateVector, pool: OperatorPool, columns: Optional[np.ndarray] = None) -> np.ndarray:
    if columns is None:
        columns = pool_columns(state, pool)
    m = 2.0 * np.real(columns.conj().T @ columns)
    m = 0.5 * (m + m.T)
    np.fill_diagonal(m, 2.0)
    return m


def build_b(state: StateVector, h: PauliSum, pool: OperatorPool, variant: str = "commutator",
            dbeta: Optional[float] = None, columns: Optional[np.ndarray] = None) -> np.ndarray:
    if variant not in B_VARIANTS:
        raise ConfigError(f"b_variant must be one of {B_VARIANTS}, got {variant!r}")
    if columns is None:
        columns = pool_columns(state, pool)
    # the identity part of H never contributes to Im<[H, sigma]>
    h_phi = apply_op(h.traceless, state.amplitudes)
    grad = np.imag(h_phi.conj() @ columns)
    if variant == "commutator":
        return 2.0 * grad
    if dbeta is None:
        raise ConfigError("legacy b needs dbeta")
    c = 1.0 - 2.0 * dbeta * expectation(state, h)
    if c <= 0:
        raise NormEstimateError(f"first-order norm estimate c = {c:.6g} <= 0; dbeta * <H> is too large")
    # Im<Phi|H sigma|Phi> picks up the constant term only through Im<Phi|sigma|Phi> = 0
    return (2.0 / math.sqrt(c)) * grad


def solve_amplitudes(M: np.ndarray, b: np.ndarray, reg: float = 0.0) -> np.ndarray:
    """Minimize ||M a + b||^2 + reg ||a||^2."""
    if reg > 0:
        lhs = M.T @ M + reg * np.eye(M.shape[0])
        return scipy.linalg.solve(lhs, -(M.T @ b), assume_a="pos")
    a, *_ = scipy.linalg.lstsq(M, -b, cond=PINV_CUTOFF)
    return a


def apply_trotter(state: StateVector, pool: OperatorPool, thetas: np.ndarray) -> StateVector:
    """prod_mu exp(-i theta_mu sigma_mu) applied in pool order."""
    for sigma, theta in zip(pool.generators, thetas):
        if theta != 0.0:
            state = apply_pauli_rotation(state, sigma, float(theta))
    return state


def step_fidelity_F(state: StateVector, h: PauliSum, a: np.ndarray, cfg: QiteConfig) -> float:
    """||exp(-dbeta H)|Phi>/sqrt(c) - exp(-i dbeta A)|Phi>||^2."""
    target, _ = exact_ite_composed(state, h, cfg.dbeta)
    unitary = apply_trotter(state, cfg.pool, cfg.dbeta * np.asarray(a))
    diff = target.amplitudes - unitary.amplitudes
    return float(np.vdot(diff, diff).real)


def _s2_value(state: StateVector, cfg: QiteConfig) -> float:
    return expectation(state, cfg.s2) if cfg.s2 is not None else float("nan")


def _linear_system(state: StateVector, h: PauliSum, cfg: QiteConfig) -> Tuple[np.ndarray, np.ndarray]:
    cols = pool_columns(state, cfg.pool)
    b = build_b(state, h, cfg.pool, cfg.b_variant, cfg.dbeta, columns=cols)
    return cols, b


def _advance(state: StateVector, h: PauliSum, cfg: QiteConfig, cols: np.ndarray,
             b: np.ndarray) -> Tuple[StateVector, np.ndarray]:
    m = build_M(state, cfg.pool, columns=cols)
    a = solve_amplitudes(m, b, cfg.reg)
    new = apply_trotter(state, cfg.pool, cfg.dbeta * a).normalized()
    return new, a


def qite_step(state: StateVector, h: PauliSum, cfg: QiteConfig, ell: int = 0) -> Tuple[StateVector, StepReport]:
    """Advance state ``ell`` by one step.

    The report describes the new state ``ell + 1`` (energy, <S^2>, |b|) and
    the step that produced it (|a|, fidelity error).
    """
    cols, b = _linear_system(state, h, cfg)
    new, a = _advance(state, h, cfg, cols, b)
    _, b_new = _linear_system(new, h, cfg)
    report = StepReport(
        ell=ell + 1,
        beta=(ell + 1) * cfg.dbeta,
        energy=expectation(new, h),
        grad_norm=float(np.linalg.norm(b_new)),
        s2=_s2_value(new, cfg),
        a_norm=float(np.linalg.norm(a)),
        fidelity_F=step_fidelity_F(state, h, a, cfg) if cfg.track_fidelity else None,
    )
    return new, report


def run_qite(init: StateVector, h: PauliSum, cfg: QiteConfig) -> QiteRun:
    run = QiteRun()
    state = init
    n_steps = cfg.n_steps
    for ell in range(n_steps + 1):
        run.states.append(state)
        cols, b = _linear_system(state, h, cfg)
        grad = float(np.linalg.norm(b))
        energy = expectation(state, h)
        run.energies.append(energy)
        converged = grad < cfg.grad_tol
        if converged or ell == n_steps:
            run.converged = converged
            run.reports.append(StepReport(ell, ell * cfg.dbeta, energy, grad, _s2_value(state, cfg), 0.0))
            logger.info("QITE stopped at ell=%d beta=%.4f energy=%.10f |b|=%.3e (%s)",
                        ell, ell * cfg.dbeta, energy, grad, "converged" if converged else "beta_max")
            break
        new, a = _advance(state, h, cfg, cols, b)
        fid = step_fidelity_F(state, h, a, cfg) if cfg.track_fidelity else None
        run.reports.append(StepReport(ell, ell * cfg.dbeta, energy, grad, _s2_value(state, cfg),
                                      float(np.linalg.norm(a)), fid))
        logger.debug("ell=%d beta=%.4f energy=%.12f |b|=%.3e |a|=%.3e",
                     ell, ell * cfg.dbeta, energy, grad, np.linalg.norm(a))
        state = new
    return run
