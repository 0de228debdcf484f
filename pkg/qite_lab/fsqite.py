"""
fsqite.py

Folded-spectrum QITE: evolve under (H - omega)^2 so the eigenstate closest to
the target energy omega becomes the ground state of the propagator.

The folded operator is expanded into Pauli strings once and handed to the
ordinary QITE loop with the step dbeta2 (the imaginary time of the folded
operator has units of beta^2). Reports carry the energy of the physical H and
the folded residual <(H - omega)^2>.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

from fermion_map import OperatorPool
from pauli_core import PauliSum
from qite import QiteConfig, QiteRun, StepReport, run_qite
from qlanczos import KrylovHistory, QlanczosResult, qlanczos_from_history
from statevec import StateVector, expectation

logger = logging.getLogger("fsqite")

# larger folded steps lose accuracy quickly
DBETA2_ADVISORY = 0.05


def fold_hamiltonian(h: PauliSum, omega: float) -> PauliSum:
    """(H - omega)^2, expanded and merged."""
    shifted = h - PauliSum.identity(h.n_qubits, omega)
    folded = (shifted * shifted).real_part()
    logger.info("folded operator at omega=%.8f: %d terms (from %d)", omega, len(folded), len(h))
    return folded


@dataclass
class FoldedConfig:
    omega: float
    # inner.dbeta is the folded step dbeta2, inner.beta_max bounds beta^2
    inner: QiteConfig

    def __post_init__(self):
        if self.inner.dbeta > DBETA2_ADVISORY:
            logger.warning("dbeta2=%g exceeds %g; the folded propagation may be inaccurate",
                           self.inner.dbeta, DBETA2_ADVISORY)

    @property
    def dbeta2(self) -> float:
        return self.inner.dbeta

    @classmethod
    def build(cls, omega: float, dbeta2: float, beta2_max: float, pool: OperatorPool,
              **qite_kw) -> "FoldedConfig":
        return cls(omega, QiteConfig(dbeta=dbeta2, beta_max=beta2_max, pool=pool, **qite_kw))


@dataclass
class FoldedRun:
    reports: List[StepReport] = field(default_factory=list)
    inner: Optional[QiteRun] = None
    folded: Optional[PauliSum] = None

    @property
    def final_state(self) -> StateVector:
        return self.inner.final_state

    @property
    def folded_energies(self) -> List[float]:
        return self.inner.energies


def run_fsqite(init: StateVector, h: PauliSum, cfg: FoldedConfig) -> FoldedRun:
    folded = fold_hamiltonian(h, cfg.omega)
    inner = run_qite(init, folded, cfg.inner)
    run = FoldedRun(inner=inner, folded=folded)
    for rep, state in zip(inner.reports, inner.states):
        run.reports.append(StepReport(
            ell=rep.ell,
            beta=math.sqrt(rep.beta),
            energy=expectation(state, h),
            grad_norm=rep.grad_norm,
            s2=rep.s2,
            a_norm=rep.a_norm,
            fidelity_F=rep.fidelity_F,
            beta2=rep.beta,
            folded_residual=rep.energy,
        ))
    last = run.reports[-1]
    logger.info("FSQITE omega=%.8f: energy %.10f residual %.3e after %d steps",
                cfg.omega, last.energy, last.folded_residual, last.ell)
    return run


def fs_qlanczos(run: FoldedRun, dbeta2: float, variant: str = "reference_shifted",
                newest: Optional[int] = None) -> QlanczosResult:
    """QLanczos on the folded energy stream; eigenvalues are in folded units."""
    hist = KrylovHistory.from_energies(run.folded_energies, dbeta2)
    return qlanczos_from_history(hist, variant, newest)
