"""
qlanczos.py

Quantum Lanczos on top of an imaginary-time trajectory.

The Krylov vectors are the QITE states Phi^(l) themselves. Nothing beyond the
per-step energies is measured: with n_l = ||exp(-l dbeta H) Phi^(0)|| the
recursion n_{l+1}^2 = n_l^2 c^(l) gives

    S_{l l'} = n_m^2 / (n_l n_l'),    H_{l l'} = S_{l l'} E^(m),    m = (l + l') / 2

so only records on a grid of one parity are combined. The norm factors are
kept as logarithms of the reference-shifted c~ = exp(2 dbeta E0) c, whose
shift cancels in every S element.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from errors import ConfigError, NormEstimateError

logger = logging.getLogger("qlanczos")

NORM_VARIANTS = ("first_order", "energy_shifted", "reference_shifted", "exact")

OVERLAP_CUT = 0.999
MAX_VECTORS = 5
ETA_DROP = 1e-8
ETA_RELEVANT = 0.01
WEIGHT_CUT = 0.1


@dataclass(frozen=True)
class KrylovRecord:
    ell: int
    energy: float
    dbeta: float
    e0: float
    c_exact: Optional[float] = None

    @property
    def delta_e(self) -> float:
        return self.energy - self.e0


def norm_estimate(record: KrylovRecord, variant: str) -> float:
    """Estimate of c^(l) = <Phi^(l)| exp(-2 dbeta H) |Phi^(l)>.

    ``reference_shifted`` returns c~ = exp(2 dbeta E0) c instead, which stays
    near one when E0 is close to the trajectory energies.
    """
    if variant == "first_order":
        c = 1.0 - 2.0 * record.dbeta * record.energy
        if c <= 0:
            raise NormEstimateError(
                f"first-order estimate 1 - 2 dbeta E = {c:.6g} <= 0 at ell={record.ell}"
            )
        return c
    if variant == "energy_shifted":
        return math.exp(-2.0 * record.dbeta * record.energy)
    if variant == "reference_shifted":
        return math.exp(-2.0 * record.dbeta * record.delta_e)
    if variant == "exact":
        if record.c_exact is None:
            raise NormEstimateError(f"no exact c recorded at ell={record.ell}")
        return record.c_exact
    raise ConfigError(f"norm estimator must be one of {NORM_VARIANTS}, got {variant!r}")


def _log_shifted_c(record: KrylovRecord, variant: str) -> float:
    c = norm_estimate(record, variant)
    if variant == "reference_shifted":
        return math.log(c)
    return math.log(c) + 2.0 * record.dbeta * record.e0


@dataclass
class KrylovHistory:
    dbeta: float
    e0: float
    energies: List[float] = field(default_factory=list)
    # c[l] from the exact propagator, when known
    c_exact: List[float] = field(default_factory=list)

    @classmethod
    def from_energies(cls, energies: Sequence[float], dbeta: float, e0: Optional[float] = None,
                      c_exact: Optional[Sequence[float]] = None) -> "KrylovHistory":
        if not energies:
            raise ValueError("Krylov history needs at least one energy")
        return cls(dbeta, energies[0] if e0 is None else e0, list(energies), list(c_exact or []))

    def append(self, energy: float, c: Optional[float] = None) -> None:
        self.energies.append(energy)
        if c is not None:
            self.c_exact.append(c)

    def __len__(self) -> int:
        return len(self.energies)

    def record(self, ell: int) -> KrylovRecord:
        c = self.c_exact[ell] if ell < len(self.c_exact) else None
        return KrylovRecord(ell, self.energies[ell], self.dbeta, self.e0, c)

    def log_norms(self, variant: str, upto: int) -> np.ndarray:
        """log n~_l for l = 0..upto."""
        logs = np.zeros(upto + 1)
        for ell in range(1, upto + 1):
            logs[ell] = logs[ell - 1] + 0.5 * _log_shifted_c(self.record(ell - 1), variant)
        return logs


def krylov_grid(newest: int) -> List[int]:
    """Steps with the parity of ``newest``, ascending."""
    return list(range(newest % 2, newest + 1, 2))


def build_krylov_matrices(hist: KrylovHistory, variant: str = "reference_shifted",
                          newest: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, List[int]]:
    """(S, H, grid) over the Krylov grid ending at ``newest`` (default: latest record)."""
    newest = len(hist) - 1 if newest is None else newest
    if not 0 <= newest < len(hist):
        raise ValueError(f"newest={newest} outside the recorded steps 0..{len(hist) - 1}")
    grid = krylov_grid(newest)
    logs = hist.log_norms(variant, newest)
    k = len(grid)
    s = np.empty((k, k))
    h = np.empty((k, k))
    for i, li in enumerate(grid):
        for j, lj in enumerate(grid):
            mid = (li + lj) // 2
            s[i, j] = math.exp(2.0 * logs[mid] - logs[li] - logs[lj])
            h[i, j] = s[i, j] * hist.energies[mid]
    return s, h, grid


@dataclass
class QlanczosResult:
    selected_indices: List[int]
    eigenvalues: np.ndarray
    physical_flags: np.ndarray
    eigvec_weights: np.ndarray
    # positions of the admitted columns and the eigenvectors over them (v^T S v = 1)
    chosen: List[int] = field(default_factory=list)
    vectors: Optional[np.ndarray] = None

    @property
    def physical_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[self.physical_flags]

    @property
    def lowest_physical(self) -> float:
        return float(self.physical_eigenvalues.min())


def stabilized_solve(S: np.ndarray, H: np.ndarray, indices: Optional[Sequence[int]] = None,
                     overlap_cut: float = OVERLAP_CUT, max_vectors: int = MAX_VECTORS,
                     eta_drop: float = ETA_DROP, eta_relevant: float = ETA_RELEVANT,
                     weight_cut: float = WEIGHT_CUT) -> QlanczosResult:
    """Generalized eigenproblem H v = E S v on a well-conditioned subset.

    Columns are admitted newest (last) first while their normalized overlap
    with every admitted column stays below ``overlap_cut``. The admitted block
    is canonically orthogonalized, dropping overlap eigenvalues below
    ``eta_drop``; an eigenpair is physical when more than ``weight_cut`` of
    its weight lies on overlap directions with eta > ``eta_relevant``.
    """
    S = np.asarray(S)
    H = np.asarray(H)
    if S.shape != H.shape or S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"S and H must be equal square matrices, got {S.shape} and {H.shape}")
    n = S.shape[0]
    labels = list(range(n)) if indices is None else list(indices)

    diag = np.sqrt(np.abs(np.diag(S)))
    chosen = [n - 1]
    for k in range(n - 2, -1, -1):
        if len(chosen) >= max_vectors:
            break
        if all(abs(S[k, j]) / (diag[k] * diag[j]) < overlap_cut for j in chosen):
            chosen.append(k)
    selected = [labels[k] for k in chosen]

    s_sub = S[np.ix_(chosen, chosen)]
    h_sub = H[np.ix_(chosen, chosen)]
    eta, u = scipy.linalg.eigh(s_sub)
    keep = eta > eta_drop
    if not keep.any():
        logger.warning("all Krylov directions dropped; returning the latest energy")
        e_last = float(np.real(H[n - 1, n - 1] / S[n - 1, n - 1]))
        return QlanczosResult(selected[:1], np.array([e_last]), np.array([True]), np.array([1.0]), [n - 1],
                              np.array([[1.0 / math.sqrt(abs(S[n - 1, n - 1]))]]))
    x = u[:, keep] / np.sqrt(eta[keep])
    h_ortho = x.conj().T @ h_sub @ x
    evals, vecs = scipy.linalg.eigh(0.5 * (h_ortho + h_ortho.conj().T))

    relevant = eta[keep] > eta_relevant
    weights = np.sum(np.abs(vecs[relevant, :]) ** 2, axis=0)
    flags = weights > weight_cut
    if not flags.any():
        flags[int(np.argmax(weights))] = True
    logger.debug("QLanczos: admitted %s, kept %d directions, lowest physical %.10f",
                 selected, int(keep.sum()), evals[flags].min())
    return QlanczosResult(selected, evals, flags, weights, chosen, x @ vecs)


def qlanczos_from_history(hist: KrylovHistory, variant: str = "reference_shifted",
                          newest: Optional[int] = None, **solve_kw) -> QlanczosResult:
    s, h, grid = build_krylov_matrices(hist, variant, newest)
    return stabilized_solve(s, h, grid, **solve_kw)
