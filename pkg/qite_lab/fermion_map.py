"""
fermion_map.py

Molecular integrals in, qubit operators out.

Spin orbitals are interleaved: spin orbital 2*p is spatial orbital p with an
alpha electron, 2*p + 1 the beta partner. Qubit j carries spin orbital j and
the Jordan-Wigner Z string runs over qubits below j. A set bit is an
occupied spin orbital.

The two-electron integrals use the chemist convention (pr|qs) and

    H = sum_pq h_pq a+_p a_q + 1/2 sum_pqrs (pr|qs) a+_p a+_q a_s a_r + e_core

with spin carried by the spin-orbital indices.

Usage:
    ints = parse_fcidump("fixtures/h2_minimal.fcidump")
    h = build_hamiltonian(ints)
    s2, sz, n = build_spin_ops(ints.n_spatial)
    pool = build_pool("hamiltonian", ints, epsilon=1e-3)
"""

import itertools
import logging
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from errors import ConfigError, DimensionError, FcidumpError
from pauli_core import DROP_TOL, PHASES, Key, PauliSum, PauliTerm, format_coeff, mask_product

logger = logging.getLogger("fermion_map")

POOL_KINDS = ("uccsd", "uccgsd", "hamiltonian", "complete")

# (spin-orbital index, is_creation)
Ladder = Tuple[int, bool]


@dataclass
class SpinOrbitalIntegrals:
    n_spatial: int
    n_electrons: int
    h1: np.ndarray
    g2: np.ndarray
    e_core: float = 0.0
    ms2: int = 0

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_spatial

    @property
    def n_alpha(self) -> int:
        return (self.n_electrons + self.ms2) // 2

    @property
    def n_beta(self) -> int:
        return (self.n_electrons - self.ms2) // 2


# ---------------------------------------------------------------------------
# FCIDUMP
# ---------------------------------------------------------------------------

_HEADER_KEY = r"\b{}\s*=\s*(-?\d+)"


def _header_int(header: str, key: str, path) -> int:
    m = re.search(_HEADER_KEY.format(key), header, flags=re.IGNORECASE)
    if not m:
        raise FcidumpError(f"{path}: FCIDUMP header is missing {key}")
    return int(m.group(1))


def parse_fcidump(path: Union[str, Path]) -> SpinOrbitalIntegrals:
    """Read an FCIDUMP file into fully symmetrized integral arrays."""
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()

    header_lines = []
    body_start = None
    for i, line in enumerate(lines):
        header_lines.append(line)
        stripped = line.strip()
        if stripped.upper().startswith("&END") or stripped == "/" or stripped.upper().endswith("&END"):
            body_start = i + 1
            break
    if body_start is None:
        raise FcidumpError(f"{path}: FCIDUMP namelist header is not terminated (&END or /)")
    header = " ".join(header_lines)
    norb = _header_int(header, "NORB", path)
    nelec = _header_int(header, "NELEC", path)
    ms2 = _header_int(header, "MS2", path)
    if norb < 1:
        raise FcidumpError(f"{path}: NORB must be positive, got {norb}")

    h1 = np.zeros((norb, norb))
    g2 = np.zeros((norb, norb, norb, norb))
    e_core = 0.0
    for line_no, line in enumerate(lines[body_start:], start=body_start + 1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != 5:
            raise FcidumpError(f"{path}:{line_no}: expected 'value i a j b', got {line.strip()!r}")
        try:
            value = float(tokens[0].replace("D", "E").replace("d", "e"))
        except ValueError:
            raise FcidumpError(f"{path}:{line_no}: non-numeric value {tokens[0]!r}") from None
        try:
            i, a, j, b = (int(t) for t in tokens[1:])
        except ValueError:
            raise FcidumpError(f"{path}:{line_no}: non-integer index in {line.strip()!r}") from None
        if any(k < 0 or k > norb for k in (i, a, j, b)):
            raise FcidumpError(f"{path}:{line_no}: orbital index out of range 0..{norb}")

        if i == a == j == b == 0:
            e_core = value
        elif j == 0 and b == 0:
            if i == 0 or a == 0:
                # orbital-energy lines ("value i 0 0 0") carry nothing we use
                logger.debug("%s:%d: skipping orbital energy line", path, line_no)
                continue
            h1[i - 1, a - 1] = h1[a - 1, i - 1] = value
        elif 0 in (i, a, j, b):
            raise FcidumpError(f"{path}:{line_no}: mixed zero/non-zero indices {tokens[1:]}")
        else:
            p, q, r, s = i - 1, a - 1, j - 1, b - 1
            for (w, x, y, z) in ((p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                                 (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)):
                g2[w, x, y, z] = value

    logger.info("Read %s: NORB=%d NELEC=%d MS2=%d", path.name, norb, nelec, ms2)
    return SpinOrbitalIntegrals(norb, nelec, h1, g2, e_core, ms2)


def write_fcidump(ints: SpinOrbitalIntegrals, path: Union[str, Path], tol: float = 1e-14) -> None:
    """Write integrals back out, one line per 8-fold class."""
    n = ints.n_spatial
    out = [f" &FCI NORB={n},NELEC={ints.n_electrons},MS2={ints.ms2},", "  ORBSYM=" + "1," * n, "  ISYM=1,", " &END"]
    pairs = [(i, j) for i in range(n) for j in range(i + 1)]
    for ij, (i, j) in enumerate(pairs):
        for k, l in pairs[: ij + 1]:
            v = ints.g2[i, j, k, l]
            if abs(v) > tol:
                out.append(f"{v:.16g} {i + 1} {j + 1} {k + 1} {l + 1}")
    for i, j in pairs:
        if abs(ints.h1[i, j]) > tol:
            out.append(f"{ints.h1[i, j]:.16g} {i + 1} {j + 1} 0 0")
    out.append(f"{ints.e_core:.16g} 0 0 0 0")
    Path(path).write_text("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# Jordan-Wigner
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _ladder_terms(index: int, creation: bool) -> Tuple[Tuple[Key, complex], ...]:
    chain = (1 << index) - 1
    bit = 1 << index
    y_coeff = -0.5j if creation else 0.5j
    return (((bit, chain), 0.5 + 0.0j), ((bit, chain | bit), y_coeff))


def ladder_ops(text: str) -> List[Ladder]:
    """Parse ``"1^ 0^ 1 0"`` style products (``^`` marks creation)."""
    ops = []
    for tok in text.split():
        creation = tok.endswith("^")
        try:
            ops.append((int(tok.rstrip("^")), creation))
        except ValueError:
            raise ValueError(f"malformed ladder operator {tok!r}") from None
    return ops


def jordan_wigner(ladders: Sequence[Ladder], n_qubits: int, coeff: complex = 1.0) -> PauliSum:
    """Jordan-Wigner image of coeff * (product of ladder operators, left to right)."""
    acc: Dict[Key, complex] = {(0, 0): complex(coeff)}
    for index, creation in ladders:
        if not 0 <= index < n_qubits:
            raise DimensionError(f"spin-orbital index {index} out of range for {n_qubits} qubits")
        nxt: Dict[Key, complex] = {}
        for (x1, z1), c1 in acc.items():
            for (x2, z2), c2 in _ladder_terms(index, creation):
                x, z, k = mask_product(x1, z1, x2, z2)
                nxt[(x, z)] = nxt.get((x, z), 0.0) + c1 * c2 * PHASES[k]
        acc = {key: c for key, c in nxt.items() if abs(c) >= DROP_TOL}
    return PauliSum(n_qubits, acc)


def _accumulate(acc: Dict[Key, complex], p: PauliSum, factor: complex = 1.0) -> None:
    for key, c in p.terms.items():
        acc[key] = acc.get(key, 0.0) + factor * c


def _spin(index: int) -> int:
    return index % 2


# ---------------------------------------------------------------------------
# Hamiltonian and spin operators
# ---------------------------------------------------------------------------

def _two_body_terms(ints: SpinOrbitalIntegrals) -> Iterator[Tuple[int, int, int, int, float]]:
    """Yield (P, Q, R, S, (pr|qs)) for a+_P a+_Q a_S a_R with non-zero spatial integral."""
    n = ints.n_spatial
    for p, r, q, s in itertools.product(range(n), repeat=4):
        v = ints.g2[p, r, q, s]
        if v == 0.0:
            continue
        for sigma, tau in itertools.product((0, 1), repeat=2):
            P, R = 2 * p + sigma, 2 * r + sigma
            Q, S = 2 * q + tau, 2 * s + tau
            if P == Q or R == S:
                continue
            yield P, Q, R, S, v


def _one_body_terms(ints: SpinOrbitalIntegrals) -> Iterator[Tuple[int, int, float]]:
    n = ints.n_spatial
    for p, q in itertools.product(range(n), repeat=2):
        v = ints.h1[p, q]
        if v == 0.0:
            continue
        for sigma in (0, 1):
            yield 2 * p + sigma, 2 * q + sigma, v


def build_hamiltonian(ints: SpinOrbitalIntegrals) -> PauliSum:
    nq = ints.n_qubits
    acc: Dict[Key, complex] = {(0, 0): complex(ints.e_core)}
    for P, Q, v in _one_body_terms(ints):
        _accumulate(acc, jordan_wigner([(P, True), (Q, False)], nq), v)
    for P, Q, R, S, v in _two_body_terms(ints):
        _accumulate(acc, jordan_wigner([(P, True), (Q, True), (S, False), (R, False)], nq), 0.5 * v)
    h = PauliSum(nq, acc)
    if not h.is_hermitian(1e-10):
        raise FcidumpError("integrals produced a non-Hermitian Hamiltonian; check h1/g2 symmetry")
    h = h.real_part()
    logger.info("Hamiltonian on %d qubits: %d Pauli terms", nq, len(h))
    return h


def build_spin_ops(n_spatial: int) -> Tuple[PauliSum, PauliSum, PauliSum]:
    """Return (S^2, S_z, N) for ``n_spatial`` interleaved spatial orbitals."""
    if n_spatial < 1:
        raise DimensionError(f"n_spatial must be >= 1, got {n_spatial}")
    nq = 2 * n_spatial
    n_acc: Dict[Key, complex] = {}
    sz_acc: Dict[Key, complex] = {}
    sp_acc: Dict[Key, complex] = {}
    for p in range(n_spatial):
        a, b = 2 * p, 2 * p + 1
        n_a = jordan_wigner([(a, True), (a, False)], nq)
        n_b = jordan_wigner([(b, True), (b, False)], nq)
        _accumulate(n_acc, n_a)
        _accumulate(n_acc, n_b)
        _accumulate(sz_acc, n_a, 0.5)
        _accumulate(sz_acc, n_b, -0.5)
        _accumulate(sp_acc, jordan_wigner([(a, True), (b, False)], nq))
    number = PauliSum(nq, n_acc).real_part()
    sz = PauliSum(nq, sz_acc).real_part()
    s_plus = PauliSum(nq, sp_acc)
    s_minus = s_plus.adjoint()
    s2 = (s_minus * s_plus + sz * sz + sz).real_part()
    return s2, sz, number


def hartree_fock_bits(ints: SpinOrbitalIntegrals) -> str:
    """Bitstring (qubit 0 rightmost) of the lowest alpha and beta spin orbitals."""
    occ = [2 * p for p in range(ints.n_alpha)] + [2 * p + 1 for p in range(ints.n_beta)]
    word = 0
    for j in occ:
        word |= 1 << j
    return format(word, f"0{ints.n_qubits}b")


# ---------------------------------------------------------------------------
# Operator pools
# ---------------------------------------------------------------------------

@dataclass
class OperatorPool:
    """Ordered, deduplicated Pauli strings sigma_mu (coefficient +1)."""

    n_qubits: int
    generators: List[PauliTerm] = field(default_factory=list)
    provenance: List[str] = field(default_factory=list)
    source_magnitude: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def keys(self) -> List[Key]:
        return [g.key for g in self.generators]


def _anti_hermitian_image(T: PauliSum) -> PauliSum:
    # i (T - T^dagger) is Hermitian: its Pauli coefficients are real
    return ((T - T.adjoint()) * 1j).real_part()


def excitation_generators(kind: str, ints: SpinOrbitalIntegrals,
                          epsilon: float = 0.0) -> Iterator[Tuple[PauliSum, float]]:
    """Yield (i(T - T^dagger) image, source magnitude) for every pool generator T."""
    nq = ints.n_qubits
    if kind == "hamiltonian":
        for P, Q, v in _one_body_terms(ints):
            if P == Q or abs(v) <= epsilon:
                continue
            yield _anti_hermitian_image(jordan_wigner([(P, True), (Q, False)], nq)), abs(v)
        for P, Q, R, S, v in _two_body_terms(ints):
            if {P, Q} == {R, S} or abs(v) <= epsilon:
                continue
            T = jordan_wigner([(P, True), (Q, True), (S, False), (R, False)], nq)
            yield _anti_hermitian_image(T), abs(v)
        return

    if kind == "uccsd":
        occ = [2 * p for p in range(ints.n_alpha)] + [2 * p + 1 for p in range(ints.n_beta)]
        occ.sort()
        virt = [j for j in range(nq) if j not in occ]
        singles = [(a, i) for i in occ for a in virt if _spin(a) == _spin(i)]
        doubles = [
            (a, b, i, j)
            for i, j in itertools.combinations(occ, 2)
            for a, b in itertools.combinations(virt, 2)
            if _spin(a) + _spin(b) == _spin(i) + _spin(j)
        ]
    elif kind == "uccgsd":
        singles = [(p, q) for q, p in itertools.combinations(range(nq), 2) if _spin(p) == _spin(q)]
        pairs = list(itertools.combinations(range(nq), 2))
        doubles = [
            (p, q, r, s)
            for (r, s), (p, q) in itertools.combinations(pairs, 2)
            if _spin(p) + _spin(q) == _spin(r) + _spin(s)
        ]
    else:
        raise ConfigError(f"unknown excitation kind {kind!r}")

    nan = float("nan")
    for a, i in singles:
        yield _anti_hermitian_image(jordan_wigner([(a, True), (i, False)], nq)), nan
    for a, b, i, j in doubles:
        T = jordan_wigner([(a, True), (b, True), (j, False), (i, False)], nq)
        yield _anti_hermitian_image(T), nan


def complete_pool(n_qubits: int) -> OperatorPool:
    """Every non-identity Pauli string on a small register."""
    if n_qubits > 6:
        raise ConfigError(f"complete pool limited to 6 qubits, got {n_qubits}")
    pool = OperatorPool(n_qubits)
    dim = 1 << n_qubits
    for z in range(dim):
        for x in range(dim):
            if x == 0 and z == 0:
                continue
            pool.generators.append(PauliTerm(n_qubits, x, z, 1.0))
            pool.provenance.append("complete")
            pool.source_magnitude.append(float("nan"))
    return pool


def build_pool(kind: str, ints: Optional[SpinOrbitalIntegrals], epsilon: float = 0.0,
               n_qubits: Optional[int] = None) -> OperatorPool:
    if kind not in POOL_KINDS:
        raise ConfigError(f"unknown pool kind {kind!r}; expected one of {', '.join(POOL_KINDS)}")
    if epsilon < 0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
    if kind == "complete":
        return complete_pool(n_qubits if n_qubits is not None else ints.n_qubits)
    if ints is None:
        raise ConfigError(f"pool kind {kind!r} needs molecular integrals")

    pool = OperatorPool(ints.n_qubits)
    index: Dict[Key, int] = {}
    n_generators = 0
    for image, magnitude in excitation_generators(kind, ints, epsilon):
        n_generators += 1
        for term in image:
            if term.is_identity:
                continue
            pos = index.get(term.key)
            if pos is None:
                index[term.key] = len(pool.generators)
                pool.generators.append(term.with_coeff(1.0))
                pool.provenance.append(kind)
                pool.source_magnitude.append(magnitude)
            elif magnitude > pool.source_magnitude[pos]:
                pool.source_magnitude[pos] = magnitude
    logger.info("%s pool (epsilon=%g): %d generators -> %d Pauli strings",
                kind, epsilon, n_generators, len(pool))
    return pool


def write_pool(pool: OperatorPool) -> str:
    """Pauli text of the pool with provenance and source magnitude columns."""
    lines = []
    for term, tag, mag in zip(pool.generators, pool.provenance, pool.source_magnitude):
        mag_text = "-" if math.isnan(mag) else f"{mag:.6g}"
        lines.append(f"{format_coeff(term.coeff)} {term.label()}  # {tag} {mag_text}")
    return "\n".join(lines) + ("\n" if lines else "")


def pool_term_counts(ints: SpinOrbitalIntegrals, epsilons: Sequence[float]) -> pd.DataFrame:
    """Term counts versus screening threshold, plus the UCC reference pools."""
    rows = []
    for kind in ("uccsd", "uccgsd"):
        n_gen = sum(1 for _ in excitation_generators(kind, ints))
        rows.append({"kind": kind, "epsilon": float("nan"), "generators": n_gen,
                     "pauli_strings": len(build_pool(kind, ints))})
    for eps in sorted(epsilons):
        n_gen = sum(1 for _ in excitation_generators("hamiltonian", ints, eps))
        rows.append({"kind": "hamiltonian", "epsilon": eps, "generators": n_gen,
                     "pauli_strings": len(build_pool("hamiltonian", ints, eps))})
    return pd.DataFrame(rows, columns=["kind", "epsilon", "generators", "pauli_strings"])
