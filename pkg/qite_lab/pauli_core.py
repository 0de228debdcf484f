"""
pauli_core.py

Symbolic algebra over n-qubit Pauli strings.

A string is stored in symplectic form: bit q of ``x_mask`` marks X or Y on
qubit q, bit q of ``z_mask`` marks Z or Y. The operator represented by a
(x_mask, z_mask) pair is

    P(x, z) = i^{|x & z|} X^x Z^z

so both bits set is exactly Y = iXZ. Products and commutation checks are mask
arithmetic plus a phase exponent in {0, 1, 2, 3}.

Text format (one term per line, '#' starts a comment):

    0.5 X0 Z2
    -0.25 Y1 Y0
    1.0            <- bare coefficient is the identity

Usage:
    from pauli_core import PauliTerm, PauliSum, mul, commutator
    h = parse_pauli_text("1.0 Z0\n0.5 X0 X1", n_qubits=2)
    print(write_pauli_text(h))
"""

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from errors import DimensionError, PauliParseError

# Coefficients with smaller magnitude are pruned from every PauliSum.
DROP_TOL = 1e-12

PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)
_TOKEN = re.compile(r"^([XYZ])(\d+)$")

Key = Tuple[int, int]


def popcount(x: int) -> int:
    return bin(x).count("1")


def mask_product(x1: int, z1: int, x2: int, z2: int) -> Tuple[int, int, int]:
    """Multiply P(x1, z1) by P(x2, z2).

    Returns (x, z, k) with P(x1,z1) P(x2,z2) = i^k P(x, z).
    """
    x = x1 ^ x2
    z = z1 ^ z2
    k = popcount(x1 & z1) + popcount(x2 & z2) - popcount(x & z) + 2 * popcount(z1 & x2)
    return x, z, k % 4


def masks_commute(x1: int, z1: int, x2: int, z2: int) -> bool:
    return (popcount(x1 & z2) + popcount(z1 & x2)) % 2 == 0


def bit_parity(indices: np.ndarray, mask: int) -> np.ndarray:
    """Parity of popcount(index & mask) for every entry of ``indices``."""
    parity = np.zeros(indices.shape, dtype=np.int64)
    q = 0
    m = mask
    while m:
        if m & 1:
            parity ^= (indices >> q) & 1
        m >>= 1
        q += 1
    return parity


@dataclass(frozen=True)
class PauliTerm:
    """A single weighted Pauli string."""

    n_qubits: int
    x_mask: int
    z_mask: int
    coeff: complex = 1.0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise DimensionError(f"n_qubits must be positive, got {self.n_qubits}")
        limit = 1 << self.n_qubits
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise DimensionError(
                f"masks ({self.x_mask}, {self.z_mask}) do not fit in {self.n_qubits} qubits"
            )
        object.__setattr__(self, "coeff", complex(self.coeff))

    @classmethod
    def from_label(cls, n_qubits: int, label: str, coeff: complex = 1.0) -> "PauliTerm":
        """Build a term from a label such as ``"X0 Z2"`` (empty label = identity)."""
        x, z = _parse_ops(label.split(), n_qubits, line_no=None)
        return cls(n_qubits, x, z, coeff)

    @property
    def key(self) -> Key:
        return (self.x_mask, self.z_mask)

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def with_coeff(self, coeff: complex) -> "PauliTerm":
        return PauliTerm(self.n_qubits, self.x_mask, self.z_mask, coeff)

    def commutes_with(self, other: "PauliTerm") -> bool:
        return masks_commute(self.x_mask, self.z_mask, other.x_mask, other.z_mask)

    def label(self) -> str:
        ops = []
        for q in range(self.n_qubits):
            xb = (self.x_mask >> q) & 1
            zb = (self.z_mask >> q) & 1
            if xb and zb:
                ops.append(f"Y{q}")
            elif xb:
                ops.append(f"X{q}")
            elif zb:
                ops.append(f"Z{q}")
        return " ".join(ops)

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        idx = np.arange(dim)
        vals = self.coeff * PHASES[popcount(self.x_mask & self.z_mask) % 4]
        signs = 1 - 2 * bit_parity(idx, self.z_mask)
        mat = np.zeros((dim, dim), dtype=complex)
        mat[idx ^ self.x_mask, idx] = vals * signs
        return mat

    def __repr__(self) -> str:
        return f"PauliTerm({self.coeff!r} {self.label() or 'I'})"


def mul(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    """Matrix product a·b as a single Pauli term with exact phase."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"qubit-count mismatch: {a.n_qubits} vs {b.n_qubits}")
    x, z, k = mask_product(a.x_mask, a.z_mask, b.x_mask, b.z_mask)
    return PauliTerm(a.n_qubits, x, z, a.coeff * b.coeff * PHASES[k])


class PauliSum:
    """A linear combination of Pauli strings keyed by (x_mask, z_mask).

    Instances are treated as immutable: every operation returns a new sum.
    """

    def __init__(self, n_qubits: int, terms: Optional[Dict[Key, complex]] = None,
                 tol: float = DROP_TOL):
        if n_qubits < 1:
            raise DimensionError(f"n_qubits must be positive, got {n_qubits}")
        self.n_qubits = n_qubits
        self.tol = tol
        limit = 1 << n_qubits
        clean: Dict[Key, complex] = {}
        for (x, z), c in (terms or {}).items():
            if not (0 <= x < limit and 0 <= z < limit):
                raise DimensionError(f"masks ({x}, {z}) do not fit in {n_qubits} qubits")
            c = complex(c)
            if abs(c) >= tol:
                clean[(x, z)] = c
        self._terms = clean

    @classmethod
    def from_terms(cls, n_qubits: int, terms: Iterable[PauliTerm]) -> "PauliSum":
        acc: Dict[Key, complex] = {}
        for t in terms:
            if t.n_qubits != n_qubits:
                raise DimensionError(f"term on {t.n_qubits} qubits added to {n_qubits}-qubit sum")
            acc[t.key] = acc.get(t.key, 0.0) + t.coeff
        return cls(n_qubits, acc)

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, {(0, 0): coeff})

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits, {})

    @property
    def terms(self) -> Dict[Key, complex]:
        return dict(self._terms)

    def keys(self) -> List[Key]:
        """Keys in canonical order: lexicographic on (z_mask, x_mask)."""
        return sorted(self._terms, key=lambda k: (k[1], k[0]))

    def coeff(self, key: Key) -> complex:
        return self._terms.get(key, 0.0j)

    def __iter__(self) -> Iterator[PauliTerm]:
        for x, z in self.keys():
            yield PauliTerm(self.n_qubits, x, z, self._terms[(x, z)])

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def __repr__(self) -> str:
        return f"PauliSum(n_qubits={self.n_qubits}, terms={len(self)})"

    def _check(self, other: Union["PauliSum", PauliTerm]):
        if other.n_qubits != self.n_qubits:
            raise DimensionError(f"qubit-count mismatch: {self.n_qubits} vs {other.n_qubits}")

    def __add__(self, other: Union["PauliSum", PauliTerm]) -> "PauliSum":
        if isinstance(other, PauliTerm):
            other = PauliSum.from_terms(other.n_qubits, [other])
        self._check(other)
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc.get(k, 0.0) + c
        return PauliSum(self.n_qubits, acc, self.tol)

    def __neg__(self) -> "PauliSum":
        return self.scale(-1.0)

    def __sub__(self, other: Union["PauliSum", PauliTerm]) -> "PauliSum":
        if isinstance(other, PauliTerm):
            other = PauliSum.from_terms(other.n_qubits, [other])
        return self + (-other)

    def scale(self, factor: complex) -> "PauliSum":
        return PauliSum(self.n_qubits, {k: c * factor for k, c in self._terms.items()}, self.tol)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(other)
        if isinstance(other, PauliTerm):
            other = PauliSum.from_terms(other.n_qubits, [other])
        if not isinstance(other, PauliSum):
            return NotImplemented
        self._check(other)
        acc: Dict[Key, complex] = {}
        for (x1, z1), c1 in self._terms.items():
            for (x2, z2), c2 in other._terms.items():
                x, z, k = mask_product(x1, z1, x2, z2)
                acc[(x, z)] = acc.get((x, z), 0.0) + c1 * c2 * PHASES[k]
        return PauliSum(self.n_qubits, acc, self.tol)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(other)
        return NotImplemented

    def adjoint(self) -> "PauliSum":
        # every P(x, z) is Hermitian, so only the coefficients conjugate
        return PauliSum(self.n_qubits, {k: c.conjugate() for k, c in self._terms.items()}, self.tol)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def real_part(self) -> "PauliSum":
        """Drop imaginary residues left by merging (Hermitian operators only)."""
        return PauliSum(self.n_qubits, {k: c.real for k, c in self._terms.items()}, self.tol)

    def constant(self) -> complex:
        return self.coeff((0, 0))

    @cached_property
    def traceless(self) -> "PauliSum":
        """The sum without its identity term (cached with its sparse matrix)."""
        return PauliSum(self.n_qubits, {k: c for k, c in self._terms.items() if k != (0, 0)}, self.tol)

    def to_matrix(self) -> np.ndarray:
        return self.to_sparse().toarray()

    @cached_property
    def _sparse(self) -> sp.csr_matrix:
        dim = 1 << self.n_qubits
        idx = np.arange(dim)
        rows, cols, vals = [], [], []
        for (x, z), c in self._terms.items():
            phase = c * PHASES[popcount(x & z) % 4]
            rows.append(idx ^ x)
            cols.append(idx)
            vals.append(phase * (1 - 2 * bit_parity(idx, z)))
        if not rows:
            return sp.csr_matrix((dim, dim), dtype=complex)
        mat = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim), dtype=complex,
        )
        return mat.tocsr()

    def to_sparse(self) -> sp.csr_matrix:
        return self._sparse


def commutator(h: PauliSum, s: PauliTerm) -> PauliSum:
    """[h, s] = h·s − s·h; only anticommuting pairs contribute (2·h_m·σ_m·s)."""
    if h.n_qubits != s.n_qubits:
        raise DimensionError(f"qubit-count mismatch: {h.n_qubits} vs {s.n_qubits}")
    acc: Dict[Key, complex] = {}
    for (x, z), c in h.terms.items():
        if masks_commute(x, z, s.x_mask, s.z_mask):
            continue
        xo, zo, k = mask_product(x, z, s.x_mask, s.z_mask)
        acc[(xo, zo)] = acc.get((xo, zo), 0.0) + 2.0 * c * s.coeff * PHASES[k]
    return PauliSum(h.n_qubits, acc, h.tol)


def _parse_ops(tokens: List[str], n_qubits: int, line_no: Optional[int]) -> Tuple[int, int]:
    where = f" on line {line_no}" if line_no is not None else ""
    x = z = 0
    seen = set()
    for tok in tokens:
        m = _TOKEN.match(tok)
        if not m:
            raise PauliParseError(f"malformed Pauli token {tok!r}{where}")
        op, q = m.group(1), int(m.group(2))
        if q >= n_qubits:
            raise PauliParseError(f"qubit index {q} >= n_qubits={n_qubits}{where}")
        if q in seen:
            raise PauliParseError(f"qubit {q} repeated{where}")
        seen.add(q)
        if op in ("X", "Y"):
            x |= 1 << q
        if op in ("Z", "Y"):
            z |= 1 << q
    return x, z


def parse_pauli_text(text: str, n_qubits: int) -> PauliSum:
    """Parse the line format ``<coeff> <P><q> ...`` into a merged PauliSum."""
    acc: Dict[Key, complex] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            coeff = complex(tokens[0])
        except ValueError:
            raise PauliParseError(f"malformed coefficient {tokens[0]!r} on line {line_no}") from None
        key = _parse_ops(tokens[1:], n_qubits, line_no)
        acc[key] = acc.get(key, 0.0) + coeff
    return PauliSum(n_qubits, acc)


def format_coeff(c: complex) -> str:
    if c.imag == 0.0:
        return f"{c.real:.15g}"
    return f"({c.real:.15g}{c.imag:+.15g}j)"


def write_pauli_text(p: PauliSum) -> str:
    lines = []
    for term in p:
        label = term.label()
        lines.append(f"{format_coeff(term.coeff)} {label}".rstrip())
    return "\n".join(lines) + ("\n" if lines else "")
