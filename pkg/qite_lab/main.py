#!/usr/bin/env python3
"""
main.py

Command-line driver for imaginary-time evolution runs.

Usage:
  python3 main.py run --config fixtures/h2_qite.conf
  python3 main.py exactdiag fixtures/h2_minimal.fcidump -k 6
  python3 main.py exactdiag fixtures/z0.pauli --n-qubits 1
  python3 main.py pool-stats fixtures/h2_minimal.fcidump --epsilon 0 1e-3 1e-2
  python3 main.py pool-dump fixtures/h2_minimal.fcidump --kind uccsd

Environment:
  QITE_DEBUG: set to 1/true/yes for per-step debug logging (same as --debug)
  QITE_NUM_THREADS: BLAS/OpenMP thread count, exported before numpy loads
  QITE_DENSE_LIMIT: largest register exact diagonalization will handle (default 14)

Exit status: 0 ok, 1 numerical abort, 2 configuration or input error.
"""

import os
import sys

NUM_THREADS = os.getenv("QITE_NUM_THREADS")
if NUM_THREADS:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[_var] = NUM_THREADS

import argparse
import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import RunConfig, load_config
from errors import ConfigError, DimensionError, InputFormatError, NumericalError
from fermion_map import POOL_KINDS, build_hamiltonian, build_pool, build_spin_ops, hartree_fock_bits, parse_fcidump, \
    pool_term_counts, write_pool
from fsqite import FoldedConfig, fs_qlanczos, run_fsqite
from msqite import MsqiteConfig, ms_qlanczos, ms_qlanczos_expectations, run_msqite
from pauli_core import PauliSum, parse_pauli_text
from qite import QiteConfig, run_qite
from qlanczos import KrylovHistory, qlanczos_from_history
from statevec import DENSE_LIMIT, SpectralDecomposition, StateVector, exact_diag, exact_ite_composed, expectation, \
    prepare, reachable_levels, spin_labels

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger("qite_lab")

# Debug toggle: set QITE_DEBUG=1 or pass --debug for per-step debug lines
DEBUG_ENV = os.getenv('QITE_DEBUG', '')
DEBUG = (DEBUG_ENV.lower() in ('1', 'true', 'yes')) or ('--debug' in sys.argv)

FLOAT_FORMAT = "%.12g"
KRYLOV_COLUMNS = 5
SPIN_TOL = 0.1


class Problem:
    """Hamiltonian, spin operators and pool material read from one input file."""

    def __init__(self, path: Path, n_qubits: Optional[int] = None, energy_shift: float = 0.0):
        self.path = Path(path)
        self.ints = None
        self.s2 = self.sz = self.number = None
        if self.path.suffix.lower() == ".fcidump":
            self.ints = parse_fcidump(self.path)
            self.h = build_hamiltonian(self.ints)
            self.s2, self.sz, self.number = build_spin_ops(self.ints.n_spatial)
        else:
            if n_qubits is None:
                raise ConfigError(f"{self.path}: Pauli-text input needs the qubit count")
            try:
                text = self.path.read_text()
            except OSError as e:
                raise ConfigError(f"cannot read {self.path}: {e}") from None
            self.h = parse_pauli_text(text, n_qubits)
        if energy_shift:
            self.h = (self.h + PauliSum.identity(self.h.n_qubits, energy_shift)).real_part()

    @property
    def n_qubits(self) -> int:
        return self.h.n_qubits

    def default_state(self) -> str:
        if self.ints is not None:
            return hartree_fock_bits(self.ints)
        return "0" * self.n_qubits

    def sector_of(self, states: Sequence[StateVector]) -> Tuple[Optional[int], Optional[float]]:
        """Common (N, S_z) of the states, or (None, None) when unknown or mixed."""
        if self.number is None:
            return None, None
        ns = {round(expectation(s, self.number)) for s in states}
        szs = {round(2 * expectation(s, self.sz)) / 2 for s in states}
        if len(ns) == 1 and len(szs) == 1:
            return ns.pop(), szs.pop()
        return None, None

    def reference(self, states: Sequence[StateVector], spin_target: Optional[float] = None) -> Optional[SpectralDecomposition]:
        """Exact spectrum of the states' sector (spin-filtered when asked), if small enough."""
        if self.n_qubits > DENSE_LIMIT:
            logger.info("%d qubits exceeds the dense limit; no exact reference", self.n_qubits)
            return None
        n_el, sz = self.sector_of(states)
        decomp = exact_diag(self.h, n_el, sz)
        if spin_target is not None and self.s2 is not None:
            labels = spin_labels(decomp, self.s2)
            keep = np.abs(labels - spin_target * (spin_target + 1)) < SPIN_TOL
            decomp = SpectralDecomposition(decomp.eigenvalues[keep], decomp.eigenvectors[:, keep], decomp.n_qubits)
        return decomp


def _padded(values: Sequence[float], width: int) -> List[float]:
    vals = sorted(float(v) for v in values)[:width]
    return vals + [float("nan")] * (width - len(vals))


def _padded_like(keys: Sequence[float], values: Sequence[float], width: int) -> List[float]:
    """``values`` in the order _padded puts ``keys``."""
    order = np.argsort(np.asarray(keys, dtype=float), kind="stable")[:width]
    vals = [float(values[i]) for i in order]
    return vals + [float("nan")] * (width - len(vals))


def _fmt(x: float) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else FLOAT_FORMAT % x


def _report_rows(reports, extra_columns=("fidelity_F",)) -> List[dict]:
    rows = []
    for r in reports:
        row = {"ell": r.ell, "beta": r.beta, "state": r.state, "energy": r.energy, "s2": r.s2,
               "grad_norm": r.grad_norm, "a_norm": r.a_norm}
        for name in extra_columns:
            value = getattr(r, name)
            row[name] = float("nan") if value is None else value
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _run_qite(cfg: RunConfig, problem: Problem, pool, init: StateVector, summary: List[str]) -> pd.DataFrame:
    qcfg = QiteConfig(dbeta=cfg.dbeta, beta_max=cfg.beta_max, pool=pool, b_variant=cfg.b_variant, reg=cfg.reg,
                      grad_tol=cfg.grad_tol, s2=problem.s2, track_fidelity=cfg.track_fidelity)
    run = run_qite(init, problem.h, qcfg)
    extra = ("fidelity_F",) if cfg.track_fidelity else ()
    trace = pd.DataFrame(_report_rows(run.reports, extra))
    ql_final = None
    if cfg.qlanczos:
        c_exact = None
        if cfg.norm_estimator == "exact":
            c_exact = [exact_ite_composed(s, problem.h, cfg.dbeta)[1] for s in run.states[:-1]]
        # the history grows one record per step, as it would during a live run
        hist = KrylovHistory.from_energies(run.energies[:1], cfg.dbeta)
        cols = []
        for ell in range(len(run.energies)):
            if ell > 0:
                hist.append(run.energies[ell], c_exact[ell - 1] if c_exact else None)
            res = qlanczos_from_history(hist, cfg.norm_estimator, newest=ell)
            cols.append(_padded(res.physical_eigenvalues, KRYLOV_COLUMNS))
            ql_final = res.lowest_physical
        for k in range(KRYLOV_COLUMNS):
            trace[f"qlanczos_{k}"] = [c[k] for c in cols]

    final = run.reports[-1]
    summary += [f"steps: {final.ell}", f"beta: {_fmt(final.beta)}",
                f"converged: {'yes' if run.converged else 'no'}", f"energy 0: {_fmt(final.energy)}"]
    if ql_final is not None:
        summary.append(f"qlanczos 0: {_fmt(ql_final)}")
    ref = problem.reference([init])
    if ref is not None:
        exact = reachable_levels(ref, [init], 1)[0]
        summary += [f"exact 0: {_fmt(exact)}", f"error 0: {_fmt(final.energy - exact)}"]
        if ql_final is not None:
            summary.append(f"qlanczos error 0: {_fmt(ql_final - exact)}")
    return trace


def _run_fsqite(cfg: RunConfig, problem: Problem, pool, init: StateVector, summary: List[str]) -> pd.DataFrame:
    fcfg = FoldedConfig.build(cfg.omega, cfg.dbeta2, cfg.beta_max, pool, reg=cfg.reg, grad_tol=cfg.grad_tol,
                              s2=problem.s2)
    run = run_fsqite(init, problem.h, fcfg)
    rows = []
    for r in run.reports:
        rows.append({"ell": r.ell, "beta": r.beta, "beta2": r.beta2, "state": r.state, "energy": r.energy,
                     "folded_residual": r.folded_residual, "s2": r.s2, "grad_norm": r.grad_norm,
                     "a_norm": r.a_norm})
    trace = pd.DataFrame(rows)
    if cfg.qlanczos:
        cols = [_padded(fs_qlanczos(run, cfg.dbeta2, cfg.norm_estimator, newest=ell).physical_eigenvalues,
                        KRYLOV_COLUMNS) for ell in range(len(run.reports))]
        for k in range(KRYLOV_COLUMNS):
            trace[f"fs_qlanczos_{k}"] = [c[k] for c in cols]

    final = run.reports[-1]
    summary += [f"omega: {_fmt(cfg.omega)}", f"steps: {final.ell}", f"beta2: {_fmt(final.beta2)}",
                f"converged: {'yes' if run.inner.converged else 'no'}", f"energy 0: {_fmt(final.energy)}",
                f"folded residual 0: {_fmt(final.folded_residual)}"]
    ref = problem.reference([init])
    if ref is not None:
        exact = float(ref.eigenvalues[np.argmin(np.abs(ref.eigenvalues - cfg.omega))])
        summary += [f"exact 0: {_fmt(exact)}", f"error 0: {_fmt(final.energy - exact)}"]
    return trace


def _run_msqite(cfg: RunConfig, problem: Problem, pool, init: List[StateVector], summary: List[str]) -> pd.DataFrame:
    mcfg = MsqiteConfig(dbeta=cfg.dbeta, beta_max=cfg.beta_max, pool=pool, mode=cfg.mode, reg=cfg.reg,
                        grad_tol=cfg.grad_tol, orthogonality_term=cfg.orthogonality_term,
                        spin_shift=cfg.spin_shift, spin_target=cfg.spin_target, s2=problem.s2,
                        keep_d=cfg.qlanczos)
    run = run_msqite(init, problem.h, mcfg)
    n = len(init)
    trace = pd.DataFrame(_report_rows(run.reports, ()))
    n_ell = len(run.spaces)
    for k in range(n):
        trace[f"effective_{k}"] = np.repeat([eff[k] for eff in run.effective], n)
    ms_final = ms_spins = None
    if cfg.qlanczos and n > 1:
        per_ell = []
        for ell in range(n_ell):
            res = ms_qlanczos(run.history, newest=ell)
            per_ell.append(_padded(res.physical_eigenvalues, n))
            ms_final = per_ell[-1]
        if "s2" in run.history.operators:
            spins = ms_qlanczos_expectations(res, run.history, "s2", newest=n_ell - 1)
            ms_spins = _padded_like(res.physical_eigenvalues, spins[res.physical_flags], n)
        for k in range(n):
            trace[f"ms_qlanczos_{k}"] = np.repeat([v[k] for v in per_ell], n)

    final_ell = n_ell - 1
    summary += [f"mode: {cfg.mode}", f"steps: {final_ell}", f"beta: {_fmt(final_ell * cfg.dbeta)}",
                f"converged: {'yes' if run.converged else 'no'}",
                f"max offdiagonal overlap: {_fmt(max(run.max_overlap))}"]
    final_space = run.final_space
    for i in range(n):
        summary.append(f"energy {i}: {_fmt(final_space.energies[i])}")
    effective = run.effective[-1]
    for k in range(n):
        summary.append(f"effective {k}: {_fmt(effective[k])}")
    if ms_final is not None:
        for k in range(n):
            summary.append(f"ms_qlanczos {k}: {_fmt(ms_final[k])}")
    if ms_spins is not None:
        for k in range(n):
            summary.append(f"ms_qlanczos s2 {k}: {_fmt(ms_spins[k])}")
    target = cfg.spin_target if cfg.spin_shift > 0 else None
    ref = problem.reference(init, target)
    if ref is not None:
        exact = reachable_levels(ref, init, n)
        for k in range(len(exact)):
            summary += [f"exact {k}: {_fmt(exact[k])}", f"error {k}: {_fmt(effective[k] - exact[k])}"]
    return trace


def cmd_run(cfg: RunConfig) -> int:
    problem = Problem(cfg.hamiltonian, cfg.n_qubits, cfg.energy_shift)
    pool = build_pool(cfg.pool, problem.ints, cfg.epsilon, n_qubits=problem.n_qubits)
    specs = cfg.states or [problem.default_state()]
    init = [prepare(spec, problem.n_qubits) for spec in specs]
    logger.info("%s on %s: %d qubits, %d Hamiltonian terms, %d pool strings, %d state(s)",
                cfg.method, problem.path.name, problem.n_qubits, len(problem.h), len(pool), len(init))

    summary = [f"method: {cfg.method}", f"hamiltonian: {problem.path.name}", f"pool: {cfg.pool} ({len(pool)} strings)"]
    if cfg.method == "qite":
        trace = _run_qite(cfg, problem, pool, init[0], summary)
    elif cfg.method == "fsqite":
        trace = _run_fsqite(cfg, problem, pool, init[0], summary)
    else:
        trace = _run_msqite(cfg, problem, pool, init, summary)

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    trace.to_csv(cfg.output_dir / "trace.csv", index=False, float_format=FLOAT_FORMAT, na_rep="")
    (cfg.output_dir / "summary.txt").write_text("\n".join(summary) + "\n")
    logger.info("Wrote %s and %s", cfg.output_dir / "trace.csv", cfg.output_dir / "summary.txt")
    return 0


# ---------------------------------------------------------------------------
# exactdiag / pool-stats / pool-dump
# ---------------------------------------------------------------------------

def cmd_exactdiag(source: Path, k: int, n_qubits: Optional[int] = None, electrons: Optional[int] = None) -> int:
    problem = Problem(source, n_qubits)
    decomp = exact_diag(problem.h, electrons)
    labels = spin_labels(decomp, problem.s2) if problem.s2 is not None else None
    for i in range(min(k, decomp.eigenvalues.size)):
        line = f"{i:4d}  {decomp.eigenvalues[i]: .12f}"
        if labels is not None:
            line += f"  S^2={labels[i]:.6f}"
        print(line)
    return 0


def cmd_pool_stats(source: Path, epsilons: Sequence[float]) -> int:
    ints = parse_fcidump(source)
    table = pool_term_counts(ints, epsilons)
    print(table.to_string(index=False))
    return 0


def cmd_pool_dump(source: Path, kind: str, epsilon: float) -> int:
    problem = Problem(source)
    pool = build_pool(kind, problem.ints, epsilon, n_qubits=problem.n_qubits)
    sys.stdout.write(write_pool(pool))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Imaginary-time evolution on a statevector")
    parser.add_argument("--debug", action="store_true", help="Per-step debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run QITE, FSQITE or MSQITE from a configuration file")
    run.add_argument("--config", required=True, type=Path, help="key = value run configuration")

    ed = sub.add_parser("exactdiag", help="Lowest eigenvalues by dense diagonalization")
    ed.add_argument("hamiltonian", type=Path, help="FCIDUMP or Pauli-text file")
    ed.add_argument("-k", type=int, default=6, help="Number of eigenvalues to print")
    ed.add_argument("--n-qubits", type=int, help="Qubit count (Pauli-text input)")
    ed.add_argument("--electrons", type=int, help="Restrict to this particle number")

    ps = sub.add_parser("pool-stats", help="Pool size against the screening threshold")
    ps.add_argument("fcidump", type=Path)
    ps.add_argument("--epsilon", type=float, nargs="+", default=[0.0, 1e-4, 1e-3, 1e-2, 1e-1],
                    help="Screening thresholds (Hartree)")

    pd_ = sub.add_parser("pool-dump", help="Print a pool as Pauli text")
    pd_.add_argument("fcidump", type=Path)
    pd_.add_argument("--kind", choices=POOL_KINDS, default="hamiltonian")
    pd_.add_argument("--epsilon", type=float, default=0.0)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if DEBUG or args.debug:
        logging.getLogger().setLevel(logging.DEBUG)
    logger.debug("Debug mode on")

    try:
        if args.command == "run":
            return cmd_run(load_config(args.config))
        if args.command == "exactdiag":
            return cmd_exactdiag(args.hamiltonian, args.k, args.n_qubits, args.electrons)
        if args.command == "pool-stats":
            return cmd_pool_stats(args.fcidump, args.epsilon)
        return cmd_pool_dump(args.fcidump, args.kind, args.epsilon)
    except np.linalg.LinAlgError as e:
        # LinAlgError is also a ValueError; keep this clause first
        logger.exception("Numerical abort: %s", e)
        print(f"ERROR: {e}", file=sys.stderr)
        return 1
    except (ConfigError, InputFormatError, DimensionError, ValueError, FileNotFoundError) as e:
        # ConfigError and friends are ValueErrors too; bad bitstrings surface as plain ones
        logger.error("%s", e)
        print(f"ERROR: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        logger.exception("Numerical abort: %s", e)
        print(f"ERROR: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
