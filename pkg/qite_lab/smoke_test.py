#!/usr/bin/env python3
"""
Smoke test for qite_lab.

This script verifies that:
1. The bundled FCIDUMP parses and maps to a Hermitian qubit Hamiltonian
2. Exact diagonalization reproduces the documented H2 FCI energy
3. QITE from Hartree-Fock reaches that energy
4. Two-state MSQITE returns the exact gerade spectrum
5. The command-line run writes trace.csv and summary.txt
"""

import sys
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd

from fermion_map import build_hamiltonian, build_pool, hartree_fock_bits, parse_fcidump
from msqite import MsqiteConfig, run_msqite
from qite import QiteConfig, run_qite
from statevec import exact_diag, prepare

FIXTURES = Path(__file__).parent / "fixtures"
H2_FCI = -1.137285215


def test_hamiltonian():
    """Parse H2 and check the qubit operator."""
    print("\n[1/5] Parsing h2_minimal.fcidump...")
    try:
        ints = parse_fcidump(FIXTURES / "h2_minimal.fcidump")
        h = build_hamiltonian(ints)
        assert h.n_qubits == 4, f"Expected 4 qubits, got {h.n_qubits}"
        assert h.is_hermitian(), "Hamiltonian is not Hermitian"
        assert hartree_fock_bits(ints) == "0011", f"Expected HF 0011, got {hartree_fock_bits(ints)}"
        print(f"  ✓ {len(h)} Pauli terms on {h.n_qubits} qubits")
        return True
    except Exception as e:
        print(f"  ✗ Hamiltonian build failed: {e}")
        return False


def test_exact_diag():
    """Ground energy of H2 by dense diagonalization."""
    print("\n[2/5] Exact diagonalization...")
    try:
        h = build_hamiltonian(parse_fcidump(FIXTURES / "h2_minimal.fcidump"))
        e0 = exact_diag(h, n_electrons=2).eigenvalues[0]
        assert abs(e0 - H2_FCI) < 1e-5, f"Expected {H2_FCI}, got {e0:.9f}"
        print(f"  ✓ E0 = {e0:.9f} Hartree")
        return True
    except Exception as e:
        print(f"  ✗ Exact diagonalization failed: {e}")
        return False


def test_qite():
    """UCCSD QITE to beta = 4."""
    print("\n[3/5] QITE on H2...")
    try:
        ints = parse_fcidump(FIXTURES / "h2_minimal.fcidump")
        h = build_hamiltonian(ints)
        run = run_qite(prepare("0011"), h, QiteConfig(0.1, 4.0, build_pool("uccsd", ints)))
        err = run.energies[-1] - exact_diag(h, n_electrons=2).eigenvalues[0]
        assert abs(err) < 1e-6, f"QITE error {err:.3e} is above 1e-6"
        print(f"  ✓ {len(run.reports) - 1} steps, error {err:.2e} Hartree")
        return True
    except Exception as e:
        print(f"  ✗ QITE failed: {e}")
        return False


def test_msqite():
    """Two-state MSQITE on the closed-shell pair."""
    print("\n[4/5] MSQITE on H2...")
    try:
        ints = parse_fcidump(FIXTURES / "h2_minimal.fcidump")
        h = build_hamiltonian(ints)
        run = run_msqite([prepare("0011"), prepare("1100")], h, MsqiteConfig(0.1, 1.0, build_pool("hamiltonian", ints)))
        exact = exact_diag(h, n_electrons=2).eigenvalues
        eff = run.effective[-1]
        assert abs(eff[0] - exact[0]) < 1e-8, f"Ground error {eff[0] - exact[0]:.3e}"
        assert abs(eff[1] - exact[-1]) < 1e-8, f"Doubly excited error {eff[1] - exact[-1]:.3e}"
        print(f"  ✓ Effective spectrum {np.array2string(eff, precision=6)}")
        return True
    except Exception as e:
        print(f"  ✗ MSQITE failed: {e}")
        return False


def test_cli_run():
    """main.py run on a temporary configuration."""
    print("\n[5/5] Command-line run...")
    try:
        import main

        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "out"
            cfg = Path(tmp) / "run.conf"
            cfg.write_text(
                f"hamiltonian = {FIXTURES / 'h2_minimal.fcidump'}\n"
                f"output_dir = {out}\n"
                "pool = uccsd\nbeta_max = 1.0\nqlanczos = true\n"
            )
            status = main.main(["run", "--config", str(cfg)])
            assert status == 0, f"Expected exit status 0, got {status}"
            trace = pd.read_csv(out / "trace.csv")
            assert len(trace) == 11, f"Expected 11 trace rows, got {len(trace)}"
            assert (out / "summary.txt").exists(), "summary.txt missing"
        print(f"  ✓ trace.csv has {len(trace)} rows and {len(trace.columns)} columns")
        return True
    except Exception as e:
        print(f"  ✗ Command-line run failed: {e}")
        return False


def main():
    print("=" * 60)
    print("qite_lab Smoke Test")
    print("=" * 60)

    results = [
        ("Hamiltonian", test_hamiltonian()),
        ("Exact diagonalization", test_exact_diag()),
        ("QITE", test_qite()),
        ("MSQITE", test_msqite()),
        ("CLI run", test_cli_run()),
    ]

    print("\n" + "=" * 60)
    print("Summary")
    print("=" * 60)

    passed = sum(1 for _, r in results if r)
    failed = len(results) - passed
    for name, result in results:
        status = "✓ PASS" if result else "✗ FAIL"
        print(f"  {status:7} {name}")

    print("\nTotal: {} passed, {} failed".format(passed, failed))

    if failed == 0:
        print("\n✓ All tests passed!")
        return 0
    else:
        print("\n✗ Some tests failed. Check the fixtures and logs.")
        return 1


if __name__ == "__main__":
    sys.exit(main())
