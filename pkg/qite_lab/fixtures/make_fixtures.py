#!/usr/bin/env python3
"""
make_fixtures.py

Generate the molecular FCIDUMP fixtures with PySCF (STO-6G):

  h4_square.fcidump  square H4, 1 Angstrom sides, symmetry-adapted orbitals: 4 orbitals / 4 electrons (8 qubits)
  beh2_fc.fcidump    linear BeH2, Be-H 1.334 Angstrom, Be 1s frozen: 6 orbitals / 4 electrons (12 qubits)

PySCF is only needed here; the rest of the package reads the written files.
h4_square.fcidump ships with the package and this script regenerates it.
beh2_fc.fcidump is optional; tests that need it are skipped until it is written.

Usage:
  python3 make_fixtures.py            # writes next to this script
  python3 make_fixtures.py OUTDIR
"""

import sys
from pathlib import Path


def write_h4(path: Path) -> float:
    """Square H4 in symmetry-adapted site combinations; returns the FCI energy."""
    import numpy as np
    from pyscf import ao2mo, fci, gto
    from pyscf.tools import fcidump

    mol = gto.M(
        atom="H 0 0 0; H 1.0 0 0; H 1.0 1.0 0; H 0 1.0 0",
        basis="sto-6g",
        unit="Angstrom",
    )
    s = mol.intor("int1e_ovlp")
    # sites in cyclic order: a1g, the two degenerate e_u partners, b2g
    signs = np.array([[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, -1, 1], [1, -1, 1, -1]], dtype=float).T
    mo = signs / np.sqrt(np.einsum("ai,ab,bi->i", signs, s, signs))
    h1 = mo.T @ (mol.intor("int1e_kin") + mol.intor("int1e_nuc")) @ mo
    h2 = ao2mo.restore(1, ao2mo.kernel(mol, mo), 4)
    fcidump.from_integrals(str(path), h1, h2, 4, 4, nuc=mol.energy_nuc(), tol=1e-12)
    e_fci, _ = fci.direct_spin1.kernel(h1, h2, 4, 4, ecore=mol.energy_nuc())
    return e_fci


def write_beh2_frozen_core(path: Path) -> float:
    from pyscf import ao2mo, gto, mcscf, scf
    from pyscf.tools import fcidump

    mol = gto.M(
        atom="Be 0 0 0; H 0 0 1.334; H 0 0 -1.334",
        basis="sto-6g",
        unit="Angstrom",
    )
    mf = scf.RHF(mol).run()
    # all orbitals but Be 1s, with the core folded into h1 and the constant
    cas = mcscf.CASCI(mf, 6, 4)
    h1, e_core = cas.get_h1eff()
    h2 = ao2mo.restore(1, cas.get_h2eff(), 6)
    fcidump.from_integrals(str(path), h1, h2, 6, 4, nuc=e_core, tol=1e-12)
    return mf.e_tot


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
    out.mkdir(parents=True, exist_ok=True)
    try:
        import pyscf  # noqa: F401
    except ImportError:
        print("ERROR: PySCF is required to generate these fixtures (pip install pyscf)")
        sys.exit(1)

    e = write_h4(out / "h4_square.fcidump")
    print(f"✓ h4_square.fcidump (FCI {e:.8f})")
    e = write_beh2_frozen_core(out / "beh2_fc.fcidump")
    print(f"✓ beh2_fc.fcidump (RHF {e:.8f})")


if __name__ == "__main__":
    main()
