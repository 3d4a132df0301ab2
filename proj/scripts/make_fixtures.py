#!/usr/bin/env python3
"""Regenerate the FCIDUMP fixtures under tests/fixtures.

Each molecule gets a CASSCF active space in natural orbitals (sorted by
descending occupation), written as FCIDUMP together with a JSON file that
records the generating package's FCI energy inside that active space.
Requires pyscf.
"""
import json
import pathlib
import sys

import numpy as np
from pyscf import fci, gto, mcscf, scf
from pyscf.tools import fcidump

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def chain(n, spacing):
    return [("H", (0.0, 0.0, i * spacing)) for i in range(n)]


def build(label, atoms, basis, spin, ncas, nelecas, note):
    mol = gto.M(atom=atoms, basis=basis, spin=spin, unit="Angstrom", verbose=0)
    mf = scf.ROHF(mol) if spin else scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    mc = mcscf.CASSCF(mf, ncas, nelecas)
    mc.natorb = True
    mc.conv_tol = 1e-12
    mc.fix_spin_(ss=0.5 * spin * (0.5 * spin + 1))
    mc.kernel()
    h1, ecore = mc.get_h1eff()
    h2 = mc.get_h2eff()
    from pyscf import ao2mo  # noqa: E402
    h2 = ao2mo.restore(1, h2, ncas)
    na, nb = (nelecas if isinstance(nelecas, tuple) else
              ((nelecas + spin) // 2, (nelecas - spin) // 2))
    path = OUT / f"{label}.fcidump"
    fcidump.from_integrals(str(path), h1, h2, ncas, na + nb, nuc=ecore,
                           ms=na - nb, tol=1e-15, float_format=" %.16e")
    # FCI directly on the exported integrals, lowest state of target spin.
    solver = fci.direct_spin1.FCI()
    solver.conv_tol = 1e-13
    solver = fci.addons.fix_spin_(solver, ss=0.5 * spin * (0.5 * spin + 1))
    e, civec = solver.kernel(h1, h2, ncas, (na, nb), ecore=ecore, nroots=1)
    ss, mult = fci.spin_op.spin_square(civec, ncas, (na, nb))
    meta = {
        "label": label,
        "basis": basis,
        "n_orbitals": ncas,
        "n_alpha": na,
        "n_beta": nb,
        "spin_multiplicity": spin + 1,
        "fci_energy": float(e),
        "casscf_energy": float(mc.e_tot),
        "s_squared": float(ss),
        "note": note,
    }
    (OUT / f"{label}.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(label, e, mc.e_tot, ss)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    build("h2", chain(2, 0.74), "sto-3g", 0, 2, 2, "H2 at 0.74 A")
    build("h4", chain(4, 1.0), "sto-3g", 0, 4, 4, "linear H4, 1.0 A spacing")
    build("h5", chain(5, 1.0), "sto-3g", 1, 5, 5, "linear H5 doublet, 1.0 A spacing")
    build("h6", chain(6, 1.0), "sto-3g", 0, 6, 6, "linear H6, 1.0 A spacing")
    build("h4_stretched", chain(4, 3.0), "sto-3g", 0, 4, 4, "linear H4, 3.0 A spacing")
    build("lih", [("Li", (0, 0, 0)), ("H", (0, 0, 1.6))], "sto-3g", 0, 4, 2,
          "LiH at 1.6 A, (2e,4o) active space")


if __name__ == "__main__":
    sys.exit(main())
