"""Lieb-Robinson certificate for an open transverse-field Ising chain; prints the table."""
import argparse
import math

import numpy as np

from lr_ergo.algebra import pauli
from lr_ergo.certify import certify_lr
from lr_ergo.dynamics import build_engine
from lr_ergo.lattice import Torus
from lr_ergo.model import build_interaction, hamiltonian


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L", type=int, default=8)
    ap.add_argument("--h", type=float, default=1.0)
    ap.add_argument("--lam", type=float, default=math.log(2))
    ap.add_argument("--t-max", type=float, default=1.0)
    ap.add_argument("--points", type=int, default=21)
    ap.add_argument("--source", type=int, default=0, help="site of the first Z")
    args = ap.parse_args()
    torus = Torus((args.L,), "open")
    phi = build_interaction("transverse_ising", torus, {"J": 1.0, "h_x": args.h})
    eng = build_engine(hamiltonian(phi), torus)
    a = pauli("Z", args.source)
    pairs = [(f"Z{args.source}", a, f"Z{d}", pauli("Z", d)) for d in range(args.source + 1, args.L)]
    cert = certify_lr(eng, phi, pairs, np.linspace(0.0, args.t_max, args.points), args.lam)
    print(cert.to_text())


if __name__ == "__main__":
    main()
