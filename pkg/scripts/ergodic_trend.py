"""Connected ray average of Z0 against averaging time on a periodic tilted-field Ising ring."""
import argparse

from lr_ergo.algebra import pauli
from lr_ergo.dynamics import build_engine
from lr_ergo.ergodic import RaySpec, ray_average
from lr_ergo.lattice import RationalDirection, Torus
from lr_ergo.model import build_interaction, hamiltonian
from lr_ergo.states import gibbs_state, tracial_state


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L", type=int, nargs="+", default=[6, 8, 10])
    ap.add_argument("--T", type=float, nargs="+", default=[1, 2, 5, 10, 15, 30, 60])
    ap.add_argument("--v", type=float, default=0.0)
    ap.add_argument("--beta", type=float, default=0.0)
    args = ap.parse_args()
    print("L,T,abs_connected,quad_error")
    for L in args.L:
        torus = Torus((L,), "periodic")
        phi = build_interaction("tilted_ising", torus, {"J": 1.0, "h_x": 1.05, "h_z": 0.5})
        eng = build_engine(hamiltonian(phi), torus)
        s = tracial_state(eng.volume) if args.beta == 0 else gibbs_state(eng, args.beta)
        Z0 = pauli("Z", 0)
        for T in args.T:
            r = ray_average(s, Z0, Z0, RaySpec(RationalDirection((1,)), args.v), T, eng)
            print(f"{L},{T},{abs(r.connected):.6e},{r.estimated_quadrature_error:.1e}")


if __name__ == "__main__":
    main()
