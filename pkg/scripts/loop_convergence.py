"""Loop integrals of p + c along horizontal circles as the lattice truncation grows."""
import argparse

from calfib import elliptic


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=complex, default=0.5)
    ap.add_argument("--tau", type=complex, default=1j)
    ap.add_argument("--t", type=float, nargs="+", default=[0.25, 0.4, 0.6])
    ap.add_argument("--points", type=int, default=512)
    args = ap.parse_args()

    print(f"{'N':>4} {'deviation':>12} {'error vs c - G2':>16}")
    for N, dev, err in elliptic.truncation_table(args.c, args.t, args.tau, points=args.points):
        print(f"{N:4d} {dev:12.3e} {err:16.3e}")


if __name__ == "__main__":
    main()
