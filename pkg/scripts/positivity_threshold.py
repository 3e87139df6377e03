"""Scan the glued Kahler form for positivity and bisect the largest admissible t."""
import argparse

from calfib import metrics


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r-inner", type=float, default=0.25)
    ap.add_argument("--r-outer", type=float, default=0.5)
    ap.add_argument("--n-u", type=int, default=64)
    ap.add_argument("--n-dir", type=int, default=32)
    ap.add_argument("--iterations", type=int, default=20)
    args = ap.parse_args()

    print(f"{'t':>8} {'min eigenvalue':>16} pass")
    for t in (0.01, 0.05, 0.1, 0.11, 0.12, 0.2, 0.5):
        rep = metrics.positivity_scan(metrics.GluedKahlerData(t, args.r_inner, args.r_outer), args.n_u, args.n_dir)
        print(f"{t:8.3f} {rep.min_eigenvalue:16.6f} {rep.passed}")
    lo, hi = metrics.largest_passing_t(args.r_inner, args.r_outer, iterations=args.iterations,
                                       n_u=args.n_u, n_dir=args.n_dir)
    print(f"largest passing t in [{lo:.6f}, {hi:.6f}]")


if __name__ == "__main__":
    main()
