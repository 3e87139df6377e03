"""Ball-volume margins of the holomorphic graph and a flat fiber across resolutions."""
import argparse

from calfib import suites


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--graph", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--torus", type=int, nargs="+", default=[16, 32])
    args = ap.parse_args()

    print("holomorphic graph {(z, z^2)}, extrinsic, K = 0")
    for n in args.graph:
        for m in suites.graph_margins(n):
            print(f"  n={n:4d} r={m.r:.1f} measured={m.measured:.6f} disc={m.space_form:.6f} "
                  f"margin={m.margin:+.3e} allowance={m.allowance:.1e} pass={m.passed}")
    print("flat special Lagrangian 3-torus, extrinsic, K = 0")
    for n in args.torus:
        for m in suites.torus_margins(n):
            print(f"  n={n:4d} r={m.r:.2f} margin={m.margin:+.3e} mesh error={m.allowance:.1e} pass={m.passed}")


if __name__ == "__main__":
    main()
