"""Component counts of p q - eps h over eps and grid resolution."""
import argparse

from calfib import realalg, suites


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolutions", type=int, nargs="+", default=[64, 128])
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-3, 3e-3, 0.01, 0.02, 0.05, 0.1])
    args = ap.parse_args()

    p, q = realalg.sphere_hyperplane_pair(3)
    h = realalg.two_disc_h(3)
    print("eps      " + "  ".join(f"n={n:<4d}" for n in args.resolutions))
    for eps in args.eps:
        counts = [realalg.component_count(realalg.viro_perturb(p, q, h, eps), suites.VIRO_BOX, n).count
                  for n in args.resolutions]
        print(f"{eps:<8g} " + "  ".join(f"{c:<6d}" for c in counts))
    circ = realalg.sphere_circle_count(h)
    print(f"circles of h = 0 on the unit sphere: {circ.count} (transversal: {circ.transversal})")


if __name__ == "__main__":
    main()
