"""Cross-type distances on the four-block task, with and without per-type centering.

Writes the block-ordered distance matrices for an external projector when
``--out-dir`` is given.
"""

import argparse
from pathlib import Path

from relembed.evaluation import FOUR_CLUSTERS
from relembed.experiments import normalization_run
from relembed.postproc import center_by_type, pairwise_distances, write_distances


def show(name, cd):
    print(f"{name}: mean cluster distances")
    print("      " + " ".join(f"{t}{c:>4}" for t, c in cd.groups))
    for g, row in zip(cd.groups, cd.mean):
        print(f"{g[0]}{g[1]:>4} " + " ".join(f"{x:5.2f}" for x in row))
    print(f"  same-type clusters compact: {cd.within_lt_between()}")
    print(f"  partner nearest among all clusters: {dict(zip(FOUR_CLUSTERS, cd.partner_nearest('A', 'B')))}")
    print(f"  partner nearest among cross-type:   {dict(zip(FOUR_CLUSTERS, cd.partner_closer_than_cross('A', 'B')))}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir")
    args = ap.parse_args()
    res = normalization_run(args.seed)
    show("raw", res.raw)
    show("centered", res.centered)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for tag, emb in (("raw", res.emb), ("centered", center_by_type(res.emb))):
            d, _ = pairwise_distances(emb, ["A", "B"])
            write_distances(d, ["A", "B"], out / f"dist_{tag}.txt")


if __name__ == "__main__":
    main()
