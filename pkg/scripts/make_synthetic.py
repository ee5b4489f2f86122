# make_synthetic.py
#
# Date: 25 - Mar - 2024
#
# Write a directory of shifted texture pairs with ground truth .flo files.
################################################################################
from __future__ import print_function
import sys

from FlowCNN.synthetic import make_dataset

if __name__ == "__main__":
    import argparse
    parser = argparse.ArgumentParser()
    parser.add_argument("root", help='output directory')
    parser.add_argument("--n-pairs", "-n", type=int, default=500)
    parser.add_argument("--size", type=int, nargs=2, default=[64, 64], metavar=('H', 'W'))
    parser.add_argument("--max-shift", type=float, default=2.0)
    parser.add_argument("--sigma", type=float, default=2.0, help='texture blur')
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--static-fraction", type=float, default=0., help='share of zero shift pairs')
    args = parser.parse_args()

    shifts = make_dataset(args.root, args.n_pairs, tuple(args.size),
                          args.max_shift, args.seed, args.sigma,
                          args.static_fraction)
    print('Wrote {} pairs to {}'.format(len(shifts), args.root), file=sys.stderr)
