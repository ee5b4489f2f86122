# run_synthetic.py
#
# Date: 25 - Mar - 2024
#
# Desk-scale experiment: train the full network on 500 synthetic shifted
# textures and report the flow errors on 50 held-out pairs.
#
# With FlowConfig_synthetic.json (48x48 crops of 64x64 frames, batch 4,
# 30 epochs at lr 3e-4) training is 3750 steps.
################################################################################
from __future__ import print_function
import json
import os
import sys

from FlowCNN.synthetic import desk_experiment

DefaultModel = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                            "FlowConfig_synthetic.json")


def main():
    import argparse
    parser = argparse.ArgumentParser()
    parser.add_argument("--model", "-m", type=str, default=DefaultModel, help='specify the model input json file')
    parser.add_argument("--dir", "-d", type=str, default="synthetic_run", help='output directory')
    parser.add_argument("--n-train", type=int, default=500)
    parser.add_argument("--n-test", type=int, default=50)
    parser.add_argument("--size", type=int, default=64, help='frame side')
    parser.add_argument("--max-shift", type=float, default=2.0)
    parser.add_argument("--static-fraction", type=float, default=0.1, help='share of zero shift training pairs')
    parser.add_argument("--epochs", type=int, default=None, help='override the model file')
    args = parser.parse_args()
    model = json.load(open(args.model, 'r'))

    if args.epochs is not None:
        model['train']['epochs'] = args.epochs

    result = desk_experiment(args.dir, model, args.n_train, args.n_test,
                             (args.size, args.size), args.max_shift,
                             static_fraction=args.static_fraction)

    rows = result.metrics.as_rows()
    print(','.join(label for label, _ in rows))
    print(','.join('{:.6f}'.format(v) for _, v in rows))
    return 0


if __name__ == "__main__":
    sys.exit(main())
