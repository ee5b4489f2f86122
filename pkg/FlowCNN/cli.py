# cli.py
#
# Date: 22 - Mar - 2024
#
# Command line interface: flowcnn train | infer | eval | gradcheck | colorize
#
# Machine readable output (CSV) goes to stdout, diagnostics to stderr.
# Exit codes: 0 success, 1 invalid input, 2 I/O failure, 3 numerical failure.
################################################################################
from __future__ import print_function
import argparse
import json
import os
import sys
import numpy as np

from .errors import ConfigurationError, NumericalError
from .gradcheck import run_gradcheck
from .history import LossHistory
from .driver import TrainingDriver
from .inference import (InferenceConfig, TraceEntry, estimate_flow,
                        iteration_trace, estimate_directory)
from .metrics import compute_metrics
from .network import init_network
from .trainer import TrainConfig, ingest_pairs, load_checkpoint
from .utils import mkdir_p
from . import io

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3

DefaultConfig = os.path.join(os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))), "control_scripts", "FlowConfig_default.json")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with EXIT_INVALID"""
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, '{}: error: {}\n'.format(self.prog, message))


def _crop(text):
    try:
        h, w = [int(x) for x in text.lower().split('x')]
    except ValueError:
        raise argparse.ArgumentTypeError("expected HxW, found "
                                         "{!r}".format(text))
    return h, w

################################################################################
# Configuration
################################################################################
def load_config(filename):
    """Read a JSON model file with "train", "loss" and "inference" sections"""
    if filename is None:
        return {}
    with open(filename, 'r') as f:
        model = json.load(f)
    unknown = set(model) - {"train", "loss", "inference"}
    if unknown:
        raise ConfigurationError("Unknown sections in {}: {}".format(
            filename, ", ".join(sorted(unknown))))
    return model

def _merge(section, flags):
    """Section values overridden by the flags that were given"""
    merged = dict(section)
    merged.update((k, v) for k, v in flags.items() if v is not None)
    return merged

def train_config(args, model):
    train = _merge(model.get("train", {}),
                   { "learning_rate" : args.lr, "batch_size" : args.batch,
                     "epochs" : args.epochs, "crop_size" : args.crop,
                     "seed" : args.seed })
    loss = _merge(model.get("loss", {}), { "epsilon" : args.eps })
    if "epsilon" in loss:
        train["charbonnier_epsilon"] = loss.pop("epsilon")
    if loss:
        raise ConfigurationError("Unknown loss settings: {}".format(
            ", ".join(sorted(loss))))
    try:
        return TrainConfig(**train)
    except TypeError as e:
        raise ConfigurationError("Bad train settings: {}".format(e))

def inference_config(args, model):
    settings = _merge(model.get("inference", {}),
                      { "num_scales" : args.scales,
                        "iterations_per_scale" : args.iters,
                        "median_radius" : args.median_radius })
    try:
        return InferenceConfig(**settings)
    except TypeError as e:
        raise ConfigurationError("Bad inference settings: {}".format(e))

################################################################################
# Commands
################################################################################
def cmd_train(args):
    model = load_config(args.config)
    cfg = train_config(args, model)

    dataset = ingest_pairs(args.data, cfg.seed, verbose=not args.quiet)
    net = init_network(cfg.seed, learning_rate=cfg.learning_rate,
                       beta1=cfg.beta1, beta2=cfg.beta2,
                       epsilon_adam=cfg.epsilon_adam)

    mkdir_p(os.path.dirname(args.out))
    print('step,loss', file=sys.stdout)
    driver = TrainingDriver(net, dataset, cfg, LossHistory(), args.out,
                            output=sys.stdout)
    history = driver.run(args.max_steps, verbose=not args.quiet,
                         checkpoint_every=args.checkpoint_every)

    if args.history:
        history.save(args.history, driver.headers())
    return EXIT_OK


def cmd_infer(args):
    model = load_config(args.config)
    cfg = inference_config(args, model)
    net = load_checkpoint(args.ckpt)

    if args.dir:
        mkdir_p(args.out_dir)
        results = estimate_directory(net, args.dir, cfg)
        for i, (pair, flow) in enumerate(results):
            io.write_flo(flow, os.path.join(args.out_dir,
                                            'pair_{:04d}.flo'.format(i)))
        print('Wrote {} flow fields to {}'.format(len(results), args.out_dir),
              file=sys.stderr)
        return EXIT_OK

    frame1 = io.read_image(args.frame1)
    frame2 = io.read_image(args.frame2)
    if args.trace:
        flow, trace = iteration_trace(net, frame1, frame2, cfg)
        np.savetxt(args.trace, np.array(trace, dtype='f8').reshape(-1, 3),
                   fmt=['%d', '%d', '%.9g'], delimiter=',',
                   header=','.join(TraceEntry._fields), comments='')
    else:
        flow = estimate_flow(net, frame1, frame2, cfg)

    io.write_flo(flow, args.out)
    if args.png:
        io.write_color(io.flow_to_color(flow), args.png)
    return EXIT_OK


def cmd_eval(args):
    metrics = compute_metrics(io.read_flo(args.est), io.read_flo(args.gt))
    rows = metrics.as_rows()
    print(','.join(label for label, _ in rows))
    print(','.join('{:.6f}'.format(value) for _, value in rows))
    return EXIT_OK


def cmd_gradcheck(args):
    results = run_gradcheck(args.seed)
    print('suite,step,max_rel_error,tolerance')
    for r in results:
        print('{},{:.0e},{:.3e},{:.0e}'.format(r.suite, r.step,
                                               r.max_rel_error, r.tolerance))

    failed = [r.suite for r in results if not r.passed]
    if failed:
        raise NumericalError("Gradient check failed: {}".format(
            ", ".join(failed)))
    return EXIT_OK


def cmd_colorize(args):
    flow = io.read_flo(args.flo)
    io.write_color(io.flow_to_color(flow, args.max_mag), args.out)
    return EXIT_OK

################################################################################
# Parser
################################################################################
def build_parser():
    parser = _Parser(prog='flowcnn',
                     description='Unsupervised CNN optical flow estimation')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    p = sub.add_parser('train', help='train a network on unlabeled pairs')
    p.add_argument("--data", required=True, help='directory of frame sequences')
    p.add_argument("--out", required=True, help='checkpoint file to write')
    p.add_argument("--config", "-c", type=str, default=None,
                   help='JSON model file, see {}'.format(
                       os.path.basename(DefaultConfig)))
    p.add_argument("--lr", type=float, default=None, help='learning rate')
    p.add_argument("--batch", type=int, default=None, help='batch size')
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--crop", type=_crop, default=None, help='HxW crop size')
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--eps", type=float, default=None,
                   help='Charbonnier epsilon')
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--history", type=str, default=None,
                   help='save the loss trace to this file')
    p.add_argument("--checkpoint-every", type=int, default=None)
    p.add_argument("--quiet", "-q", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser('infer', help='estimate the flow between two frames')
    p.add_argument("--ckpt", required=True, help='trained checkpoint')
    p.add_argument("--frame1")
    p.add_argument("--frame2")
    p.add_argument("--out", help='.flo file to write')
    p.add_argument("--png", help='also write the colour coded flow')
    p.add_argument("--trace", help='CSV of the mean photometric error after '
                   'every pass')
    p.add_argument("--dir", help='estimate every consecutive pair in DIR')
    p.add_argument("--out-dir", help='output directory for --dir')
    p.add_argument("--config", "-c", type=str, default=None)
    p.add_argument("--scales", type=int, default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--median-radius", type=int, default=None)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser('eval', help='AEE / AAE of an estimate')
    p.add_argument("--est", required=True)
    p.add_argument("--gt", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser('gradcheck', help='finite difference gradient checks')
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser('colorize', help='colour code a .flo file')
    p.add_argument("--flo", required=True)
    p.add_argument("--out", required=True, help='.png or .ppm')
    p.add_argument("--max-mag", type=float, default=None)
    p.set_defaults(func=cmd_colorize)

    return parser


def _check_infer_args(parser, args):
    if args.command != 'infer':
        return
    if args.dir:
        if not args.out_dir:
            parser.error("--dir requires --out-dir")
    elif not (args.frame1 and args.frame2 and args.out):
        parser.error("infer requires --frame1, --frame2 and --out (or --dir)")


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _check_infer_args(parser, args)
    except SystemExit as e:
        return e.code

    try:
        return args.func(args)
    except NumericalError as e:
        print('error: {}'.format(e), file=sys.stderr)
        return EXIT_NUMERICAL
    except (IOError, OSError) as e:
        print('error: {}'.format(e), file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print('error: {}'.format(e), file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
