# plot_loss.py
#
# Date: 26 - Mar - 2024
#
# Plot training loss traces written by `flowcnn train --history`.
################################################################################
from __future__ import print_function
import numpy as np
import matplotlib.pyplot as plt

from FlowCNN.history import LossHistory


def running_mean(x, window):
    window = max(1, min(window, len(x)))
    return np.convolve(x, np.ones(window) / window, mode='valid')

if __name__ ==  "__main__":
    import argparse
    parser = argparse.ArgumentParser()
    parser.add_argument("traces", nargs='+', help='loss CSV files')
    parser.add_argument("--window", "-w", type=int, default=50)
    parser.add_argument("--out", "-o", default=None, help='save instead of showing')
    args = parser.parse_args()

    for name in args.traces:
        history = LossHistory()
        history.restart(name)
        steps, loss = history.steps, history.loss

        l, = plt.semilogy(steps, loss, alpha=0.3)
        smooth = running_mean(loss, args.window)
        plt.semilogy(steps[len(steps) - len(smooth):], smooth,
                     c=l.get_color(), label=name)

    plt.xlabel('step')
    plt.ylabel('loss / pixel')
    plt.legend()
    if args.out:
        plt.savefig(args.out)
    else:
        plt.show()
