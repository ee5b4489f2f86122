# history.py
#
# Date: 15 - Mar - 2024
#
# Records the training loss trace and saves it as a CSV file.
################################################################################
from __future__ import print_function
import numpy as np


class LossHistory(object):
    """Running record of (step, loss) pairs"""

    def __init__(self):
        self._steps = np.array([], dtype=int)     # Global step number
        self._loss  = np.array([])                # Pixel-normalised loss

    @property
    def steps(self):
        return self._steps
    @property
    def loss(self):
        return self._loss

    def __len__(self):
        return len(self._steps)

    def __call__(self, step, loss):
        """Append one entry"""
        self._steps = np.append(self._steps, int(step))
        self._loss  = np.append(self._loss, float(loss))

    def window_mean(self, start, stop):
        """Mean loss over entries [start, stop)"""
        return self._loss[start:stop].mean()

    def restart(self, filename):
        """Read a trace written by save, replacing the current one"""
        data = np.loadtxt(filename, delimiter=',', comments='#', ndmin=2)
        self._steps = data[:, 0].astype(int)
        self._loss  = data[:, 1]

    def save(self, filename, headers=()):
        """Write the trace as 'step,loss' CSV.

        args:
            filename : output file
            headers  : ASCII_header strings, written as '#' lines
        """
        head = [h.lstrip('# ') for h in '\n'.join(headers).split('\n') if h]
        head.append('step,loss')

        data = np.column_stack([self._steps, self._loss])
        np.savetxt(filename, data, delimiter=',', fmt=['%d', '%.9g'],
                   header='\n'.join(head))

        return data
