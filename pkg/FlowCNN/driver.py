# driver.py
#
# Date: 15 - Mar - 2024
#
# Training driver: walks the data set in seeded epochs, batches pairs and
# applies train_step, keeping the loss history and writing checkpoints.
################################################################################
from __future__ import print_function
import sys

from .errors import EmptyDatasetError
from .history import LossHistory
from .trainer import train_step, save_checkpoint


class TrainingDriver(object):
    """Driver class for unsupervised training.

    Required Arguments:
        net     : EncoderDecoderNet to train (updated in place)
        dataset : FramePairDataset
        config  : TrainConfig

    Optional:
        history    : LossHistory, created if not given
        checkpoint : file written every checkpoint_every steps and at the end
        output     : stream receiving one 'step,loss' line per step
    """

    def __init__(self, net, dataset, config, history=None, checkpoint=None,
                 output=None):
        self._net = net
        self._data = dataset
        self._cfg = config
        self._history = history if history is not None else LossHistory()
        self._checkpoint = checkpoint
        self._output = output

        self._epoch = 0
        self._nstep = 0
        self._queue = []
        self._rng = None

    @property
    def net(self):
        return self._net
    @property
    def dataset(self):
        return self._data
    @property
    def config(self):
        return self._cfg
    @property
    def history(self):
        return self._history
    @property
    def epoch(self):
        return self._epoch
    @property
    def num_steps(self):
        return self._nstep

    def _next_batch(self):
        """Up to batch_size readable, cropped pairs from the current epoch.

        Returns an empty list once every epoch has been consumed.
        """
        batch = []
        while len(batch) < self._cfg.batch_size:
            if not self._queue:
                if batch or self._epoch >= self._cfg.epochs:
                    break
                self._rng = self._data.crop_generator(self._epoch)
                self._queue = list(self._data.epoch_order(self._epoch))
                self._epoch += 1
            i = self._queue.pop(0)
            pair = self._data.load_pair(i, self._cfg.crop_size, self._rng)
            if pair is not None:
                batch.append(pair)
        return batch

    def __call__(self):
        """Train on a single batch.

        returns:
            the batch loss, or None when the data is exhausted
        """
        batch = self._next_batch()
        if not batch:
            return None

        loss = train_step(self._net, batch, self._cfg)
        self._nstep += 1
        self._history(self._nstep, loss)

        if self._output is not None:
            print('{},{:.9g}'.format(self._nstep, loss), file=self._output)
        return loss

    def headers(self):
        """ASCII_header strings of the run"""
        return [self._cfg.ASCII_header(), self._net.ASCII_header()]

    def run(self, max_steps=None, verbose=True, n_print=50,
            checkpoint_every=None):
        """Train over all epochs, or until max_steps batches.

        args:
            max_steps        : stop after this many steps, default=None
            verbose          : print progress to stderr
            n_print          : steps between progress lines
            checkpoint_every : steps between checkpoint writes
        returns:
            LossHistory
        """
        if verbose:
            for h in self.headers():
                print(h, file=sys.stderr)

        while max_steps is None or self._nstep < max_steps:
            loss = self()
            if loss is None:
                break

            if verbose and self._nstep % n_print == 0:
                print('Epoch {}, step {}, loss {:.6g}'.format(
                    self._epoch, self._nstep, loss), file=sys.stderr)

            if (checkpoint_every and self._checkpoint
                    and self._nstep % checkpoint_every == 0):
                save_checkpoint(self._net, self._checkpoint)

        if self._nstep == 0:
            raise EmptyDatasetError("No readable pair of at least {}x{} in {}"
                                    .format(self._cfg.crop_size[0],
                                            self._cfg.crop_size[1],
                                            self._data.root))

        if self._checkpoint:
            save_checkpoint(self._net, self._checkpoint)

        return self._history
