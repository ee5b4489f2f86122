# utils.py
#
# Small helpers: output directories, the worker thread budget and ASCII
# headers built from the HDF5 style attributes of the configuration classes.
################################################################################
from __future__ import print_function
import errno
import os
import sys

THREADS_ENV = "USCNN_THREADS"


def mkdir_p(path):
    """Create a directory (and parents), ignoring one that already exists"""
    if not path:
        return
    try:
        os.makedirs(path)
    except OSError as exc:
        if exc.errno == errno.EEXIST and os.path.isdir(path):
            pass
        else:
            raise


def num_threads():
    """Worker thread cap from USCNN_THREADS, default: machine parallelism"""
    value = os.environ.get(THREADS_ENV)
    if value is None:
        return os.cpu_count() or 1
    try:
        n = int(value)
    except ValueError:
        n = 0
    if n < 1:
        print("{}={!r} is not a positive integer, using 1 thread".format(
            THREADS_ENV, value), file=sys.stderr)
        return 1
    return n


def make_ASCII_header(HDF5_attributes):
    """Generates header in ASCII format from the HDF5 format."""
    # Class name
    head = "# {} ".format(HDF5_attributes[0])

    # Add dictionary of attributes
    def make_item(item):
        key, value = item
        return "{}: {}".format(key, value)

    return head + ", ".join(map(make_item, HDF5_attributes[1].items()))
