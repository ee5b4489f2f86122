# conftest.py
#
# Date: 2 - Apr - 2024
#
# Tests marked slow (full network training runs) are skipped unless pytest
# is given --runslow.
###############################################################################
import pytest


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the slow training tests")

def pytest_configure(config):
    config.addinivalue_line("markers", "slow: trains the full network")

def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
