import pytest


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help="run the long statistical tests")


def pytest_configure(config):
    config.addinivalue_line('markers', "slow: long training or evaluation run")


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)
