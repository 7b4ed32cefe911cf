"""Pytest configuration for tropical-vz tests"""


def pytest_configure(config):
    """Register the markers used by the acceptance suites"""
    config.addinivalue_line("markers", "slow: randomized or corpus-wide suites")
