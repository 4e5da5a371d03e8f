import pytest

from archtools import build_archive, dump_archive


@pytest.fixture(scope="session")
def small_archive(tmp_path_factory):
    """11 mods x 20 SNRs x 4 frames per cell."""
    path = tmp_path_factory.mktemp("arch") / "small.pkl"
    data = build_archive(4, seed=1)
    dump_archive(data, path)
    return path, data


@pytest.fixture(scope="session")
def full_archive(tmp_path_factory):
    """Full-size stand-in: 1000 frames per cell, as published."""
    path = tmp_path_factory.mktemp("arch") / "full.pkl"
    data = build_archive(1000, seed=2)
    dump_archive(data, path)
    return path, data
