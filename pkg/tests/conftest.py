"""Shared fixtures: the packaged sample data and the synthetic face."""

from importlib import resources

import pytest

from faceatlas import bind_channels, compile_atlas, parse_atlas, parse_channels
from faceatlas import synth


def packaged_text(name: str) -> str:
    return resources.files("faceatlas").joinpath(f"data/{name}").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def sample_atlas_text() -> str:
    return packaged_text("sample_atlas.csv")


@pytest.fixture(scope="session")
def sample_program(sample_atlas_text):
    return compile_atlas(parse_atlas(sample_atlas_text))


@pytest.fixture(scope="session")
def sample_registry(sample_program):
    return bind_channels(parse_channels(packaged_text("channels.csv")), sample_program)


@pytest.fixture(scope="session")
def semantics():
    return synth.default_semantics()


@pytest.fixture()
def frame():
    return synth.synthetic_frame()
