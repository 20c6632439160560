"""Shared fixtures for the p4f-cfa test suite"""

import pytest

from core.corpus import CorpusService
from core.syntax import parse_program
from tests.programs import DEEP_SOURCE, DIAMOND_SOURCE, IDENTITY_SOURCE, NESTED_SOURCE, WORKED_SOURCE


@pytest.fixture
def worked():
    return parse_program(WORKED_SOURCE)


@pytest.fixture
def identity():
    return parse_program(IDENTITY_SOURCE)


@pytest.fixture
def diamond():
    return parse_program(DIAMOND_SOURCE)


@pytest.fixture
def deep():
    return parse_program(DEEP_SOURCE)


@pytest.fixture
def nested():
    return parse_program(NESTED_SOURCE)


@pytest.fixture(scope="session")
def corpus():
    return CorpusService()


@pytest.fixture(scope="session")
def corpus_programs(corpus):
    return {name: corpus.get_program(name) for name in corpus.get_names()}
