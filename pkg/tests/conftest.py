import pytest

from vwgen import grammars, load_grammar
from vwgen.model import NO_MATCH


@pytest.fixture(scope="session")
def anbncn():
    return load_grammar(grammars.path("anbncn.vw"))


@pytest.fixture(scope="session")
def infinite_alphabet():
    return load_grammar(grammars.path("infinite-alphabet.vw"))


@pytest.fixture(scope="session")
def toyisa_grammar():
    return load_grammar(grammars.path("toyisa.vw"), NO_MATCH)


@pytest.fixture(scope="session")
def kary3():
    return load_grammar(grammars.path("kary3.vw"))


@pytest.fixture(scope="session")
def cf8():
    return load_grammar(grammars.path("cf-8.vw"), NO_MATCH)


@pytest.fixture(scope="session")
def cf216():
    return load_grammar(grammars.path("cf-216.vw"), NO_MATCH)
