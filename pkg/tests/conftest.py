import pytest

from pwdflow import load_document

from support import FIXTURES


@pytest.fixture(scope="session")
def arithmetic_doc():
    return load_document(FIXTURES / "arithmetic.json")


@pytest.fixture(scope="session")
def diamond_doc():
    return load_document(FIXTURES / "diamond.json")


@pytest.fixture(scope="session")
def fanout_doc():
    return load_document(FIXTURES / "fanout.json")


@pytest.fixture(scope="session")
def empty_doc():
    return load_document(FIXTURES / "empty.json")
