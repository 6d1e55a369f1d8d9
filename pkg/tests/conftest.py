import pytest

from linguograph.cli import packaged_registry_path
from linguograph.pipeline import rebuild
from linguograph.resolve import Resolver
from linguograph.store import load_database, load_names


@pytest.fixture(scope="session")
def built(tmp_path_factory):
    """One full rebuild of the bundled fixture corpus for the whole session."""
    tmp = tmp_path_factory.mktemp("fixture-build")
    return rebuild(packaged_registry_path(), tmp / "cache", tmp / "fixture.lgdb.gz")


@pytest.fixture(scope="session")
def db(built):
    return load_database(built.database_path)


@pytest.fixture(scope="session")
def resolver(built, db):
    return Resolver(db, names=load_names(built.names_path, db))


@pytest.fixture()
def noticing_resolver(built, db):
    notices = []
    r = Resolver(db, names=load_names(built.names_path, db), notice_sink=notices.append)
    return r, notices
