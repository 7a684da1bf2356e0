import pytest

from mlfuse import codegen, fixtures


@pytest.fixture(scope="session")
def built(tmp_path_factory):
    """name -> (bundle, artifact): one compiled build per fixture model."""
    root = tmp_path_factory.mktemp("builds")
    out = {}
    for name in sorted(fixtures.FIXTURES):
        bundle = fixtures.build_fixture(name)
        out[name] = (bundle, codegen.pipeline(bundle, root / name))
    return out
