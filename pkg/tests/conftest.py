import pytest

from maasscert.forms import load_form, shipped_example_path


@pytest.fixture(scope="session")
def level5():
    return load_form(shipped_example_path())
