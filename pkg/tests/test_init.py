"""Test the lazy namespace of the hetcusum package."""
import importlib

import pytest

import hetcusum

LAZY_NAMES = [
    pytest.param(origin, name, id=name)
    for origin, names in hetcusum.all_imports_by_origin.items()
    for name in names
]


@pytest.mark.parametrize(("origin", "name"), LAZY_NAMES)
def test_lazy_name(origin, name):
    assert getattr(hetcusum, name) is getattr(importlib.import_module(origin), name)


def test_log_is_the_package_logger():
    assert hetcusum.log.name == "hetcusum"
    assert len(hetcusum.log.handlers) == 1
