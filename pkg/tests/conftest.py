import re

import jsonschema
import pytest
import referencing
from hypothesis import settings

from toruslab import covariance, observable
from toruslab._schemas import load_schema, schema_names
from toruslab.matrix_core import CAT_MAP, QUASI_HYPERBOLIC_T4, ToralAutomorphism

# first calls into numba kernels compile, which blows any per-example deadline
settings.register_profile("toruslab", deadline=None)
settings.load_profile("toruslab")


@pytest.fixture(scope="session")
def cat():
    return ToralAutomorphism.from_matrix(CAT_MAP)


@pytest.fixture(scope="session")
def t4():
    return ToralAutomorphism.from_matrix(QUASI_HYPERBOLIC_T4)


@pytest.fixture(scope="session")
def cosine():
    # c_{(1,0)} = c_{(-1,0)} = 1, i.e. f = 2 cos(2 pi x_1), Var f = 2
    return observable.explicit({(1, 0): 1.0})


@pytest.fixture(scope="session")
def cosine4():
    return observable.explicit({(1, 0, 0, 0): 1.0})


@pytest.fixture(scope="session")
def cob(cat):
    """g o T - g for g = 2 cos(2 pi x_1)."""
    return covariance.coboundary(observable.explicit({(1, 0): 1.0}), cat)


@pytest.fixture(scope="session")
def validate():
    registry = referencing.Registry().with_resources(
        (name, referencing.Resource.from_contents(load_schema(name)))
        for name in schema_names())

    def check(obj, name):
        schema = load_schema(name)
        jsonschema.Draft202012Validator(schema, registry=registry).validate(obj)

    return check


# -- acceptance summary -------------------------------------------------------------

_CRITERIA = {}
_CRIT_RE = re.compile(r"test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    m = _CRIT_RE.search(report.nodeid)
    if not m or "test_acceptance" not in report.nodeid:
        return
    key = int(m.group(1))
    failed = report.failed
    if report.when == "call" or failed:
        prev = _CRITERIA.get(key, (m.group(2), True))
        _CRITERIA[key] = (m.group(2), prev[1] and not failed and not report.skipped)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        name, ok = _CRITERIA[key]
        terminalreporter.write_line(f"criterion {key:2d} {'PASS' if ok else 'FAIL'}  {name.replace('_', ' ')}")
