import numpy as np
import pytest
import sympy as sp
from hypothesis import settings

from warpedrigidity.geomkit import Chart, MetricChart, ScalarField

settings.register_profile("repo", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("repo")

T = sp.Symbol("t", real=True)


def line_field(expr):
    return ScalarField.from_expr(expr, [T], str(expr))


def line_metric(lo=-2.0, hi=2.0):
    return MetricChart.from_expr(sp.Matrix([[1]]), [T], Chart((lo,), (hi,)), "R")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
