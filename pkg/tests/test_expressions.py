import numpy as np
import pytest
import sympy as sp

from warpedrigidity import expressions
from warpedrigidity.errors import ExpressionError

t = sp.Symbol("t", real=True)


class TestParse:
    @pytest.mark.parametrize(
        "text, expected",
        [
            ("exp(t**2/2)", sp.exp(t**2 / 2)),
            ("t^3 - 2*t", t**3 - 2 * t),
            ("sqrt(pi)/2*erf(t) + 1", sp.sqrt(sp.pi) / 2 * sp.erf(t) + 1),
            ("-cosh(t)", -sp.cosh(t)),
            ("sech(t)**2", sp.sech(t) ** 2),
        ],
    )
    def test_accepts(self, text, expected):
        assert sp.simplify(expressions.parse(text) - expected) == 0

    @pytest.mark.parametrize(
        "text",
        ["__import__('os')", "t.real", "open(t)", "y + 1", "[t]", "lambda: 1", "exp(t, base=2)", "t +"],
    )
    def test_rejects(self, text):
        with pytest.raises(ExpressionError):
            expressions.parse(text)

    def test_numbers_pass_through(self):
        assert expressions.parse(2) == 2
        assert expressions.parse(0.5) == sp.Float(0.5)

    def test_several_variables(self):
        assert expressions.parse("x0*cos(x1)", ("x0", "x1")).free_symbols == {
            sp.Symbol("x0", real=True), sp.Symbol("x1", real=True)
        }


class TestIntegrate:
    def test_closed_form(self):
        e = expressions.parse("exp(t**2/2)*integrate(exp(-s**2), s, 0, t)")
        assert float(e.subs(t, 1.0)) == pytest.approx(np.exp(0.5) * np.sqrt(np.pi) / 2 * 0.8427007929497149)

    def test_no_closed_form(self):
        with pytest.raises(ExpressionError):
            expressions.parse("integrate(exp(-exp(s**2))*s**3, s, 0, t)")

    def test_arity(self):
        with pytest.raises(ExpressionError):
            expressions.parse("integrate(s, s, 0)")


class TestNumeric:
    def test_function_of_t(self):
        f = expressions.function_of_t("1 + t^2")
        assert f(2.0) == pytest.approx(5.0)
        assert expressions.function_of_t("2*pi") == pytest.approx(2 * np.pi)
        assert expressions.function_of_t(3) == 3.0

    def test_field_derivatives(self):
        f = expressions.field("erf(t)")
        p = np.array([0.3])
        assert f.gradient(p)[0] == pytest.approx(2 / np.sqrt(np.pi) * np.exp(-0.09))
