import pytest

from warpedrigidity import scenario

SHIPPED = scenario.shipped_scenarios()


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_shipped_scenario_passes(name):
    result = scenario.execute(scenario.load_scenario(SHIPPED[name]))
    scenario.validate_report(scenario.report_dict(result, [f"{t.name}.csv" for t in result.tables]))
    assert result.passed, [c.name for c in result.failed()]


def test_unknown_kind_rejected():
    with pytest.raises(Exception):
        scenario.validate_scenario({"name": "x", "kind": "nope", "parameters": {}})


class TestChecker:
    def test_override_only_loosens_numeric_checks(self):
        ck = scenario.Checker(global_tol=1e-30)
        ck.below("a", 1e-12, 1e-6)
        ck.equal("b", 1, 1)
        assert [c.passed for c in ck.checks] == [False, True]

    def test_csv_is_deterministic(self):
        table = scenario.Table("t", ["x", "y"], [[0.1, 1], [1 / 3, "s"]])
        assert scenario.csv_text(table) == "x,y\n0.10000000000000001,1\n0.33333333333333331,s\n"
