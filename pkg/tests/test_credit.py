import math

import pytest
from scipy.stats import norm

from cgauss.credit import CreditDemoConfig, conditional_default_probability, factor_law, run_credit_demo
from cgauss.errors import CGaussError


def test_zero_loading_is_uninformative():
    assert factor_law(0.0, -2.0) == (0.0, 1.0)
    assert factor_law(0.0, 3.0) == (0.0, 1.0)


def test_factor_law_example():
    m, v = factor_law(0.6, -2.0)
    assert m == pytest.approx(-1.2, rel=1e-14)
    assert v == pytest.approx(0.64, rel=1e-14)


@pytest.mark.parametrize("rho", [-0.9, -0.3, 0.2, 0.75, 0.99])
def test_factor_law_matches_bivariate_normal(rho):
    # (Y, X) standard bivariate Normal with correlation rho
    m, v = factor_law(rho, 1.3)
    assert m == pytest.approx(rho * 1.3, rel=1e-12)
    assert v == pytest.approx(1 - rho * rho, rel=1e-12)


def test_conditional_pd_reduces_to_unconditional():
    assert conditional_default_probability(0.4, -1.0, 0.0, 1.0) == pytest.approx(norm.cdf(-1.0))


@pytest.mark.parametrize("loadings", [(1.0, 0.5), (0.5, -1.2), (float("nan"), 0.1)])
def test_config_rejects_bad_loadings(loadings):
    with pytest.raises(CGaussError):
        CreditDemoConfig(loadings, (-1.0, -1.0), 0)


def test_config_rejects_bad_shape():
    with pytest.raises(CGaussError):
        CreditDemoConfig((0.5,), (-1.0, -2.0), 0)
    with pytest.raises(CGaussError):
        CreditDemoConfig((0.5, 0.2), (-1.0, -2.0), 2)


def test_demo_report():
    cfg = CreditDemoConfig((0.6, 0.3, 0.5), (-2.0, -1.5, -1.0), 0)
    rep = run_credit_demo(cfg, samples=10**6, seed=1)
    assert rep["factor_law"]["mean"] == pytest.approx(-1.2)
    assert rep["factor_law"]["variance"] == pytest.approx(0.64)
    mc = rep["monte_carlo"]
    assert abs(mc["factor_mean_z"]) <= 4 and abs(mc["factor_variance_z"]) <= 4
    assert mc["passed"]
    assert [o["index"] for o in rep["obligors"]] == [1, 2]
    for o in rep["obligors"]:
        # bad news for a positively loaded factor raises everyone's default probability
        assert o["pd_conditional"] > o["pd_unconditional"]


def test_demo_decoupled_observation():
    cfg = CreditDemoConfig((0.0, 0.4), (-2.0, -1.0), 0)
    rep = run_credit_demo(cfg, samples=200_000, seed=2)
    assert rep["factor_law"] == {"mean": 0.0, "variance": 1.0, "decoupled": True}
    assert rep["obligors"][0]["pd_conditional"] == pytest.approx(norm.cdf(-1.0))
    assert rep["monte_carlo"]["passed"]


def test_demo_boundary_override_and_determinism():
    cfg = CreditDemoConfig((0.8, 0.4), (-2.0, -1.0), 0, boundary=1.0)
    a = run_credit_demo(cfg, samples=100_000, seed=3)
    b = run_credit_demo(cfg, samples=100_000, seed=3)
    assert a == b
    assert a["observed"]["value"] == 1.0
    assert a["factor_law"]["mean"] == pytest.approx(0.8)
    assert math.isclose(a["factor_law"]["variance"], 0.36)
