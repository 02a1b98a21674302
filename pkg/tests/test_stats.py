import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats

from divexp.stats import betainc, t_cdf, t_ppf, t_sf


def test_quantile_table_value():
    # t_{0.95, 2} from standard t tables
    assert t_ppf(0.95, 2) == pytest.approx(2.9200, abs=5e-5)


def test_quantile_symmetry_and_centre():
    assert t_ppf(0.5, 7) == 0.0
    assert t_ppf(0.05, 7) == pytest.approx(-t_ppf(0.95, 7), rel=1e-13)


@pytest.mark.parametrize("df", [1, 2, 3, 5, 10, 31, 100, 1000])
@pytest.mark.parametrize("p", [1e-6, 0.01, 0.05, 0.3, 0.6, 0.95, 0.999])
def test_quantile_matches_scipy(p, df):
    assert t_ppf(p, df) == pytest.approx(stats.t.ppf(p, df), rel=1e-10)


@settings(max_examples=300, deadline=None)
@given(a=st.floats(0.05, 80), b=st.floats(0.05, 80), x=st.one_of(st.just(0.0), st.floats(1e-300, 1)))
def test_betainc_matches_scipy(a, b, x):
    ref = special.betainc(a, b, x)
    assert betainc(a, b, x) == pytest.approx(ref, rel=1e-10, abs=1e-300)


@settings(max_examples=300, deadline=None)
@given(t=st.floats(-40, 40), df=st.floats(0.5, 500))
def test_tail_matches_scipy(t, df):
    assert t_sf(t, df) == pytest.approx(stats.t.sf(t, df), rel=1e-9, abs=1e-280)
    assert t_cdf(t, df) + t_sf(t, df) == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(p=st.floats(1e-8, 1 - 1e-8), df=st.integers(1, 400))
def test_quantile_inverts_cdf(p, df):
    assert t_cdf(t_ppf(p, df), df) == pytest.approx(p, rel=1e-9, abs=1e-15)


def test_quantile_monotone_in_p():
    ps = np.linspace(0.01, 0.99, 99)
    qs = [t_ppf(float(p), 4) for p in ps]
    assert np.all(np.diff(qs) > 0)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        t_ppf(0.0, 3)
    with pytest.raises(ValueError):
        betainc(1.0, 1.0, 1.5)
    with pytest.raises(ValueError):
        t_sf(1.0, 0)
    assert t_sf(math.inf, 3) == 0.0
