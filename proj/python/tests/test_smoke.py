from fractions import Fraction

import pytest

import ergolock as el


@pytest.fixture(scope="module")
def golden():
    return el.System.golden()


def test_catalog_and_census(golden):
    cat = el.catalog(golden, 4)
    assert [w for w, _ in cat] == ["0", "01", "001", "0001"]
    assert cat[1][1] == Fraction(2)
    assert el.census_matches_trace(golden, 12)


def test_beta_exact(golden):
    u = el.Observable.indicator(golden, 0)
    r = el.beta(golden, u, P=12)
    assert r["beta"] == Fraction(1, 2)
    assert r["argmin"] == ["01"]
    one = el.Observable.constant(golden, 1)
    shifted = el.beta(golden, u.combine(1, Fraction(7, 3), one), P=12)
    assert shifted["beta"] == Fraction(1, 2) + Fraction(7, 3)


def test_observable_parse_and_integral():
    sys = el.System(alphabet=2, forbidden=["11"], roof=[1, Fraction(3, 2)])
    u = el.Observable.parse(sys, 'window = 0\ncyl "0" = 0\ncyl "1" = 0 1\n')
    # fiber coordinate over the cell "1" of height 3/2
    assert u.orbit_integral(sys, "01") == Fraction(9, 8)
    assert sys.period("01") == Fraction(5, 2)


def test_subaction_and_reveal(golden):
    u = el.Observable.indicator(golden, 1)
    cert = el.subaction(golden, u)
    assert cert["status"] == "Feasible"
    assert cert["rescan_pass"]
    chk = el.reveal_check(golden, u, P=8)
    assert chk["nodes_ok"] and chk["orbits_ok"]


def test_geometry(golden):
    assert el.gap(golden, "0") == pytest.approx(0.25)
    assert el.alpha_deviation(golden, "01", ["0"]) == pytest.approx(1.0)
    t = el.split(golden, "00001000001", ["0"])
    assert t["satisfied"]
    assert len(t["steps"]) <= t["iteration_bound"]
    a = el.approximate(golden, ["0", "01"], 6)
    assert a["within"]
    rows = el.decay(golden, ["0"], [6, 7, 8])
    assert all(r[1] == 0.0 for r in rows)


def test_locking(golden):
    r = el.lock(golden, el.Observable.indicator(golden, 1), P=8, orbit="0", trials=5)
    assert r["outcome"] != "condition satisfied + not locked"
    assert r["locked"]
    c = el.continuous_lock(golden, "0", 1 / 2048, 1 / 1024, trials=5)
    assert c["rho"] > 0 and c["locked"]


def test_errors(golden):
    with pytest.raises(el.ErgolockError) as info:
        el.gap(golden, "11")
    assert info.value.kind == "InvalidArgument"
    with pytest.raises(el.ErgolockError):
        el.System.from_config("[system]\nalphabet = x\n")


def test_calibrate(golden):
    r = el.calibrate(golden, budget=20)
    assert r["ledger"]["C"][0] >= 1.0
