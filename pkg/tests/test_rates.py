import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from liocc.incoherent import random_incoherent_instrument
from liocc.measures import c_L, entanglement_entropy, measure_report
from liocc.qcore import (
    PLUS,
    PureBipartiteState,
    basis_product,
    binary_entropy,
    ecobit,
    lambda_state,
    random_state,
    rng_for,
    six_term_state,
)
from liocc.rates import (
    RateTriple,
    corner_rows,
    corners_csv,
    distillation_bounds_check,
    distillation_corners,
    ecobit_rate_lower_bound,
    formation_bounds_check,
    formation_corners,
    liocc_entanglement_rate,
    six_term_instrument,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=6)
PLUS_PLUS = PureBipartiteState.product(PLUS, PLUS)


def _triple(t):
    return (t.R_A, t.R_B, t.E_co)


def _by_label(corners):
    return {c.label: c for c in corners}


def test_rate_triple_validation():
    with pytest.raises(ValueError):
        RateTriple(-0.1, 0, 0, "formation", "x")
    with pytest.raises(ValueError):
        RateTriple(0, 0, 0, "other", "x")
    t = RateTriple(1, 2, 3, "formation", "x").swapped("y")
    assert _triple(t) == (2, 1, 3) and t.label == "y"


# --------------------------------------------------------------------------- formation


def test_formation_lambda_corner():
    f1 = _by_label(formation_corners(lambda_state(0.25)))["F1"]
    assert np.allclose(_triple(f1), (0, binary_entropy(0.25), 1.0), atol=1e-12)
    assert abs(binary_entropy(0.25) - 0.8112781244591328) <= 1e-15


def test_formation_product_all_zero():
    corners = formation_corners(basis_product(0, 0))
    assert len(corners) == 6
    for c in corners:
        assert np.allclose(_triple(c), 0)


def test_formation_ecobit_corner():
    f2 = _by_label(formation_corners(ecobit()))["F2"]
    assert np.allclose(_triple(f2), (1, 0, 1))


def test_formation_swaps():
    st_ = random_state(4, 3, 2)
    c = _by_label(formation_corners(st_))
    rep = measure_report(st_)
    assert np.allclose(_triple(c["F1s"]), (rep.S_X_given_Y, 0, rep.S_Y))
    assert np.allclose(_triple(c["F2s"]), (rep.S_X_given_Y, rep.S_Y, rep.E))
    assert np.allclose(_triple(c["F3s"]), (0, 0, rep.S_XY))


def test_formation_check_ecobit():
    rep = formation_bounds_check(ecobit(), RateTriple(1, 0, 1, "formation", "F2"))
    assert rep.passed
    assert np.allclose([rep.literal["i"], rep.literal["ii"], rep.literal["iii"]], 0, atol=1e-12)


def test_formation_check_large_triple():
    rep = formation_bounds_check(random_state(1, 3, 3), RateTriple(50, 50, 50, "formation", "big"))
    assert rep.passed_all


@pytest.mark.parametrize("lam", [0.1, 0.25, 0.4])
def test_formation_lambda_margins(lam):
    st_ = lambda_state(lam)
    f1 = _by_label(formation_corners(st_))["F1"]
    rep = formation_bounds_check(st_, f1)
    # (iii) is tight; S(XY) = 1 + h(lam)
    assert abs(rep.literal["iii"]) <= 1e-12
    assert abs(measure_report(st_).S_XY - 1 - binary_entropy(lam)) <= 1e-12
    # the printed (ii) asks R_A + R_B >= S(XY), which this corner misses by S(X) = 1
    assert abs(rep.literal["ii"] + 1) <= 1e-12
    assert "ii" in rep.failures()
    assert "i" not in rep.failures() and "iii" not in rep.failures()


@given(seeds, dims, dims)
def test_formation_derived_bounds_hold(seed, da, db):
    st_ = random_state(seed, da, db)
    for c in formation_corners(st_):
        rep = formation_bounds_check(st_, c)
        assert rep.literal["i"] >= -1e-9
        assert all(m >= -1e-9 for m in rep.derived.values())


@given(seeds, st.integers(2, 6), st.integers(2, 6))
def test_f3_literal_ii_margin(seed, da, db):
    st_ = random_state(seed, da, db)
    f3 = _by_label(formation_corners(st_))["F3"]
    rep = formation_bounds_check(st_, f3)
    assert abs(rep.literal["ii"] + measure_report(st_).S_XY) <= 1e-12


# --------------------------------------------------------------------------- distillation


def test_distillation_ecobit():
    c = _by_label(distillation_corners(ecobit()))
    assert np.allclose(_triple(c["D1"]), (0, 1, 0))
    assert np.allclose(_triple(c["D4"]), (0, 0, 1))


def test_distillation_plus_plus():
    c = _by_label(distillation_corners(PLUS_PLUS))
    assert np.allclose(_triple(c["D1"]), (1, 1, 0))
    assert np.allclose(_triple(c["D4"]), (0, 1, 0))


def test_distillation_six_term():
    d4 = _by_label(distillation_corners(six_term_state()))["D4"]
    assert np.allclose(_triple(d4), (0, math.log2(3), 0), atol=1e-12)


def test_distillation_check_examples():
    rep = distillation_bounds_check(ecobit(), RateTriple(0, 1, 0, "distillation", "D1"))
    assert rep.passed and abs(rep.literal["i"]) <= 1e-12
    assert distillation_bounds_check(random_state(2, 2, 2), RateTriple(0, 0, 0, "distillation", "z")).passed_all
    rep = distillation_bounds_check(ecobit(), RateTriple(1, 1, 0, "distillation", "bad"))
    assert not rep.passed and rep.failures() == ["i"]
    assert abs(rep.literal["i"] + 1) <= 1e-12


@given(seeds, dims, dims)
def test_distillation_corners_satisfy_bounds(seed, da, db):
    st_ = random_state(seed, da, db)
    for c in distillation_corners(st_):
        assert distillation_bounds_check(st_, c).passed_all


@given(seeds, dims, dims)
def test_d1_sum_equals_c_L(seed, da, db):
    st_ = random_state(seed, da, db)
    d1 = _by_label(distillation_corners(st_))["D1"]
    assert abs(d1.R_A + d1.R_B - c_L(st_)) <= 1e-9


# --------------------------------------------------------------------------- single values


@pytest.mark.parametrize(
    "state, expected",
    [(ecobit(), 1.0), (basis_product(0, 0), 0.0), (six_term_state(), 0.9182958340544896)],
)
def test_liocc_entanglement_rate(state, expected):
    assert abs(liocc_entanglement_rate(state) - expected) <= 1e-12


def test_ecobit_lower_bound_examples():
    assert abs(ecobit_rate_lower_bound(ecobit()) - 1) <= 1e-12
    assert ecobit_rate_lower_bound(six_term_state()) <= 1e-12


def test_six_term_instrument_value():
    # K0 branch: p = 2/3 with table (1/2, 1/4; 0, 1/4); K1 branch is a point mass
    oracle = (2 / 3) * (binary_entropy(0.25) + 1.0 - 1.5)
    val = ecobit_rate_lower_bound(six_term_state(), six_term_instrument())
    assert abs(val - oracle) <= 1e-12
    assert abs(val - 0.20751874963942188) <= 1e-12
    assert val > 0


def test_ecobit_lower_bound_rejects_coherent_instrument():
    from liocc.incoherent import LocalInstrument

    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    with pytest.raises(ValueError):
        ecobit_rate_lower_bound(ecobit(), LocalInstrument((h,), "B"))


@given(seeds, st.integers(2, 4), st.integers(2, 4))
def test_ecobit_bound_below_entanglement(seed, da, db):
    st_ = random_state(seed, da, db)
    assert ecobit_rate_lower_bound(st_) <= liocc_entanglement_rate(st_) + 1e-9
    inst = random_incoherent_instrument(rng_for(seed, "inst"), db, outcomes=2, party="B")
    assert ecobit_rate_lower_bound(st_, inst) <= entanglement_entropy(st_) + 1e-9


# --------------------------------------------------------------------------- export


def test_corners_csv_rows():
    rows = list(csv.DictReader(io.StringIO(corners_csv(ecobit(), "formation"))))
    assert [r["label"] for r in rows] == ["F1", "F2", "F3", "F1s", "F2s", "F3s"]
    assert {"R_A", "R_B", "E_co", "margins"} <= set(rows[0])
    assert "." in rows[1]["R_A"] or rows[1]["R_A"] in {"0", "1"}


def test_corner_rows_kind_check():
    with pytest.raises(ValueError):
        corner_rows(ecobit(), "other")
    assert len(corner_rows(ecobit(), "distillation")) == 4
