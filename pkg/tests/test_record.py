import math
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikedelay.record import (
    RecordTensor,
    bracket,
    extrap_expdecay,
    extrap_linear,
    extrap_nearest,
    extrap_previous,
    interp_expdecay,
    interp_expratedecay,
    interp_linear,
    interp_nearest,
    interp_previous,
    window_size,
)


def expdecay(tau):
    return lambda n, o, f, dt: interp_expdecay(n, o, f, dt, time_constant=tau)


def expratedecay(rate):
    return lambda n, o, f, dt: interp_expratedecay(n, o, f, dt, rate_constant=rate)


ALL_INTERPS = [interp_previous, interp_nearest, interp_linear, expdecay(10.0), expratedecay(0.1)]


def test_window_sizes():
    assert RecordTensor((20, 784), 1.2, 6.0).data.shape == (6, 20, 784)
    assert RecordTensor((4,), 1.0, 0.0).size == 1
    assert RecordTensor((3,), 1.0, 2.5, inclusive=False).size == 2
    assert window_size(1.0, 0.5, inclusive=False) == 1
    assert window_size(0.1, 0.3) == 4  # 0.3 / 0.1 is not exactly 3 in binary


def test_create_rejects_bad_arguments():
    with pytest.raises(ValueError):
        RecordTensor((3,), 0.0, 1.0)
    with pytest.raises(ValueError):
        RecordTensor((3,), -1.0, 1.0)
    with pytest.raises(ValueError):
        RecordTensor((), 1.0, 1.0)
    with pytest.raises(ValueError):
        RecordTensor((3,), 1.0, -1.0)


def test_fresh_record_state():
    rec = RecordTensor.create((2, 3), 1.0, 4.0)
    assert rec.pointer == 0 and rec.observed == 0
    assert not rec.data.any()
    assert rec.shape == (2, 3)
    assert rec.max_age == 4.0


def test_push_rotation():
    rec = RecordTensor((1,), 1.0, 2.0)
    for v in "abcd":
        rec.push([ord(v)])
    assert [chr(int(x)) for x in rec.aligned()[:, 0]] == ["d", "c", "b"]
    assert rec.pointer == 1
    assert rec.observed == 3


def test_push_shape_mismatch():
    rec = RecordTensor((3,), 1.0, 2.0)
    with pytest.raises(ValueError):
        rec.push(np.zeros(4))


def test_select_before_push_raises():
    rec = RecordTensor((3,), 1.0, 2.0)
    with pytest.raises(RuntimeError):
        rec.select(np.zeros(3))


def test_select_out_of_range():
    rec = RecordTensor((3,), 1.0, 2.0)
    rec.push(np.ones(3))
    with pytest.raises(ValueError):
        rec.select(np.full(3, 2.5))
    with pytest.raises(ValueError):
        rec.select(np.full(3, -0.1))


@pytest.mark.parametrize("interp", ALL_INTERPS)
def test_select_zero_delay_is_latest(interp):
    rec = RecordTensor((4,), 1.0, 3.0)
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.random(4).astype(np.float32)
        rec.push(x)
    assert np.array_equal(rec.select(np.zeros(4), interp), x)


def test_linear_midpoint_between_samples():
    rec = RecordTensor((1,), 1.0, 3.0)
    for v in (9.0, 3.0, 5.0, 1.0):  # a1 = 5 at age 1, a2 = 3 at age 2
        rec.push([v])
    assert rec.select(np.array([1.5]), interp_linear)[0] == pytest.approx(0.5 * 5 + 0.5 * 3)


def test_expdecay_closed_form():
    # older sample 2.0 at age 2, query 5 ms after it -> 2 exp(-0.5)
    rec = RecordTensor((1,), 10.0, 20.0)
    rec.push([2.0])
    rec.push([7.0])
    rec.push([7.0])
    got = rec.select(np.array([15.0]), expdecay(10.0))
    assert got[0] == pytest.approx(2.0 * math.exp(-0.5), rel=1e-6)
    assert got[0] == pytest.approx(1.21306, abs=1e-5)


def test_expratedecay_uses_rate():
    rec = RecordTensor((1,), 10.0, 20.0)
    for v in (2.0, 7.0, 7.0):
        rec.push([v])
    got = rec.select(np.array([15.0]), expratedecay(0.1))
    assert got[0] == pytest.approx(2.0 * math.exp(-0.5), rel=1e-6)


def test_interp_rejects_bad_constants():
    z = np.zeros(1)
    with pytest.raises(ValueError):
        interp_expdecay(z, z, z, 1.0, time_constant=0.0)
    with pytest.raises(ValueError):
        interp_expratedecay(z, z, z, 1.0, rate_constant=-1.0)


def test_nearest_and_previous_conventions():
    rec = RecordTensor((1,), 1.0, 2.0)
    for v in (0.0, 10.0, 20.0):  # ages: 20 -> 0, 10 -> 1, 0 -> 2
        rec.push([v])
    assert rec.select(np.array([0.4]), interp_nearest)[0] == 20.0
    assert rec.select(np.array([0.5]), interp_nearest)[0] == 10.0
    assert rec.select(np.array([0.2]), interp_previous)[0] == 10.0


def test_bracket_values():
    k0, k1, off, exact = bracket(np.array([0.0, 1.5, 2.0, 2.0000001]), 1.0, 3)
    assert k0.tolist() == [0, 1, 2, 2]
    assert k1.tolist() == [0, 2, 2, 2]
    assert off.tolist()[1] == pytest.approx(0.5)
    assert exact.tolist() == [True, False, True, True]


def test_multi_select_trailing_axis():
    rng = np.random.default_rng(1)
    rec = RecordTensor((3,), 0.5, 3.0)
    for _ in range(10):
        rec.push(rng.random(3).astype(np.float32))
    delays = rng.uniform(0, 3.0, (3, 4))
    multi = rec.select(delays, interp_linear)
    assert multi.shape == (3, 4)
    for j in range(4):
        np.testing.assert_array_equal(multi[:, j], rec.select(delays[:, j], interp_linear))


def test_scalar_delay_broadcasts():
    rec = RecordTensor((2, 2), 1.0, 1.0)
    rec.push(np.ones((2, 2)))
    rec.push(np.full((2, 2), 2.0))
    assert np.array_equal(rec.select(1.0), np.ones((2, 2)))


def test_insert_at_zero_replaces_newest():
    rec = RecordTensor((2,), 1.0, 2.0)
    rec.push([1.0, 1.0])
    rec.insert(0.0, np.array([5.0, 6.0]))
    assert rec.peek().tolist() == [5.0, 6.0]


@pytest.mark.parametrize("interp", ALL_INTERPS)
def test_insert_on_grid_round_trip(interp):
    rec = RecordTensor((2,), 1.0, 3.0)
    for _ in range(4):
        rec.push([1.0, 1.0])
    rec.insert(2.0, np.array([3.0, 4.0]))
    assert rec.select(np.full(2, 2.0), interp).tolist() == [3.0, 4.0]


def test_insert_previous_writes_older_only():
    rec = RecordTensor((1,), 1.0, 3.0)
    for v in (1.0, 2.0, 3.0, 4.0):
        rec.push([v])
    rec.insert(1.5, np.array([9.0]), extrap_previous)
    assert rec.aligned()[:, 0].tolist() == [4.0, 3.0, 9.0, 1.0]
    assert rec.select(np.array([1.5]))[0] == 9.0


def test_insert_nearest_writes_nearer_slice():
    rec = RecordTensor((1,), 1.0, 3.0)
    for v in (1.0, 2.0, 3.0, 4.0):
        rec.push([v])
    rec.insert(1.2, np.array([9.0]), extrap_nearest)
    assert rec.aligned()[:, 0].tolist() == [4.0, 9.0, 2.0, 1.0]
    assert rec.select(np.array([1.2]), interp_nearest)[0] == 9.0


def test_insert_linear_round_trip():
    rec = RecordTensor((3,), 1.0, 3.0)
    rng = np.random.default_rng(2)
    for _ in range(4):
        rec.push(rng.random(3).astype(np.float32))
    v = np.array([0.25, -1.0, 7.5], dtype=np.float32)
    rec.insert(1.5, v, extrap_linear)
    np.testing.assert_allclose(rec.select(np.full(3, 1.5), interp_linear), v, rtol=1e-6)


def test_insert_expdecay_round_trip():
    rec = RecordTensor((2,), 1.0, 3.0)
    for _ in range(4):
        rec.push([1.0, 1.0])
    ext = lambda *a: extrap_expdecay(*a, time_constant=5.0)
    rec.insert(np.array([0.3, 2.6]), np.array([2.0, 0.5]), ext)
    np.testing.assert_allclose(rec.select(np.array([0.3, 2.6]), expdecay(5.0)), [2.0, 0.5], rtol=1e-6)


def test_insert_out_of_range():
    rec = RecordTensor((1,), 1.0, 2.0)
    rec.push([1.0])
    with pytest.raises(ValueError):
        rec.insert(3.0, np.array([1.0]))


@settings(max_examples=60, deadline=None)
@given(
    w=st.integers(1, 7),
    values=st.lists(st.floats(-1e3, 1e3, width=32), min_size=1, max_size=40),
    data=st.data(),
)
def test_property_grid_select_matches_fifo(w, values, data):
    rec = RecordTensor((1,), 1.0, w - 1)
    shadow = deque([0.0] * w, maxlen=w)
    for v in values:
        rec.push([v])
        shadow.append(np.float32(v))
    assert rec.pointer < w
    age = data.draw(st.integers(0, w - 1))
    for interp in ALL_INTERPS:
        assert rec.select(np.array([float(age)]), interp)[0] == shadow[-1 - age]


@settings(max_examples=60, deadline=None)
@given(a=st.floats(-100, 100, width=32), b=st.floats(-100, 100, width=32), frac=st.floats(0, 1))
def test_property_linear_is_bracketed(a, b, frac):
    rec = RecordTensor((1,), 1.0, 1.0)
    rec.push([b])
    rec.push([a])
    got = rec.select(np.array([frac]), interp_linear)[0]
    lo, hi = min(a, b), max(a, b)
    assert lo - 1e-4 <= got <= hi + 1e-4


@settings(max_examples=60, deadline=None)
@given(tau=st.floats(0.5, 100), d=st.floats(0, 4), dt=st.sampled_from([0.5, 1.0, 1.2]))
def test_property_expdecay_exact_on_exponential(tau, d, dt):
    w = 5
    rec = RecordTensor((1,), dt, (w - 1) * dt)
    for k in range(w - 1, -1, -1):
        rec.push([math.exp(-(w - 1 - k) * dt / tau + (w - 1) * dt / tau)])
    # stored value at age k is exp(k dt / tau); select must return exp(d / tau)
    d = min(d, (w - 1) * dt)
    got = rec.select(np.array([d]), expdecay(tau))[0]
    # delays within the grid tolerance of a sample snap to that sample
    if abs(d / dt - round(d / dt)) <= 1e-5:
        d = round(d / dt) * dt
    assert got == pytest.approx(math.exp(d / tau), rel=1e-6)
