from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikedelay.synapses import DeltaPlusSynapse, DeltaSynapse


def test_blueprint_record_shape():
    bp = DeltaSynapse.partialconstructor()
    syn = bp(784, 1.2, 6.0, 20)
    assert syn.spike_record.data.shape == (6, 20, 784)


def test_blueprint_zero_delay_single_slice():
    syn = DeltaSynapse.partialconstructor()(5, 1.0, 0.0, 1)
    assert syn.spike_record.size == 1


def test_record_covers_non_integral_max_delay():
    syn = DeltaSynapse(3, 1.0, 2.5)
    assert syn.spike_record.size == 4  # ceil(1 + 2.5)
    syn.step(np.ones((1, 3), bool))
    syn.select_spikes(np.full((1, 3), 2.5))


def test_blueprint_finalizations_independent():
    bp = DeltaSynapse.partialconstructor(q_spike=2.0)
    a, b = bp(3, 1.0, 2.0, 1), bp(3, 1.0, 2.0, 1)
    a.step(np.ones((1, 3), bool))
    assert a is not b
    assert not b.spike_record.data.any()
    assert a.q_spike == b.q_spike == 2.0


def test_blueprint_rejects_negative_charge():
    with pytest.raises(ValueError):
        DeltaSynapse.partialconstructor(q_spike=-1.0)


def test_zero_current_without_spikes():
    syn = DeltaSynapse(4, 1.0)
    assert not syn.step(np.zeros((1, 4), bool)).any()


def test_unit_current_with_default_charge():
    syn = DeltaSynapse(2, 0.5)
    cur = syn.step(np.array([[True, False]]))
    assert cur.tolist() == [[1.0, 0.0]]


def test_injection_adds():
    syn = DeltaPlusSynapse(1, 1.0, q_spike=2.0)
    cur = syn.step(np.array([[True]]), np.array([[0.3]]))
    assert cur[0, 0] == pytest.approx(2.0 + 0.3)


def test_injection_rejected_by_plain_delta():
    syn = DeltaSynapse(1, 1.0)
    with pytest.raises(ValueError):
        syn.step(np.array([[True]]), np.array([[0.3]]))


def test_delta_plus_without_injection_equals_delta():
    rng = np.random.default_rng(0)
    a, b = DeltaSynapse(5, 1.0, 3.0), DeltaPlusSynapse(5, 1.0, 3.0)
    for _ in range(20):
        x = rng.random((1, 5)) < 0.5
        assert np.array_equal(a.step(x), b.step(x))
    d = np.full((1, 5), 2.0)
    assert np.array_equal(a.history(d)[1], b.history(d)[1])


def test_history_zero_delay_and_shift():
    syn = DeltaSynapse(1, 1.0, 4.0)
    syn.step(np.array([[True]]))
    syn.step(np.array([[False]]))
    syn.step(np.array([[False]]))
    spikes, cur = syn.history(np.array([[2.0]]))
    assert spikes[0, 0] and cur[0, 0] == 1.0
    spikes, _ = syn.history(np.array([[0.0]]))
    assert not spikes[0, 0]


def test_history_off_grid_uses_older_sample():
    syn = DeltaSynapse(1, 1.0, 4.0)
    syn.step(np.array([[True]]))
    syn.step(np.array([[False]]))
    assert syn.history(np.array([[0.5]]))[0][0, 0]


def test_history_out_of_range():
    syn = DeltaSynapse(1, 1.0, 2.0)
    syn.step(np.array([[True]]))
    with pytest.raises(ValueError):
        syn.history(np.array([[2.5]]))


def test_step_shape_mismatch():
    with pytest.raises(ValueError):
        DeltaSynapse(3, 1.0).step(np.zeros((1, 4), bool))


@settings(max_examples=40, deadline=None)
@given(
    train=st.lists(st.booleans(), min_size=1, max_size=40),
    t_max=st.integers(0, 6),
    data=st.data(),
)
def test_property_history_is_shifted_stream(train, t_max, data):
    syn = DeltaSynapse(1, 1.0, float(t_max))
    queue = deque([False] * (t_max + 1), maxlen=t_max + 1)
    delay = data.draw(st.integers(0, t_max))
    for s in train:
        syn.step(np.array([[s]]))
        queue.append(s)
        spikes, cur = syn.history(np.array([[float(delay)]]))
        assert bool(spikes[0, 0]) == queue[-1 - delay]
        assert (cur[0, 0] == 0) == (not spikes[0, 0])
