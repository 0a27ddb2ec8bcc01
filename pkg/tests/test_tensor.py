import numpy as np
import pytest

from molfuse import tensor as T
from molfuse.tensor import (
    ContractViolation,
    DimensionError,
    Tensor,
    bce_with_logits,
    cross_entropy_logits,
    grad_check,
    layer_norm,
    matmul,
    no_grad,
    precision,
    softmax,
    tensor,
    tmean,
    tsum,
    vcat,
)


def test_matmul_identity():
    a = tensor([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    eye = tensor(np.eye(3))
    out = matmul(eye, a)
    assert np.array_equal(out.data, a.data)


def test_matmul_hand_case():
    a = tensor([[1.0, 2.0], [3.0, 4.0]])
    b = tensor([[0.0], [1.0]])
    out = matmul(a, b)
    assert np.array_equal(out.data, np.array([[2.0], [4.0]]))


def test_matmul_shape_error_names_both_shapes():
    a = tensor(np.zeros((2, 3)))
    b = tensor(np.zeros((2, 3)))
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
        matmul(a, b)


def test_matmul_gradient_vs_finite_differences():
    with precision("wide"):
        rng = np.random.RandomState(7)
        a = tensor(rng.randn(3, 4), requires_grad=True)
        b = tensor(rng.randn(4, 2), requires_grad=True)
        w = tensor(rng.randn(3, 2))

        def f():
            return tsum(matmul(a, b) * w)

        assert grad_check(f, [a, b]) <= 1e-6


def test_softmax_symmetry_and_stability():
    out = softmax(tensor([0.0, 0.0]), axis=0)
    assert np.allclose(out.data, [0.5, 0.5], atol=1e-12)
    out = softmax(tensor([1000.0, 0.0]), axis=0)
    assert out.data[0] > 0.999999 and out.data[1] < 1e-6
    assert np.all(np.isfinite(out.data))


def test_softmax_matches_direct_evaluation():
    x = np.array([1.0, 2.0, 3.0])
    expect = np.exp(x) / np.exp(x).sum()
    out = softmax(tensor(x), axis=0)
    assert np.allclose(out.data, expect, atol=1e-12)


def test_softmax_rows_sum_to_one():
    rng = np.random.RandomState(0)
    x = tensor(rng.randn(5, 7) * 10)
    out = softmax(x, axis=1)
    assert np.allclose(out.data.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(out.data > 0) and np.all(out.data < 1)


def test_cross_entropy_uniform_and_saturated():
    loss = cross_entropy_logits(tensor([[0.0, 0.0]]), [0])
    assert abs(loss.item() - np.log(2.0)) < 1e-12
    loss = cross_entropy_logits(tensor([[30.0, 0.0]]), [0])
    assert loss.item() < 1e-9


def test_cross_entropy_diagonal_hand_case():
    # -log(e / (e + 1)) per row
    expect = -np.log(np.e / (np.e + 1.0))
    loss = cross_entropy_logits(tensor([[1.0, 0.0], [0.0, 1.0]]), [0, 1])
    assert abs(loss.item() - expect) < 1e-12
    assert abs(loss.item() - 0.3132616875182228) < 1e-9


def test_cross_entropy_target_out_of_range():
    with pytest.raises(IndexError):
        cross_entropy_logits(tensor([[0.0, 0.0]]), [2])


def test_backward_sum_gives_ones():
    x = tensor([1.0, 2.0, 3.0], requires_grad=True)
    tsum(x).backward()
    assert np.array_equal(x.grad, np.ones(3))


def test_backward_elementwise_square():
    x = tensor([1.0, 2.0], requires_grad=True)
    tsum(x * x).backward()
    assert np.allclose(x.grad, [2.0, 4.0])


def test_backward_requires_scalar():
    x = tensor([1.0, 2.0], requires_grad=True)
    with pytest.raises(ContractViolation):
        (x * x).backward()


def test_backward_accumulates_across_calls():
    x = tensor([1.0, 2.0], requires_grad=True)
    tsum(x).backward()
    tsum(x).backward()
    assert np.array_equal(x.grad, [2.0, 2.0])


def test_grad_check_quadratic_exact():
    with precision("wide"):
        x = tensor([0.3, -1.2, 2.0], requires_grad=True)

        def f():
            return tsum(x * x)

        assert grad_check(f, [x]) <= 1e-8


def test_grad_check_linear_softmax_ce():
    with precision("wide"):
        rng = np.random.RandomState(3)
        w = tensor(rng.randn(4, 3), requires_grad=True)
        b = tensor(rng.randn(3), requires_grad=True)
        xin = tensor(rng.randn(5, 4))

        def f():
            return cross_entropy_logits(matmul(xin, w) + b, [0, 1, 2, 0, 1])

        assert grad_check(f, [w, b]) <= 1e-6


def test_grad_check_reports_corrupted_gradient():
    with precision("wide"):
        x = tensor([1.0, 2.0], requires_grad=True)
        calls = {"n": 0}

        def f():
            # correct loss, but we corrupt the analytic grad by doubling x's
            # contribution through an extra pass on the first call only
            out = tsum(x * x)
            if calls["n"] == 0:
                out = out + tsum(x * x) - out.item()
            calls["n"] += 1
            return out

        err = grad_check(f, [x])
        assert 0.9 <= err <= 1.1


def test_layer_norm_gradient():
    with precision("wide"):
        rng = np.random.RandomState(5)
        x = tensor(rng.randn(4, 6), requires_grad=True)
        g = tensor(rng.randn(6), requires_grad=True)
        b = tensor(rng.randn(6), requires_grad=True)

        def f():
            return tsum(layer_norm(x, g, b)) * 0.7

        assert grad_check(f, [x, g, b]) <= 1e-6


def test_vcat_and_slice_gradients():
    with precision("wide"):
        a = tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        b = tensor(np.arange(9.0).reshape(3, 3), requires_grad=True)

        def f():
            cat = vcat([a, b])
            return tsum(cat[1:4] * cat[1:4])

        assert grad_check(f, [a, b]) <= 1e-8


def test_bce_with_logits_values():
    assert abs(bce_with_logits(tensor([[0.0]]), [[1.0]]).item() - np.log(2.0)) < 1e-12
    assert bce_with_logits(tensor([[30.0]]), [[1.0]]).item() < 1e-9
    with pytest.raises(ContractViolation):
        bce_with_logits(tensor([[0.0]]), [[1.0]], mask=[[0.0]])


def test_no_grad_builds_no_tape():
    x = tensor([1.0], requires_grad=True)
    with no_grad():
        y = x * x
    assert not y.requires_grad
    assert y._parents == ()


def test_precision_switch():
    with precision("standard"):
        assert tensor([1.0]).data.dtype == np.float32
    with precision("wide"):
        assert tensor([1.0]).data.dtype == np.float64


def test_same_ops_bit_identical():
    def run():
        rng = np.random.RandomState(11)
        a = tensor(rng.randn(8, 8))
        b = tensor(rng.randn(8, 8))
        return tmean(softmax(matmul(a, b), axis=1)).item()

    assert run() == run()
