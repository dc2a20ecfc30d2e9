"""Every engine op is checked against central finite differences."""

import numpy as np
import pytest

from dgsd import autodiff as ad


def numeric_grad(fn, arrays, idx, eps=1e-6):
    """Central-difference gradient of scalar fn(*arrays) w.r.t. arrays[idx]."""
    work = [a.copy() for a in arrays]
    grad = np.zeros_like(work[idx])
    flat = work[idx].reshape(-1)
    gflat = grad.reshape(-1)
    for j in range(flat.size):
        saved = flat[j]
        flat[j] = saved + eps
        f_plus = fn(*work)
        flat[j] = saved - eps
        f_minus = fn(*work)
        flat[j] = saved
        gflat[j] = (f_plus - f_minus) / (2 * eps)
    return grad


def check_grads(build, *shapes, seed=0, transform=None):
    rng = np.random.default_rng(seed)
    arrays = [rng.standard_normal(s) for s in shapes]
    if transform:
        arrays = [transform(a) for a in arrays]
    tensors = [ad.Tensor(a.copy(), requires_grad=True) for a in arrays]
    build(*tensors).backward()

    def scalar_fn(*arrs):
        return build(*[ad.Tensor(a) for a in arrs]).item()

    for i, t in enumerate(tensors):
        expected = numeric_grad(scalar_fn, arrays, i)
        np.testing.assert_allclose(t.grad, expected, rtol=1e-5, atol=1e-7,
                                   err_msg=f"operand {i}")


def test_add_broadcast():
    check_grads(lambda a, b: (a + b).sum(), (3, 4), (4,))


def test_mul_broadcast():
    check_grads(lambda a, b: (a * b).mean(), (2, 3, 4), (3, 1))


def test_sub_div():
    check_grads(lambda a, b: ((a - b) / (b * b + 2.0)).sum(), (5,), (5,))


def test_pow():
    check_grads(lambda a: (a ** 3).sum(), (4, 2))


def test_matmul_2d():
    check_grads(lambda a, b: (a @ b).sum(), (3, 4), (4, 2))


def test_matmul_batched():
    # (N, N) broadcast against (B, N, d): the graph-convolution pattern.
    check_grads(lambda a, b: (a @ b).sum(), (4, 4), (3, 4, 2))


def test_matmul_rejects_vectors():
    with pytest.raises(ValueError):
        ad.Tensor(np.ones((2, 2))) @ ad.Tensor(np.ones(2))


def test_sum_axis_keepdims():
    check_grads(lambda a: (a.sum(axis=1, keepdims=True) * a).sum(), (3, 4))


def test_mean_axis():
    check_grads(lambda a: (a.mean(axis=0) ** 2).sum(), (5, 3))


def test_exp_log():
    check_grads(lambda a: (a.exp() + (a * a + 1.0).log()).sum(), (6,))


def test_maximum_and_relu():
    # Shift data away from the kink so finite differences are clean.
    check_grads(lambda a: (a + 0.3).relu().sum(), (20,), seed=3)
    check_grads(lambda a, b: a.maximum(b + 0.25).sum(), (7,), (7,), seed=4)


def test_transpose_reshape():
    check_grads(lambda a: (a.T @ a).sum(), (3, 5))
    check_grads(lambda a: (a.reshape(6) ** 2).sum(), (2, 3))


def test_diag():
    check_grads(lambda a: (ad.diag(a) @ ad.diag(a)).sum(), (4,))


def test_softmax():
    check_grads(lambda a: (ad.softmax(a, axis=-1) ** 2).sum(), (3, 4))


def test_shared_subgraph():
    check_grads(lambda a: ((a * a).sum() + (a.sum() ** 2)), (4,))


def test_detach_blocks_gradient():
    x = ad.Tensor(np.array([2.0, 3.0]), requires_grad=True)
    (x.detach() * x).sum().backward()
    np.testing.assert_allclose(x.grad, x.data)  # only the live branch


def test_backward_requires_scalar():
    x = ad.Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ValueError):
        (x * 2).backward()


def test_grad_accumulates_across_backwards():
    x = ad.Tensor(np.array(2.0), requires_grad=True)
    (x * x).backward()
    (x * x).backward()
    assert x.grad == pytest.approx(8.0)


def test_constant_lift_keeps_dtype():
    x = ad.Tensor(np.ones(3, dtype=np.float32), requires_grad=True)
    assert (x + 1.0).data.dtype == np.float32
    assert (2.0 * x).data.dtype == np.float32


def test_ndarray_on_left_defers_to_tensor():
    x = ad.Tensor(np.ones(3), requires_grad=True)
    out = np.array([1.0, 2.0, 3.0]) - x
    assert isinstance(out, ad.Tensor)
    np.testing.assert_allclose(out.data, [0.0, 1.0, 2.0])


def test_adam_minimizes_quadratic():
    x = ad.Tensor(np.array([5.0, -3.0]), requires_grad=True)
    opt = ad.Adam([x], lr=0.1)
    for _ in range(500):
        opt.zero_grad()
        (x * x).sum().backward()
        opt.step()
    assert np.abs(x.data).max() < 1e-3


def test_sgd_step():
    x = ad.Tensor(np.array([1.0]), requires_grad=True)
    opt = ad.Sgd([x], lr=0.5)
    (x * x).sum().backward()
    opt.step()
    np.testing.assert_allclose(x.data, [0.0])
