"""Spectral graph operators against explicit-eigendecomposition oracles."""

import numpy as np
import pytest

from dgsd import autodiff as ad
from dgsd.errors import ConfigError, DimensionError, NumericError
from dgsd.graph import (chebyshev_basis, estimate_lambda_max, gft, graph_conv,
                        inverse_gft, laplacian, rescale_laplacian)

PATH3 = np.array([[0.0, 1.0, 0.0],
                  [1.0, 0.0, 1.0],
                  [0.0, 1.0, 0.0]])


def random_graph(n, seed):
    rng = np.random.default_rng(seed)
    raw = rng.uniform(0.0, 1.0, (n, n))
    w = (raw + raw.T) / 2
    np.fill_diagonal(w, 0.0)
    return w


def cheb_scalar(values, order):
    """Chebyshev polynomials of scalar eigenvalues (the oracle side)."""
    terms = [np.ones_like(values)]
    if order > 1:
        terms.append(values)
    for _ in range(2, order):
        terms.append(2 * values * terms[-1] - terms[-2])
    return terms


def direct_spectral_filter(w, x, thetas, lam=None):
    """Explicit-eigendecomposition filtering y = sum_k U T_k(L~) U^T x theta_k."""
    lap = np.diag(w.sum(axis=1)) - w
    eigvals, u = np.linalg.eigh(lap)
    if lam is None:
        lam = eigvals.max()
    lt = 2.0 * eigvals / lam - 1.0
    y = np.zeros((x.shape[0], np.asarray(thetas[0]).shape[1]))
    for tk, theta in zip(cheb_scalar(lt, len(thetas)), thetas):
        y += u @ np.diag(tk) @ u.T @ x @ theta
    return y


# -- Laplacian ----------------------------------------------------------------

def test_two_node_laplacian():
    w = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(laplacian(w), [[1.0, -1.0], [-1.0, 1.0]])


def test_empty_graph_laplacian():
    np.testing.assert_array_equal(laplacian(np.zeros((3, 3))), np.zeros((3, 3)))


def test_path_graph_eigenvalues():
    eigs = np.linalg.eigvalsh(laplacian(PATH3))
    np.testing.assert_allclose(eigs, [0.0, 1.0, 3.0], atol=1e-9)


def test_laplacian_rejects_negative_weights():
    with pytest.raises(NumericError):
        laplacian(np.array([[0.0, -1.0], [(-1.0), 0.0]]))


def test_laplacian_rejects_nonsquare():
    with pytest.raises(DimensionError):
        laplacian(np.zeros((2, 3)))


@pytest.mark.parametrize("seed", range(5))
def test_laplacian_row_sums_and_spectrum(seed):
    w = random_graph(6, seed)
    lap = laplacian(w)
    np.testing.assert_allclose(lap.sum(axis=1), 0.0, atol=1e-9)
    np.testing.assert_allclose(lap, lap.T)
    assert np.linalg.eigvalsh(lap).min() >= -1e-9


# -- rescaling ------------------------------------------------------------------

def test_rescale_closed_form():
    lap = np.array([[1.0, -1.0], [-1.0, 1.0]])
    np.testing.assert_allclose(rescale_laplacian(lap, 2.0), [[0.0, -1.0], [-1.0, 0.0]])


def test_rescale_zero_laplacian():
    np.testing.assert_allclose(rescale_laplacian(np.zeros((2, 2)), 1.0), -np.eye(2))


def test_rescale_bounds_spectrum():
    lap = laplacian(PATH3)
    lt = rescale_laplacian(lap, np.linalg.eigvalsh(lap).max())
    assert np.abs(np.linalg.eigvalsh(lt)).max() <= 1 + 1e-6


def test_rescale_rejects_nonpositive():
    with pytest.raises(NumericError):
        rescale_laplacian(np.eye(2), 0.0)


def test_lambda_max_matches_eigh():
    for seed in range(5):
        lap = laplacian(random_graph(7, seed))
        exact = np.linalg.eigvalsh(lap).max()
        assert estimate_lambda_max(lap) == pytest.approx(exact, rel=1e-5)


def test_lambda_max_fallback_on_zero():
    assert estimate_lambda_max(np.zeros((4, 4))) == 2.0


# -- Chebyshev basis --------------------------------------------------------------

def test_order_one_is_identity():
    basis = chebyshev_basis(np.array([[0.5]]), 1)
    assert basis.order == 1
    np.testing.assert_array_equal(basis.terms[0], np.eye(1))


def test_scalar_chebyshev_values():
    basis = chebyshev_basis(np.array([[0.5]]), 3)
    values = [float(t[0, 0]) for t in basis.terms]
    assert values == pytest.approx([1.0, 0.5, -0.5])


def test_basis_matches_eigendecomposition():
    rng = np.random.default_rng(42)
    raw = rng.standard_normal((4, 4))
    sym = (raw + raw.T) / 2
    eigvals, u = np.linalg.eigh(sym)
    sym /= np.abs(eigvals).max()  # spectrum inside [-1, 1]
    eigvals, u = np.linalg.eigh(sym)
    basis = chebyshev_basis(sym, 4)
    for term, tk in zip(basis.terms, cheb_scalar(eigvals, 4)):
        np.testing.assert_allclose(term, u @ np.diag(tk) @ u.T, atol=1e-8)


def test_basis_recurrence_invariant():
    lt = rescale_laplacian(laplacian(random_graph(5, 3)), 4.0)
    basis = chebyshev_basis(lt, 6)
    for k in range(2, 6):
        recurrence = 2 * lt @ basis.terms[k - 1] - basis.terms[k - 2]
        np.testing.assert_allclose(basis.terms[k], recurrence, atol=1e-8)


def test_invalid_order():
    with pytest.raises(ConfigError):
        chebyshev_basis(np.eye(2), 0)


# -- graph convolution --------------------------------------------------------------

def test_identity_filter():
    x = np.arange(6.0).reshape(3, 2)
    basis = chebyshev_basis(np.zeros((3, 3)), 1)
    np.testing.assert_array_equal(graph_conv(x, basis, [np.eye(2)]), x)


def test_hand_computed_two_node_conv():
    # 2-node graph, unit edge, lambda_max = 2 so L~ = [[0,-1],[-1,0]];
    # x = [[1],[2]], theta_0 = [[3]], theta_1 = [[5]]:
    #   T_0 x theta_0 = [[3],[6]]
    #   T_1 x theta_1 = [[-2*5],[-1*5]] = [[-10],[-5]]
    lt = np.array([[0.0, -1.0], [-1.0, 0.0]])
    x = np.array([[1.0], [2.0]])
    basis = chebyshev_basis(lt, 2)
    y = graph_conv(x, basis, [np.array([[3.0]]), np.array([[5.0]])])
    np.testing.assert_allclose(y, [[1 * 3 + -2 * 5], [2 * 3 + -1 * 5]])


def test_matches_direct_spectral_filtering():
    rng = np.random.default_rng(0)
    w = random_graph(5, 17)
    x = rng.standard_normal((5, 3))
    thetas = [rng.standard_normal((3, 2)) for _ in range(3)]
    lap = laplacian(w)
    lam = np.linalg.eigvalsh(lap).max()
    basis = chebyshev_basis(rescale_laplacian(lap, lam), 3)
    np.testing.assert_allclose(graph_conv(x, basis, thetas),
                               direct_spectral_filter(w, x, thetas, lam),
                               atol=1e-8)


def test_conv_linear_in_signal():
    rng = np.random.default_rng(1)
    basis = chebyshev_basis(rescale_laplacian(laplacian(random_graph(4, 2)), 3.0), 3)
    thetas = [rng.standard_normal((2, 2)) for _ in range(3)]
    x1, x2 = rng.standard_normal((2, 4, 2))
    lhs = graph_conv(x1 + x2, basis, thetas)
    rhs = graph_conv(x1, basis, thetas) + graph_conv(x2, basis, thetas)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-12)


def test_conv_batched_equals_per_window():
    rng = np.random.default_rng(5)
    basis = chebyshev_basis(rescale_laplacian(laplacian(random_graph(4, 9)), 3.0), 3)
    thetas = [rng.standard_normal((2, 3)) for _ in range(3)]
    batch = rng.standard_normal((6, 4, 2))
    batched = graph_conv(batch, basis, thetas)
    for i in range(6):
        np.testing.assert_allclose(batched[i], graph_conv(batch[i], basis, thetas),
                                   atol=1e-12)


def test_conv_shape_errors():
    basis = chebyshev_basis(np.zeros((3, 3)), 2)
    with pytest.raises(DimensionError):
        graph_conv(np.zeros((4, 2)), basis, [np.eye(2), np.eye(2)])
    with pytest.raises(DimensionError):
        graph_conv(np.zeros((3, 2)), basis, [np.eye(2)])
    with pytest.raises(DimensionError):
        graph_conv(np.zeros((3, 2)), basis, [np.eye(3), np.eye(3)])


# -- graph Fourier transform -----------------------------------------------------------

def orthonormal(n, seed):
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, n)))
    return q


def test_gft_identity_basis():
    x = np.arange(8.0).reshape(4, 2)
    np.testing.assert_array_equal(gft(x, np.eye(4)), x)


def test_gft_round_trip_and_parseval():
    u = orthonormal(6, 0)
    x = np.random.default_rng(1).standard_normal((6, 3))
    xhat = gft(x, u)
    np.testing.assert_allclose(inverse_gft(xhat, u), x, atol=1e-9)
    assert np.linalg.norm(xhat) == pytest.approx(np.linalg.norm(x), abs=1e-9)


def test_gft_rejects_nonsquare():
    with pytest.raises(DimensionError):
        gft(np.zeros((3, 2)), np.zeros((3, 2)))


def test_hadamard_convolution_matches_chebyshev_filter():
    # Spectral-domain Hadamard convolution x*y = U[(U^T x) . (U^T y)]
    # with kernel y = U g must equal the Chebyshev convolution whose
    # polynomial evaluates to the same diagonal response g.
    w = random_graph(4, 23)
    lap = laplacian(w)
    eigvals, u = np.linalg.eigh(lap)
    lam = eigvals.max()
    thetas_scalar = [0.7, -0.4, 0.2]
    lt_eigs = 2.0 * eigvals / lam - 1.0
    g = sum(c * tk for c, tk in zip(thetas_scalar, cheb_scalar(lt_eigs, 3)))

    x = np.random.default_rng(3).standard_normal((4, 1))
    kernel = (u @ g.reshape(-1, 1))
    hadamard = u @ ((u.T @ x) * (u.T @ kernel))

    basis = chebyshev_basis(rescale_laplacian(lap, lam), 3)
    cheb = graph_conv(x, basis, [np.array([[c]]) for c in thetas_scalar])
    np.testing.assert_allclose(cheb, hadamard, atol=1e-8)


# -- Tensor path -----------------------------------------------------------------------

def test_tensor_forward_matches_numpy():
    w = random_graph(5, 31)
    x = np.random.default_rng(4).standard_normal((5, 2))
    thetas = [np.random.default_rng(5 + k).standard_normal((2, 2)) for k in range(3)]
    lap = laplacian(w)
    lam = estimate_lambda_max(lap)
    y_np = graph_conv(x, chebyshev_basis(rescale_laplacian(lap, lam), 3), thetas)

    wt = ad.Tensor(w, requires_grad=True)
    lap_t = laplacian(wt)
    lam_t = estimate_lambda_max(lap_t)
    basis_t = chebyshev_basis(rescale_laplacian(lap_t, lam_t), 3)
    y_t = graph_conv(ad.Tensor(x), basis_t, [ad.Tensor(t) for t in thetas])
    np.testing.assert_allclose(y_t.data, y_np, atol=1e-10)


def test_gradient_through_adjacency_and_lambda_max():
    # Finite differences across the whole pipeline, including the
    # eigenvalue estimate used for rescaling.
    w0 = random_graph(4, 8) + 0.05
    x = np.random.default_rng(9).standard_normal((4, 2))
    theta = [np.random.default_rng(10 + k).standard_normal((2, 2)) for k in range(3)]

    def loss_of(w):
        wt = ad.Tensor(w, requires_grad=True)
        lap = laplacian(wt)
        basis = chebyshev_basis(rescale_laplacian(lap, estimate_lambda_max(lap)), 3)
        out = graph_conv(ad.Tensor(x), basis, [ad.Tensor(t) for t in theta])
        return wt, (out * out).sum()

    wt, loss = loss_of(w0.copy())
    loss.backward()
    eps = 1e-6
    for idx in [(0, 1), (2, 3), (1, 1)]:
        bumped = w0.copy()
        bumped[idx] += eps
        _, up = loss_of(bumped)
        bumped[idx] -= 2 * eps
        _, down = loss_of(bumped)
        numeric = (up.item() - down.item()) / (2 * eps)
        assert wt.grad[idx] == pytest.approx(numeric, rel=1e-4, abs=1e-7)
