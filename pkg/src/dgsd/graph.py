"""Spectral graph operators: Laplacian, graph Fourier transform, and the
K-order Chebyshev graph convolution.

Every function accepts either plain ndarrays or autodiff Tensors and
returns the same kind, so the identical code path serves both numeric
verification and gradient-based training. The Chebyshev path never forms
the eigenbasis explicitly; eigendecompositions appear only in tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ConfigError, DimensionError, NumericError

# Power-iteration defaults for the largest Laplacian eigenvalue; the
# estimate is refreshed every training step because W changes. The
# stopping rule is the eigenpair residual ||Lv - lam v||, not successive
# change, so the eigenvector backing the gradient is actually converged.
POWER_ITERS = 200
POWER_TOL = 1e-9
LAMBDA_MAX_FALLBACK = 2.0


def _is_tensor(x) -> bool:
    return isinstance(x, ad.Tensor)


def _raw(x) -> np.ndarray:
    return x.data if _is_tensor(x) else np.asarray(x)


def laplacian(weights):
    """Combinatorial Laplacian L = D - W with D_ii = sum_j w_ij.

    Plain-array inputs are checked for non-negative entries; Tensor inputs
    skip the check because the training loop projects W before each step
    and finite differencing needs to probe slightly past zero.
    """
    w = _raw(weights)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DimensionError(f"adjacency must be square, got shape {w.shape}")
    if not _is_tensor(weights):
        if (w < 0).any():
            raise NumericError("adjacency has negative weights")
        return np.diag(w.sum(axis=1)) - w
    degree = weights.sum(axis=1)
    return ad.diag(degree) - weights


def estimate_lambda_max(lap, iters: int = POWER_ITERS, tol: float = POWER_TOL):
    """Largest eigenvalue of a symmetric Laplacian by power iteration.

    Returns a float for ndarray input, a scalar Tensor for Tensor input
    (gradient u u^T through the converged eigenvector). Degenerate
    spectra fall back to the constant 2.0 with zero gradient.
    """
    a = _raw(lap).astype(np.float64)
    n = a.shape[0]
    rng = np.random.Generator(np.random.PCG64(0x1A57))
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = a @ v
        norm = np.linalg.norm(w)
        if norm < 1e-30:
            lam = 0.0
            break
        v = w / norm
        av = a @ v
        lam = float(v @ av)
        if np.linalg.norm(av - lam * v) <= tol * max(1.0, abs(lam)):
            break
    degenerate = not np.isfinite(lam) or lam < 1e-8
    if not _is_tensor(lap):
        return LAMBDA_MAX_FALLBACK if degenerate else lam
    if degenerate:
        return ad.Tensor(np.asarray(LAMBDA_MAX_FALLBACK, dtype=lap.data.dtype))
    u = v.astype(lap.data.dtype)
    parent = lap

    def backward(grad):
        if parent.requires_grad:
            parent._accumulate(grad * np.outer(u, u))

    return ad.Tensor._node(np.asarray(lam, dtype=lap.data.dtype), (parent,), backward)


def rescale_laplacian(lap, lambda_max):
    """Map the spectrum into [-1, 1]: L~ = 2 L / lambda_max - I."""
    if not _is_tensor(lambda_max) and lambda_max <= 0:
        raise NumericError(f"lambda_max must be positive, got {lambda_max}")
    raw = _raw(lap)
    eye = np.eye(raw.shape[0], dtype=raw.dtype)
    return lap * (2.0 / lambda_max) - eye


@dataclass
class ChebyshevBasis:
    """The K polynomial terms T_k(L~); terms[0] = I, terms[1] = L~."""

    terms: list

    @property
    def order(self) -> int:
        return len(self.terms)


def chebyshev_basis(lap_tilde, order: int) -> ChebyshevBasis:
    """T_0..T_{K-1} of the rescaled Laplacian via the three-term recurrence
    T_k = 2 L~ T_{k-1} - T_{k-2}."""
    if order < 1:
        raise ConfigError(f"Chebyshev order must be >= 1, got {order}")
    raw = _raw(lap_tilde)
    eye = np.eye(raw.shape[0], dtype=raw.dtype)
    terms = [ad.Tensor(eye) if _is_tensor(lap_tilde) else eye]
    if order > 1:
        terms.append(lap_tilde)
    for _ in range(2, order):
        terms.append(lap_tilde @ terms[-1] * 2.0 - terms[-2])
    return ChebyshevBasis(terms)


def graph_conv(x, basis: ChebyshevBasis, theta):
    """Chebyshev graph convolution y = sum_k T_k(L~) x theta_k.

    x: (N, d_in) or batched (B, N, d_in); theta: sequence of K (d_in, d_out)
    matrices (a (K, d_in, d_out) array works). Linear in both x and theta.
    """
    thetas = list(theta)
    if len(thetas) != basis.order:
        raise DimensionError(
            f"got {len(thetas)} theta matrices for a {basis.order}-term basis")
    n = _raw(basis.terms[0]).shape[0]
    xr = _raw(x)
    if xr.shape[-2] != n or xr.ndim not in (2, 3):
        raise DimensionError(
            f"signal shape {xr.shape} does not match {n}-node basis")
    d_in = xr.shape[-1]
    y = None
    for term, th in zip(basis.terms, thetas):
        if _raw(th).shape[0] != d_in:
            raise DimensionError(
                f"theta shape {_raw(th).shape} does not accept {d_in} input features")
        contribution = term @ x @ th
        y = contribution if y is None else y + contribution
    return y


def gft(x, basis_matrix):
    """Graph Fourier transform x^ = U^T x for an orthonormal eigenbasis U."""
    u = _raw(basis_matrix)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError(f"eigenbasis must be square, got shape {u.shape}")
    if _raw(x).shape[0] != u.shape[0]:
        raise DimensionError("signal rows must match eigenbasis size")
    if _is_tensor(basis_matrix) or _is_tensor(x):
        return basis_matrix.T @ x if _is_tensor(basis_matrix) else ad.Tensor(u.T) @ x
    return u.T @ x


def inverse_gft(x_hat, basis_matrix):
    """Inverse transform x = U x^."""
    u = _raw(basis_matrix)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError(f"eigenbasis must be square, got shape {u.shape}")
    return basis_matrix @ x_hat
