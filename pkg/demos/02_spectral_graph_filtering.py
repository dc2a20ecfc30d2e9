"""Spectral filtering on a small electrode graph.

Shows the two equivalent routes to a graph convolution: the explicit
eigendecomposition U g(L~) U^T x, and the Chebyshev recurrence that never
forms U. Run with:

    python3 demos/02_spectral_graph_filtering.py
"""

import numpy as np

from dgsd import (chebyshev_basis, estimate_lambda_max, gft, graph_conv,
                  inverse_gft, laplacian, rescale_laplacian)

rng = np.random.default_rng(0)

# A 6-node weighted graph (think: 6 electrodes, weights = functional
# connection strength).
raw = rng.uniform(0.0, 1.0, (6, 6))
weights = (raw + raw.T) / 2
np.fill_diagonal(weights, 0.0)

lap = laplacian(weights)
print("Laplacian row sums (always 0):", np.abs(lap.sum(axis=1)).max())

eigvals, u = np.linalg.eigh(lap)
print("graph frequencies (Laplacian eigenvalues):", np.round(eigvals, 3))

# Power iteration tracks the top eigenvalue without the full eigensolve;
# training refreshes it every step because the graph itself is learned.
lam = estimate_lambda_max(lap)
print(f"lambda_max: power iteration {lam:.6f} vs eigh {eigvals.max():.6f}")

# Graph Fourier transform round trip.
x = rng.standard_normal((6, 2))
x_hat = gft(x, u)
print("GFT round-trip error:", np.abs(inverse_gft(x_hat, u) - x).max())

# Chebyshev route vs explicit spectral route.
k = 3
thetas = [rng.standard_normal((2, 2)) for _ in range(k)]
basis = chebyshev_basis(rescale_laplacian(lap, lam), k)
y_cheb = graph_conv(x, basis, thetas)

lt = 2.0 * eigvals / lam - 1.0
terms = [np.ones_like(lt), lt, 2 * lt * lt - 1.0]
y_direct = sum(u @ np.diag(tk) @ u.T @ x @ th for tk, th in zip(terms, thetas))
print("Chebyshev vs direct spectral filtering:",
      np.abs(y_cheb - y_direct).max())

# The basis terms are polynomials in L~, so a K-term filter mixes
# information from at most K-1 hops away.
print("\nsupport growth with polynomial order:")
for order, term in enumerate(chebyshev_basis(rescale_laplacian(lap, lam), 4).terms):
    print(f"  T_{order}: {np.count_nonzero(np.abs(term) > 1e-12)} nonzero entries")
