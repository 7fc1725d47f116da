"""Decorrelate a contextual embedding sample with the whitening transform.

Multi-word label names are embedded by averaging contextual token states;
those states are strongly anisotropic, so the neighbor search runs in a
whitened space instead: zero mean, identity covariance. The transform is
affine, so averaging before or after whitening is equivalent.

Run: python3 demos/05_whitening.py
"""

import numpy as np

from npprompt import fit_whitening, whiten

rng = np.random.default_rng(42)

# a correlated, shifted sample standing in for contextual token states
mixing = rng.standard_normal((6, 6))
sample = rng.standard_normal((400, 6)) @ mixing + rng.standard_normal(6) * 5.0

cov = np.cov(sample, rowvar=False, bias=True)
print("before: per-coordinate mean range "
      f"[{sample.mean(axis=0).min():+.2f}, {sample.mean(axis=0).max():+.2f}]")
print(f"before: max |off-diagonal covariance| = {np.abs(cov - np.diag(np.diag(cov))).max():.3f}")

transform = fit_whitening(sample)
whitened = whiten(sample, transform)

wcov = whitened.T @ whitened / whitened.shape[0]
print(f"after : max |mean| = {np.abs(whitened.mean(axis=0)).max():.2e}")
print(f"after : max |covariance - I| = {np.abs(wcov - np.eye(6)).max():.2e}")

# affine linearity: whiten(mean of rows) == mean of whitened rows
phrase_rows = sample[:3]
lhs = whiten(phrase_rows.mean(axis=0), transform)
rhs = whiten(phrase_rows, transform).mean(axis=0)
print(f"affine check, max |difference| = {np.abs(lhs - rhs).max():.2e}")
