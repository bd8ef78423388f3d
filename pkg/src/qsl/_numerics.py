"""Small dense-linear-algebra and quadrature kernels for batched 2x2 work."""

import numpy as np

_GL_CACHE = {}


def gauss_legendre(n=10):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def composite_nodes(mesh, n=10):
    """Gauss-Legendre nodes and weights on every cell of ``mesh``.

    Returns arrays of shape ``(len(mesh) - 1, n)``.
    """
    x, w = gauss_legendre(n)
    mesh = np.asarray(mesh, dtype=float)
    lo, hi = mesh[:-1, None], mesh[1:, None]
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def refine_mesh(points, interval, n_base):
    """Sorted union of ``points`` and a uniform mesh with ``n_base`` cells."""
    a, b = interval
    pts = np.concatenate([np.linspace(a, b, n_base + 1), np.asarray(points, dtype=float).ravel()])
    pts = np.unique(np.clip(pts, a, b))
    # drop near-duplicates that would create degenerate cells
    keep = np.concatenate([[True], np.diff(pts) > 1e-14 * max(1.0, abs(b - a))])
    pts = pts[keep]
    pts[-1] = b
    return pts


def det2(M):
    return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]


def inv2(M):
    d = det2(M)
    out = np.empty_like(M)
    out[..., 0, 0] = M[..., 1, 1]
    out[..., 1, 1] = M[..., 0, 0]
    out[..., 0, 1] = -M[..., 0, 1]
    out[..., 1, 0] = -M[..., 1, 0]
    return out / d[..., None, None]


def expm2(M):
    """Matrix exponential of a batch of 2x2 matrices in closed form.

    Uses ``exp(M) = e^{τ/2} (cosh s I + sinh(s)/s (M - τ/2 I))`` with
    ``τ = tr M`` and ``s² = -det(M - τ/2 I)``.
    """
    M = np.asarray(M, dtype=complex)
    tau = 0.5 * (M[..., 0, 0] + M[..., 1, 1])
    N = M.copy()
    N[..., 0, 0] -= tau
    N[..., 1, 1] -= tau
    s = np.sqrt(-det2(N))
    small = np.abs(s) < 1e-4
    s_safe = np.where(small, 1.0, s)
    s2 = s * s
    sinhc = np.where(small, 1.0 + s2 / 6.0 + s2 * s2 / 120.0, np.sinh(s_safe) / s_safe)
    cosh = np.where(small, 1.0 + s2 / 2.0 + s2 * s2 / 24.0, np.cosh(s_safe))
    out = sinhc[..., None, None] * N
    out[..., 0, 0] += cosh
    out[..., 1, 1] += cosh
    return np.exp(tau)[..., None, None] * out


def spectral_norm2(M):
    """Largest singular value of 2x2 matrices from the closed-form formula."""
    M = np.asarray(M, dtype=complex)
    fro2 = np.sum(np.abs(M) ** 2, axis=(-2, -1))
    d = np.abs(det2(M))
    disc = np.sqrt(np.maximum(fro2**2 - 4.0 * d**2, 0.0))
    return np.sqrt(0.5 * (fro2 + disc))


def singular_values2(M):
    """Both singular values (descending) of 2x2 matrices."""
    M = np.asarray(M, dtype=complex)
    smax = spectral_norm2(M)
    d = np.abs(det2(M))
    smin = np.where(smax > 0, d / np.where(smax > 0, smax, 1.0), 0.0)
    return smax, smin
