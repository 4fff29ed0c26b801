"""Discrete Gabor transform, Zak transform, and window machinery on S_N.

Signals are complex arrays of shape (N,)*d indexed by I_N = (Z_N)^d with the
plain coefficient inner product.  The discrete Gabor transform with window g
is

    V_g f[k, l] = sum_m f[m] conj(g[m - k]) exp(-2 pi i l.m / N),

all index arithmetic mod N.  Summing |V_g f|^2 over the full N^{2d} grid
gives N^d ||f||^2 ||g||^2, so the time-frequency shifts of any nonzero
window form a tight frame and inversion is a single weighted sum.

Continuous-time windows enter through periodization/sampling,
(P f)[n] = sum_k f(n - kN), and through the Zak transform

    Z_N f(x, xi) = sum_k f(x - Nk) exp(2 pi i N k.xi),

whose truncations are certified by the window's Gaussian decay envelope.
The short-time transform of phi = sum_n a_n eps_n against a decaying window
g evaluates as V_g phi(x, xi) = sum_n a_n e^{-2 pi i xi.n} Z_N(conj g)(n - x, xi),
which on the integer samples (k, l/N) reproduces the discrete transform of
the periodized window.
"""

from __future__ import annotations

import math

import numpy as np

from . import theta
from .core import GaborError, validate, im_min_eig


class ShapeMismatchError(GaborError):
    """Signal/window/coefficient arrays have incompatible shapes."""


class ZeroWindowError(GaborError):
    """The window has zero norm; inversion is undefined."""


class NoDecayError(GaborError):
    """A continuous-time operation needs a window with a decay envelope."""


# ---------------------------------------------------------------------------
# windows


class GaussianWindow:
    """Window h0(t) = conj(exp(pi i t'(Omega/N) t)).

    |h0(t)| = exp(-pi t'(Im Omega) t / N), so the envelope constant comes from
    the smallest eigenvalue of Im(Omega) and the squared L2 norm has the
    closed form sqrt(N^d / (2^d det Im Omega)).
    """

    def __init__(self, params):
        self.params = validate(params)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        q = np.einsum("...i,ij,...j->...", t, self.params.Omega, t)
        return np.conj(np.exp(1j * np.pi * q / self.params.N))

    def conj_fn(self, t):
        t = np.asarray(t, dtype=float)
        q = np.einsum("...i,ij,...j->...", t, self.params.Omega, t)
        return np.exp(1j * np.pi * q / self.params.N)

    @property
    def decay(self):
        """(C, alpha) with |h0(t)| <= C exp(-alpha |t|^2)."""
        return 1.0, math.pi * im_min_eig(self.params) / self.params.N

    def l2_norm_sq(self):
        p = self.params
        return math.sqrt(p.N ** p.d / (2.0 ** p.d * float(np.linalg.det(p.im))))


class ExplicitWindow:
    """User-supplied window; the decay envelope (C, alpha) is mandatory.

    The envelope |f(t)| <= C exp(-alpha |t|^2) is what certifies every
    periodization and Zak truncation, so it is required up front rather than
    inferred.
    """

    def __init__(self, fn, decay_c, decay_alpha, params):
        if decay_c is None or decay_alpha is None or not decay_alpha > 0.0:
            raise NoDecayError(
                "explicit windows require an envelope |f(t)| <= C exp(-alpha |t|^2)"
            )
        self.fn = fn
        self.decay_c = float(decay_c)
        self.decay_alpha = float(decay_alpha)
        self.params = validate(params)

    def __call__(self, t):
        return np.asarray(self.fn(np.asarray(t, dtype=float)), dtype=complex)

    def conj_fn(self, t):
        return np.conj(self(t))

    @property
    def decay(self):
        return self.decay_c, self.decay_alpha

    def l2_norm_sq(self):
        return float(l2_inner_product(self, self).real)


class SampledWindow:
    """Window given directly by its N^d coefficients; no off-grid values exist."""

    def __init__(self, coeffs, params):
        self.params = validate(params)
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != params.shape:
            raise ShapeMismatchError(
                f"sampled window must have shape {params.shape}, got {coeffs.shape}"
            )
        self.coeffs = coeffs


def _require_decay(window):
    if isinstance(window, SampledWindow):
        raise NoDecayError("operation needs a continuous-time window with a decay bound")
    return window


# ---------------------------------------------------------------------------
# periodization / sampling


def _k_box(R, d):
    # covers radius-R balls around every rounding of a center in [0, 1)^d
    rng = np.arange(-(R + 1), R + 2)
    return np.stack(np.meshgrid(*([rng] * d), indexing="ij"), axis=-1).reshape(-1, d)


def _tail_radius(C, alpha, params, rel_tol):
    # absolute target: rel_tol relative to the worst-case on-grid lead term
    N, d = params.N, params.d
    a = alpha * N * N
    lead = C * math.exp(-alpha * d * (N / 2.0) ** 2)
    R = 1
    while C * theta.gaussian_box_tail(a, R, d, 0.5) > rel_tol * lead:
        R += 1
        if R > 200:
            raise theta.ToleranceUnreachableError("periodization tail did not certify")
    return R


def periodize_sample(window, rel_tol=1e-14):
    """Sample the periodization (P f)[n] = sum_k f(n - kN) on I_N.

    The lattice sum is truncated at a radius whose Gaussian tail bound is
    below rel_tol relative to the smallest on-grid leading term.
    """
    if isinstance(window, SampledWindow):
        return window.coeffs.copy()
    p = window.params
    C, alpha = window.decay
    R = _tail_radius(C, alpha, p, rel_tol)
    ns = np.indices(p.shape).reshape(p.d, -1).T.astype(float)  # (N^d, d)
    ks = _k_box(R, p.d)                                        # (K, d)
    t = ns[:, None, :] - p.N * ks[None, :, :]
    vals = window(t).sum(axis=1)
    return vals.reshape(p.shape)


# ---------------------------------------------------------------------------
# discrete Gabor transform


def _check_signal(f, name="signal"):
    f = np.asarray(f, dtype=complex)
    N = f.shape[0] if f.ndim else 0
    if f.ndim < 1 or any(s != N for s in f.shape):
        raise ShapeMismatchError(f"{name} must be shaped (N,)*d, got {f.shape}")
    return f


def sn_inner(f, g):
    """Coefficient inner product <f, g> = sum conj(g) f... ordered <f,g> = sum f conj(g)."""
    return complex(np.sum(np.asarray(f) * np.conj(np.asarray(g))))


def time_frequency_shift(h, k, l):
    """(M_l T_k h)[m] = exp(2 pi i l.m / N) h[m - k] with cyclic index shifts."""
    h = _check_signal(h, "window")
    d, N = h.ndim, h.shape[0]
    k = np.atleast_1d(np.asarray(k, dtype=int))
    l = np.atleast_1d(np.asarray(l, dtype=int))
    out = np.roll(h, tuple(int(v) for v in k), axis=tuple(range(d)))
    m = np.indices(h.shape)
    phase = np.exp(2j * np.pi * np.tensordot(l, m, axes=1) / N)
    return phase * out


def dgt(f, g, method="fft"):
    """Discrete Gabor coefficients V_g f[k, l], returned with shape (N,)*2d.

    method="fft" computes, for each shift k, the d-dimensional FFT of
    m -> f[m] conj(g[m - k]); method="direct" is the literal O(N^{3d})
    triple summation kept as an independent reference path.
    """
    f = _check_signal(f)
    g = _check_signal(g, "window")
    if f.shape != g.shape:
        raise ShapeMismatchError(f"signal {f.shape} vs window {g.shape}")
    d, N = f.ndim, f.shape[0]
    axes = tuple(range(d))
    V = np.empty(f.shape + f.shape, dtype=complex)
    if method == "fft":
        for k in np.ndindex(f.shape):
            u = f * np.conj(np.roll(g, k, axis=axes))
            V[k] = np.fft.fftn(u)
    elif method == "direct":
        ms = np.indices(f.shape).reshape(d, -1).T
        fv = f.reshape(-1)
        for k in np.ndindex(f.shape):
            u = fv * np.conj(np.roll(g, k, axis=axes)).reshape(-1)
            for l in np.ndindex(f.shape):
                ph = np.exp(-2j * np.pi * (ms @ np.asarray(l)) / N)
                V[k + l] = (u * ph).sum()
    else:
        raise GaborError(f"unknown dgt method {method!r}")
    return V


def dgt_inverse(V, g):
    """Invert the transform: f = (N^d ||g||^2)^{-1} sum_{k,l} V[k,l] M_l T_k g."""
    g = _check_signal(g, "window")
    d, N = g.ndim, g.shape[0]
    V = np.asarray(V, dtype=complex)
    if V.shape != g.shape * 2:
        raise ShapeMismatchError(f"coefficients must have shape {g.shape * 2}, got {V.shape}")
    gnorm = float(np.vdot(g, g).real)
    if gnorm == 0.0:
        raise ZeroWindowError("window has zero norm")
    # sum over l first: sum_l V[k, l] e^{2 pi i l.m/N} = N^d ifft_l(V[k])[m]
    W = np.fft.ifftn(V, axes=tuple(range(d, 2 * d))) * (N ** d)
    f = np.zeros(g.shape, dtype=complex)
    for k in np.ndindex(g.shape):
        f += W[k] * np.roll(g, k, axis=tuple(range(d)))
    return f / (N ** d * gnorm)


# ---------------------------------------------------------------------------
# Zak transform and the short-time transform of Dirac combs


def _zak_sum_grid(fn, C, alpha, params, U, XI, rel_tol=1e-13):
    # sum_k fn(U - Nk) exp(2 pi i N k.XI) elementwise; U entries in (-N, N)
    N, d = params.N, params.d
    U = np.asarray(U, dtype=float)
    XI = np.asarray(XI, dtype=float)
    R = _tail_radius(C, alpha, params, rel_tol)
    out = np.zeros(np.broadcast_shapes(U.shape[:-1], XI.shape[:-1]), dtype=complex)
    for k in _k_box(R, d):
        out = out + fn(U - N * k) * np.exp(2j * np.pi * N * (XI @ k.astype(float)))
    return out


def zak(window, x, xi, rel_tol=1e-13):
    """Z_N w(x, xi) = sum_k w(x - Nk) exp(2 pi i N k.xi), certified truncation.

    x is first reduced mod N through the covariance
    Z(x + N m, xi) = exp(2 pi i N m.xi) Z(x, xi), which keeps the summation
    box centered.
    """
    window = _require_decay(window)
    p = window.params
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    m = np.floor(x / p.N)
    x0 = x - p.N * m
    C, alpha = window.decay
    base = _zak_sum_grid(window, C, alpha, p, x0, xi, rel_tol)
    return complex(np.exp(2j * np.pi * p.N * (xi @ m)) * base)


def stft_basis_grid(window, X, XI, rel_tol=1e-13):
    """V_g eps_n at every grid point, for every n in I_N.

    X, XI have shape (..., d); the result has shape (N^d, ...) ordered by
    C-order enumeration of I_N.  The Zak argument n - x is recentered through
    the covariance phase, so arbitrary (unreduced) positions are fine.
    """
    window = _require_decay(window)
    p = window.params
    C, alpha = window.decay
    ns = np.indices(p.shape).reshape(p.d, -1).T.astype(float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    XI = np.atleast_2d(np.asarray(XI, dtype=float))
    Xb, XIb = np.broadcast_arrays(X, XI)
    out = np.empty((p.dim_sn,) + Xb.shape[:-1], dtype=complex)
    for i, n in enumerate(ns):
        u = n - Xb
        m = np.floor(u / p.N + 0.5)
        zb = _zak_sum_grid(window.conj_fn, C, alpha, p, u - p.N * m, XIb, rel_tol)
        cov = np.exp(2j * np.pi * p.N * np.einsum("...i,...i->...", XIb, m))
        out[i] = np.exp(-2j * np.pi * (XIb @ n)) * cov * zb
    return out


def stft_basis(n, x, xi, window, rel_tol=1e-13):
    """V_g eps_n(x, xi) = e^{-2 pi i xi.n} Z_N(conj g)(n - x, xi)."""
    window = _require_decay(window)
    p = window.params
    n = np.atleast_1d(np.asarray(n, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    C, alpha = window.decay
    # reduce n - x into the centered range via Zak covariance in its first slot
    u = n - x
    m = np.floor(u / p.N + 0.5)
    u0 = u - p.N * m
    zb = _zak_sum_grid(window.conj_fn, C, alpha, p, u0, xi, rel_tol)
    cov = np.exp(2j * np.pi * p.N * (xi @ m))
    return complex(np.exp(-2j * np.pi * (xi @ n)) * cov * zb)


def stft(coeffs, x, xi, window, rel_tol=1e-13):
    """Short-time transform of phi = sum_n coeffs[n] eps_n at one point."""
    window = _require_decay(window)
    p = window.params
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != p.shape:
        raise ShapeMismatchError(f"coefficients must have shape {p.shape}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    V = stft_basis_grid(window, x, xi, rel_tol)
    return complex((coeffs.reshape(-1) @ V).reshape(-1)[0])


# ---------------------------------------------------------------------------
# quadrature grids and reference inner products


def tn_grid(params, nx, nxi, midpoint=False):
    """Uniform product grid on T_N = [0, N)^d x [0, 1)^d.

    nx and nxi are points per time and frequency axis.  Returns (X, XI, w)
    with X, XI of shape (P, d) and w the cell volume; for periodic smooth
    integrands the plain w-weighted sum is the spectrally accurate
    trapezoid/midpoint rule.
    """
    off = 0.5 if midpoint else 0.0
    d, N = params.d, params.N
    xs = (np.arange(nx) + off) * (N / nx)
    xis = (np.arange(nxi) + off) * (1.0 / nxi)
    axes = [xs] * d + [xis] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    w = (N / nx) ** d * (1.0 / nxi) ** d
    return pts[:, :d], pts[:, d:], w


def l2_inner_product(w1, w2, rel_tol=1e-12):
    """<w1, w2> over R^d by tensor trapezoid with automatic refinement.

    Both windows must carry decay envelopes; the integration box comes from
    the combined envelope and the step is halved until the value stabilizes.
    """
    _require_decay(w1), _require_decay(w2)
    if w1.params.d != w2.params.d:
        raise ShapeMismatchError("windows have different dimensions")
    d = w1.params.d
    C1, a1 = w1.decay
    C2, a2 = w2.decay
    a = a1 + a2
    T = math.sqrt(max(80.0, -math.log(max(rel_tol, 1e-300))) / a)
    # point count is per axis, so the refinement cap shrinks with dimension
    n = 128 if d == 1 else 32
    n_cap = 2 ** 14 if d == 1 else 2 ** 10
    prev = None
    while n <= n_cap:
        ts = np.linspace(-T, T, n + 1)
        mesh = np.meshgrid(*([ts] * d), indexing="ij")
        pts = np.stack([m.reshape(-1) for m in mesh], axis=-1)
        vals = w1(pts) * np.conj(w2(pts))
        h = ts[1] - ts[0]
        val = complex(vals.sum() * h ** d)
        if prev is not None and abs(val - prev) <= rel_tol * max(abs(val), 1e-30):
            return val
        prev = val
        n *= 2
    raise theta.ToleranceUnreachableError("window inner product did not stabilize")
