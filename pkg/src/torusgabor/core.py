"""Parameters, lattices, and coordinate maps for the time-frequency torus.

Everything in this package is configured by a triple (d, N, Omega): the space
dimension, the number of samples per axis, and a Siegel matrix Omega
(symmetric, with positive definite imaginary part).  Omega identifies the
real torus T_N = R^{2d} / (N Z^d x Z^d) with the complex torus
T_Omega = C^d / Lambda, where

    Lambda = -i Omega Z^d + i Z^d,      z = -i(Omega x / N + xi),

so the integer time-frequency sample (k, l) lands on z = -i(Omega k/N + l/N).
The transforms live on the real side and the frame criteria on the complex
side; this module owns the dictionary between the two, plus the
integer-lattice membership test the frame predicates are built on.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np


class GaborError(Exception):
    """Base class for domain errors raised by this package."""


class NonSymmetricError(GaborError):
    """Omega is not symmetric within tolerance."""


class NotPositiveDefiniteError(GaborError):
    """Im(Omega) has a nonpositive eigenvalue."""


class SingularSystemError(GaborError):
    """A real-linear coordinate system could not be solved."""


class QuadratureUnderResolvedError(GaborError):
    """Grid doubling kept changing the result; the quadrature is not converged."""


SYMMETRY_RTOL = 1e-12


@dataclasses.dataclass(frozen=True, eq=False)
class GaborParams:
    """Global configuration: dimension d, samples per axis N, Siegel matrix Omega.

    The signal space has dimension N^d, the time lattice step is 1 and the
    frequency lattice step is 1/N.  Omega may be passed as a scalar for d = 1.
    """

    d: int
    N: int
    Omega: np.ndarray

    def __post_init__(self):
        if self.d < 1 or self.N < 1:
            raise GaborError("d and N must be positive integers")
        om = np.atleast_2d(np.asarray(self.Omega, dtype=complex))
        if om.shape != (self.d, self.d):
            raise GaborError(f"Omega must be {self.d}x{self.d}, got {om.shape}")
        om = om.copy()
        om.setflags(write=False)
        object.__setattr__(self, "Omega", om)

    @property
    def dim_sn(self):
        """Dimension N^d of the signal space."""
        return self.N ** self.d

    @property
    def shape(self):
        return (self.N,) * self.d

    @property
    def im(self):
        return self.Omega.imag

    @property
    def re(self):
        return self.Omega.real


def validate(params):
    """Check the Siegel conditions; return params unchanged if they hold."""
    om = params.Omega
    scale = float(np.abs(om).max())
    asym = float(np.abs(om - om.T).max())
    if scale > 0.0 and asym > SYMMETRY_RTOL * scale:
        raise NonSymmetricError(
            f"Omega asymmetry {asym:.3e} exceeds {SYMMETRY_RTOL:.0e} * max|Omega| "
            f"= {SYMMETRY_RTOL * scale:.3e}"
        )
    sym_im = 0.5 * (params.im + params.im.T)
    low = float(np.linalg.eigvalsh(sym_im)[0])
    if low <= 0.0:
        raise NotPositiveDefiniteError(
            f"smallest eigenvalue of Im(Omega) is {low:.3e}; must be positive"
        )
    return params


def im_min_eig(params):
    """Smallest eigenvalue of Im(Omega); every Gaussian decay rate derives from it."""
    return float(np.linalg.eigvalsh(params.im)[0])


@dataclasses.dataclass(frozen=True, eq=False)
class TFPoint:
    """Point (x, xi) on T_N; x per axis in [0, N), xi per axis in [0, 1)."""

    x: np.ndarray
    xi: np.ndarray


@dataclasses.dataclass(frozen=True, eq=False)
class ComplexPoint:
    """Representative z of a class in C^d / Lambda."""

    z: np.ndarray


def reduce_tf(x, xi, params):
    """Reduce time mod N and frequency mod 1."""
    return np.mod(np.asarray(x, dtype=float), params.N), np.mod(np.asarray(xi, dtype=float), 1.0)


def tf_to_complex(x, xi, params):
    """Raw coordinate map z = -i(Omega x/N + xi); no reduction."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return -1j * (params.Omega @ x / params.N + xi)


def to_complex(p, params):
    """Map a TFPoint to its image on the complex torus."""
    return ComplexPoint(tf_to_complex(p.x, p.xi, params))


def _real_solve(z, params, b_sign):
    # Solve z = -i(Omega a + b_sign * b) for real d-vectors (a, b):
    # Re z = Y a, Im z = -X a - b_sign * b, with Omega = X + iY.
    d = params.d
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.shape != (d,):
        raise GaborError(f"expected a complex {d}-vector, got shape {z.shape}")
    M = np.zeros((2 * d, 2 * d))
    M[:d, :d] = params.im
    M[d:, :d] = -params.re
    M[d:, d:] = -b_sign * np.eye(d)
    rhs = np.concatenate([z.real, z.imag])
    try:
        sol = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"coordinate solve failed: {exc}") from None
    return sol[:d], sol[d:]


def complex_to_tf(z, params):
    """Solve z = -i(Omega a + b) and return the unreduced (x, xi) = (N a, b)."""
    a, b = _real_solve(z, params, +1.0)
    return params.N * a, b


def from_complex(cp, params):
    """Invert the coordinate map; the result lies in the fundamental box."""
    x, xi = complex_to_tf(cp.z, params)
    x, xi = reduce_tf(x, xi, params)
    return TFPoint(x, xi)


def lattice_coefficients(z, params):
    """Real coefficients (a, b) with z = -i Omega a + i b."""
    return _real_solve(z, params, -1.0)


@dataclasses.dataclass(frozen=True, eq=False)
class LatticeMembership:
    """Outcome of a lattice membership test, with the rounded integer witness."""

    member: bool
    a: np.ndarray
    b: np.ndarray
    residual: float


def dual_lattice_member(z, params, scale=1.0, tol=1e-9):
    """Test z in scale * Lambda, where Lambda = -i Omega Z^d + i Z^d.

    The solved real coefficients are divided by `scale` and compared with the
    nearest integers; `residual` is the largest componentwise distance.  For
    the principal polarization carried by Lambda the lattice dual to Lambda
    under the torus symplectic form is Lambda itself, so scale 1 is the test
    the frame parity predicate needs; scale 1/N probes the refinement that
    shows up in sampling arguments.
    """
    a, b = lattice_coefficients(z, params)
    ca, cb = a / scale, b / scale
    wa, wb = np.round(ca), np.round(cb)
    residual = float(max(np.abs(ca - wa).max(), np.abs(cb - wb).max()))
    return LatticeMembership(
        member=residual <= tol,
        a=wa.astype(int),
        b=wb.astype(int),
        residual=residual,
    )


def reduce_complex(z, params):
    """Lattice-reduce z into the box {-i Omega a + i b : a, b in [0, 1)^d}."""
    a, b = lattice_coefficients(z, params)
    af = a - np.floor(a)
    bf = b - np.floor(b)
    return -1j * (params.Omega @ af) + 1j * bf


def complex_distance_mod_lattice(z1, z2, params):
    """Euclidean distance |z1 - z2| minimized over Lambda translates."""
    a, b = lattice_coefficients(np.atleast_1d(np.asarray(z1 - z2, dtype=complex)), params)
    ra = a - np.round(a)
    rb = b - np.round(b)
    return float(np.linalg.norm(-1j * (params.Omega @ ra) + 1j * rb))


def params_to_json(params):
    """Serialize to the {"d", "N", "omega_re", "omega_im"} schema."""
    return json.dumps(
        {
            "d": params.d,
            "N": params.N,
            "omega_re": params.re.tolist(),
            "omega_im": params.im.tolist(),
        }
    )


def params_from_json(text):
    """Parse and validate parameters from the JSON schema."""
    obj = json.loads(text)
    om = np.asarray(obj["omega_re"], dtype=float) + 1j * np.asarray(obj["omega_im"], dtype=float)
    return validate(GaborParams(d=int(obj["d"]), N=int(obj["N"]), Omega=om))
