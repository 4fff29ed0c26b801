import numpy as np
import pytest

from torusgabor.core import (
    ComplexPoint,
    GaborParams,
    NonSymmetricError,
    NotPositiveDefiniteError,
    TFPoint,
    complex_distance_mod_lattice,
    complex_to_tf,
    dual_lattice_member,
    from_complex,
    lattice_coefficients,
    params_from_json,
    params_to_json,
    reduce_complex,
    reduce_tf,
    tf_to_complex,
    to_complex,
    validate,
)

TOL = 1e-12


def _p1(omega=1j, N=4):
    return GaborParams(d=1, N=N, Omega=np.array([[omega]]))


def _p2():
    om = np.array([[0.2 + 1.0j, 0.1 + 0.05j], [0.1 + 0.05j, 1.3j]])
    return GaborParams(d=2, N=3, Omega=om)


def test_params_validation_accepts_siegel_matrices():
    validate(_p1())
    validate(_p1(0.3 + 1j))
    validate(_p2())


def test_params_rejects_asymmetric_omega():
    om = np.array([[1j, 0.2], [0.1, 1j]])
    with pytest.raises(NonSymmetricError):
        validate(GaborParams(d=2, N=2, Omega=om))


def test_params_rejects_indefinite_imaginary_part():
    with pytest.raises(NotPositiveDefiniteError):
        validate(_p1(omega=0.5 - 0.1j))
    with pytest.raises(NotPositiveDefiniteError):
        validate(_p1(omega=0.5))


def test_params_matrix_is_read_only():
    p = _p1()
    with pytest.raises(ValueError):
        p.Omega[0, 0] = 2j


def test_params_shape_helpers():
    p = _p2()
    assert p.shape == (3, 3)
    assert p.dim_sn == 9
    assert np.allclose(p.im, [[1.0, 0.05], [0.05, 1.3]])
    assert np.allclose(p.re, [[0.2, 0.1], [0.1, 0.0]])


def test_coordinate_map_formula():
    p = _p1(0.3 + 1j)
    x = np.array([1.7])
    xi = np.array([0.45])
    z = tf_to_complex(x, xi, p)
    expect = -1j * ((0.3 + 1j) * 1.7 / 4 + 0.45)
    assert abs(z[0] - expect) < TOL


def test_coordinate_map_round_trip():
    rng = np.random.default_rng(5)
    for p in (_p1(), _p1(0.3 + 1j, N=3), _p2()):
        for _ in range(20):
            x = rng.uniform(0, p.N, p.d)
            xi = rng.uniform(0, 1, p.d)
            cp = to_complex(TFPoint(x=x, xi=xi), p)
            back = from_complex(cp, p)
            assert np.abs(back.x - x).max() < 1e-10
            assert np.abs(back.xi - xi).max() < 1e-10


def test_complex_to_tf_is_unreduced():
    p = _p1()
    z = tf_to_complex(np.array([5.0]), np.array([1.25]), p)
    x, xi = complex_to_tf(z, p)
    assert abs(x[0] - 5.0) < TOL and abs(xi[0] - 1.25) < TOL


def test_lattice_coefficients_recover_generators():
    rng = np.random.default_rng(8)
    for p in (_p1(0.3 + 1j), _p2()):
        for _ in range(20):
            a = rng.standard_normal(p.d)
            b = rng.standard_normal(p.d)
            z = -1j * (p.Omega @ a) + 1j * b
            ar, br = lattice_coefficients(z, p)
            assert np.abs(ar - a).max() < 1e-10
            assert np.abs(br - b).max() < 1e-10


def test_dual_lattice_membership_and_scale():
    p = _p1(0.3 + 1j)
    z = -1j * (p.Omega @ np.array([2.0])) + 1j * np.array([-3.0])
    m = dual_lattice_member(z, p)
    assert m.member and m.a[0] == 2 and m.b[0] == -3
    # same vector against the scaled lattice
    m2 = dual_lattice_member(z / 4, p, scale=0.25)
    assert m2.member
    m3 = dual_lattice_member(z + 1e-5, p)
    assert not m3.member
    assert m3.residual > 1e-6


def test_near_membership_tolerance_boundary():
    p = _p1()
    z = -1j * (p.Omega @ np.array([1.0])) + 1j * np.array([1.0])
    assert dual_lattice_member(z + 1e-12, p).member
    assert not dual_lattice_member(z + 1e-7, p, tol=1e-9).member


def test_reduce_complex_lands_in_fundamental_box():
    rng = np.random.default_rng(2)
    for p in (_p1(), _p2()):
        for _ in range(20):
            z = rng.standard_normal(p.d) * 3 + 1j * rng.standard_normal(p.d) * 3
            zr = reduce_complex(z, p)
            a, b = lattice_coefficients(zr, p)
            assert np.all(a >= -1e-12) and np.all(a < 1 + 1e-12)
            assert np.all(b >= -1e-12) and np.all(b < 1 + 1e-12)
            # the reduction moved z by a lattice vector
            assert dual_lattice_member(z - zr, p, tol=1e-8).member


def test_distance_mod_lattice():
    p = _p1(0.3 + 1j)
    z = np.array([0.37 - 0.21j])
    shift = -1j * (p.Omega @ np.array([3.0])) + 1j * np.array([-2.0])
    assert complex_distance_mod_lattice(z, z + shift, p) < 1e-10
    assert complex_distance_mod_lattice(z, z + 0.05, p) == pytest.approx(0.05, rel=1e-6)


def test_reduce_tf_wraps_both_coordinates():
    p = _p1()
    x, xi = reduce_tf(np.array([9.5]), np.array([2.75]), p)
    assert x[0] == pytest.approx(1.5)
    assert xi[0] == pytest.approx(0.75)


def test_params_json_round_trip():
    for p in (_p1(0.3 + 1j), _p2()):
        q = params_from_json(params_to_json(p))
        assert q.d == p.d and q.N == p.N
        assert np.abs(q.Omega - p.Omega).max() < TOL


def test_params_json_rejects_bad_matrix():
    with pytest.raises(Exception):
        params_from_json('{"d": 2, "N": 2, "omega_re": [[0]], "omega_im": [[1]]}')
