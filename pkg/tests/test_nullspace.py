"""Tests for the circulant-FFT subspace machinery: grids, rotations, bases."""

from __future__ import annotations

import time

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.linalg import subspace_angles

from hmgn.errors import SpectrumDegeneracyError
from hmgn.nullspace import (
    RotatedSpectrum,
    eval_poly_grid,
    fhat_matrix,
    find_rotation,
    nullspace_basis,
    rotated_spectrum,
)
from hmgn.series import GlrrVector, embed, generate_model_signal, ModelComponent

from _oracles import gram_schmidt_cols, poly_eval_oracle, q_matrix_oracle

# well-scaled random GLRR coefficients, orders 1..4
glrr_arrays = st.integers(min_value=1, max_value=4).flatmap(
    lambda r: st.lists(
        st.floats(min_value=-5, max_value=5, allow_nan=False),
        min_size=r + 1,
        max_size=r + 1,
    ).filter(lambda c: max(abs(v) for v in c) > 1e-2)
)


def _rotated_grid(n, alpha):
    return np.exp(1j * (2.0 * np.pi * np.arange(n) / n - alpha))


# ---------------------------------------------------------------------------
# eval_poly_grid
# ---------------------------------------------------------------------------


def test_eval_poly_fourth_roots():
    # 1 - z at the 4th roots of unity
    got = eval_poly_grid((1.0, -1.0), 0.0, 4)
    assert_allclose(got, [0.0, 1.0 - 1.0j, 2.0, 1.0 + 1.0j], atol=1e-15)


def test_eval_poly_constant():
    got = eval_poly_grid((3.5, 0.0), 0.3, 16)
    assert_allclose(got, np.full(16, 3.5 + 0.0j), atol=1e-15)


@pytest.mark.parametrize("mode", ["plain", "compensated"])
def test_eval_poly_matches_naive_powers(mode):
    a = (0.7, -1.3, 0.25, 2.0)
    got = eval_poly_grid(a, 0.11, 64, mode)
    want = poly_eval_oracle(a, _rotated_grid(64, 0.11))
    assert_allclose(got, want, rtol=1e-12)


def test_grid_rotation_identity():
    # evaluating on the rotated grid equals evaluating the coefficient
    # polynomial at the rotated points directly
    a = np.array([1.0, -2.2, 0.8, 0.3])
    alpha = 4.2e-4
    got = eval_poly_grid(a, alpha, 128)
    want = np.polyval(a[::-1], _rotated_grid(128, alpha))
    assert_allclose(got, want, rtol=1e-12, atol=1e-14)


def test_compensated_horner_near_triple_root():
    # (1-z)^3 collapses catastrophically near z = 1; the compensated
    # evaluation should match a 128-bit oracle to a couple of ulps while
    # the plain evaluation loses at least six digits
    a = (1.0, -3.0, 3.0, -1.0)
    n, alpha = 4096, 1e-5
    j = 0  # grid point closest to z = 1
    plain = eval_poly_grid(a, alpha, n, "plain")[j]
    comp = eval_poly_grid(a, alpha, n, "compensated")[j]

    # evaluate the polynomial exactly at the double-precision grid point the
    # implementation uses (the grid rounding itself is not under test)
    z_double = np.exp(1j * (2.0 * np.pi * j / n - alpha))
    with mpmath.workprec(128):
        z = mpmath.mpc(z_double.real, z_double.imag)
        exact = (1 - z) ** 3
        exact_c = complex(exact.real, exact.imag)

    scale = abs(exact_c)
    assert abs(comp - exact_c) <= 2 * np.spacing(scale)
    assert abs(plain - exact_c) >= 1e6 * np.spacing(scale)


# ---------------------------------------------------------------------------
# find_rotation
# ---------------------------------------------------------------------------


def test_rotation_avoids_unit_root():
    n = 8
    alpha = find_rotation((1.0, -1.0), n)
    assert alpha != 0.0
    assert -np.pi / n < alpha <= np.pi / n
    assert np.min(np.abs(eval_poly_grid((1.0, -1.0), alpha, n))) > 0.0


def test_rotation_no_unit_circle_roots():
    # |2 - z| >= 1 everywhere on the circle, so any rotation works
    alpha = find_rotation((2.0, -1.0), 32)
    assert np.min(np.abs(eval_poly_grid((2.0, -1.0), alpha, 32))) >= 1.0


def test_min_eigenvalue_scaling_double_root():
    # |lambda_min| * N^2 settles near pi^2 for the double unit root
    for k in range(6, 13):
        n = 2**k
        sp = rotated_spectrum((1.0, -2.0, 1.0), n)
        assert 9.0 <= sp.min_abs_eigenvalue * n**2 <= 10.5


@pytest.mark.parametrize(
    "t,a", [(1, (1.0, -1.0)), (2, (1.0, -2.0, 1.0)), (3, (1.0, -3.0, 3.0, -1.0))]
)
def test_min_eigenvalue_slope(t, a):
    logs = []
    for k in range(6, 11):
        n = 2**k
        sp = rotated_spectrum(a, n)
        logs.append((np.log(n), np.log(sp.min_abs_eigenvalue)))
    slope = np.polyfit([p[0] for p in logs], [p[1] for p in logs], 1)[0]
    assert abs(slope + t) <= 0.25


def test_degenerate_grid_raises():
    with pytest.raises(SpectrumDegeneracyError):
        rotated_spectrum((1.0, -1.0), 8, alpha0=0.0)
    with pytest.raises(SpectrumDegeneracyError):
        find_rotation((1.0, -1.0, 0.0, 0.0, 0.0), 4)


# ---------------------------------------------------------------------------
# nullspace_basis
# ---------------------------------------------------------------------------


def test_constant_series_basis():
    basis = nullspace_basis((1.0, -1.0), 5)
    col = basis.z[:, 0]
    assert_allclose(np.abs(col), np.full(5, 1 / np.sqrt(5)), atol=1e-12)
    assert basis.residual_norm <= 1e-12


def test_affine_sequences_basis():
    basis = nullspace_basis((1.0, -2.0, 1.0), 6)
    n = np.arange(6, dtype=float)
    want = gram_schmidt_cols(np.column_stack([np.ones(6), n]))
    angles = subspace_angles(basis.z, want)
    assert np.max(angles) <= 1e-10
    q = q_matrix_oracle((1.0, -2.0, 1.0), 6)
    assert np.linalg.norm(q.T @ basis.z) <= 1e-10


@pytest.mark.parametrize(
    "mode,angle_tol", [("plain", 1e-6), ("compensated", 1e-9)]
)
def test_quadratic_span_large_n(mode, angle_tol):
    n = 1000
    basis = nullspace_basis((1.0, -3.0, 3.0, -1.0), n, mode)
    grid = np.arange(n, dtype=float)
    want = gram_schmidt_cols(np.column_stack([np.ones(n), grid, grid**2]))
    assert np.max(subspace_angles(basis.z, want)) <= angle_tol


def test_projector_invariant_to_basis_route():
    # plain and compensated assemble the basis differently; the projectors
    # they induce must agree
    a = (1.0, -0.9, 0.3, -0.4)
    zp = nullspace_basis(a, 240, "plain").z
    zc = nullspace_basis(a, 240, "compensated").z
    assert np.linalg.norm(zp @ zp.T - zc @ zc.T) <= 1e-8


@settings(max_examples=60, deadline=None)
@given(a=glrr_arrays, n=st.integers(min_value=16, max_value=128))
def test_basis_orthonormal_and_annihilated(a, n):
    coeffs = GlrrVector(np.asarray(a))
    basis = nullspace_basis(coeffs, n)
    r = coeffs.order
    assert basis.z.shape == (n, r)
    assert np.linalg.norm(basis.z.T @ basis.z - np.eye(r)) <= 1e-10
    q = q_matrix_oracle(coeffs.coeffs, n)
    assert np.linalg.norm(q.T @ basis.z) <= 1e-9 * max(
        1.0, np.linalg.norm(coeffs.coeffs)
    )


def test_basis_cost_scaling():
    a = (1.0, -0.5, 0.2, 0.1)

    def measure(n):
        best = np.inf
        for _ in range(5):
            t0 = time.perf_counter()
            nullspace_basis(a, n)
            best = min(best, time.perf_counter() - t0)
        return best

    measure(2048)  # warm-up
    ratio = measure(8192) / measure(2048)
    assert ratio <= 5.5


# ---------------------------------------------------------------------------
# fhat_matrix
# ---------------------------------------------------------------------------


def test_fhat_zero_series():
    fhat = fhat_matrix((1.0, -0.7), np.zeros(40), tau=1)
    assert_allclose(fhat, np.zeros((40, 1)), atol=1e-14)


def test_fhat_constant_series_hand_case():
    # a = (1,-1), tau=1: K(tau) = {2}, M = -(second row of T_2(S))^T
    n = 30
    s = np.full(n, 2.5)
    fhat = fhat_matrix((1.0, -1.0), s, tau=1)
    m = -embed(s, 2)[1, :].reshape(-1, 1)
    q = q_matrix_oracle((1.0, -1.0), n)
    assert np.linalg.norm(q.T @ fhat - m) <= 1e-10 * np.linalg.norm(m)


@pytest.mark.parametrize("seed", range(4))
def test_fhat_residual_random_rank_r(seed):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(1, 5))
    n = int(rng.integers(8 * r, 200))
    comps = [
        ModelComponent(
            poly=(1.0,),
            alpha=float(rng.uniform(-0.02, 0.0)),
            omega=float(rng.uniform(0.05, 0.45)),
            phi=float(rng.uniform(0, np.pi)),
        )
        for _ in range((r + 1) // 2)
    ]
    s = generate_model_signal(comps, n).values
    coeffs = rng.standard_normal(r + 1)
    while np.linalg.norm(coeffs) < 0.5:
        coeffs = rng.standard_normal(r + 1)
    tau = int(rng.integers(1, r + 2))
    fhat = fhat_matrix(coeffs, s, tau=tau)
    rows = [j for j in range(r + 1) if j != tau - 1]
    m = -embed(s, r + 1)[rows, :].T
    q = q_matrix_oracle(coeffs, n)
    assert np.linalg.norm(q.T @ fhat - m) <= 1e-8 * max(1.0, np.linalg.norm(m))


def test_fhat_rejects_bad_shapes():
    with pytest.raises(ValueError):
        fhat_matrix((1.0, -0.5, 0.2), np.ones(4), tau=1)  # r >= N/2
    with pytest.raises(ValueError):
        fhat_matrix((1.0, -0.5), np.ones(20), tau=3)  # tau out of range
