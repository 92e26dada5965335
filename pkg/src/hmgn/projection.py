"""Weighted projections onto GLRR kernel spaces.

Two routes compute Π_{Z(a),W}x.  The basis route builds an orthonormal basis
Z of Z(a) and solves the whitened least-squares problem min_q ‖x − Zq‖_W;
it works for every weight variant, including masked seminorms.  The Gram
route never forms a basis: it uses Π = I − W⁻¹Q(a)Γ⁻¹(a)Qᵀ(a) with
Γ(a) = Qᵀ(a)W⁻¹Q(a), which stays banded when W⁻¹ is banded, so one banded
Cholesky factorization covers a projection and the full variable-projection
Jacobian.  The Gram route is cheaper per solve but its conditioning degrades
like κ(Γ) ~ N^{2t} near t-fold unit-circle roots, so the basis route is the
robust default.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import GammaBreakdownError, RankDeficiencyError, WeightVariantError
from .nullspace import RotatedSpectrum, SubspaceBasis, nullspace_basis
from .series import (
    GlrrVector,
    TimeSeries,
    _glrr_coeffs,
    apply_q,
    apply_q_transpose,
    as_time_series,
)
from .weights import BandedWinv, Identity, WeightSpec, apply_winv, whiten

__all__ = [
    "ProjectionResult",
    "GammaFactor",
    "weighted_pinv_apply",
    "project_onto_glrr_space",
    "project_gamma",
    "vp_jacobian",
]

#: condition estimate of the pivoted R factor beyond which the least-squares
#: solve falls back to an SVD
_QR_COND_LIMIT = 1e12

#: relative singular-value cutoff declaring the weighted design rank-deficient
_RANK_TOL = 1e-12


@dataclass(frozen=True)
class ProjectionResult:
    """Outcome of a weighted least-squares projection.

    ``projected`` is Z·q; ``coefficients`` holds q, the expansion of the
    projection in the columns of the supplied matrix.  For a batch of
    right-hand sides both fields gain a trailing axis.
    """

    projected: np.ndarray
    coefficients: np.ndarray


def _as_vector_or_batch(x: Union[TimeSeries, np.ndarray]) -> np.ndarray:
    if isinstance(x, TimeSeries):
        return x.values
    arr = np.asarray(x, dtype=float)
    if arr.ndim not in (1, 2):
        raise ValueError("right-hand side must be a vector or a matrix")
    return arr


def weighted_pinv_apply(
    z: np.ndarray, w: WeightSpec, x: Union[TimeSeries, np.ndarray]
) -> ProjectionResult:
    """Apply the weighted pseudoinverse: q = Z^{†W}x and Π_{Z,W}x = Z·q.

    The design is whitened (C·Z against C·x, or the banded-inverse analogue)
    and solved by column-pivoted QR; if the R factor's condition estimate
    exceeds 1e12 the solve restarts as an SVD.  A smallest singular value
    below 1e−12 of the largest means W^{1/2}Z lost column rank and raises
    ``RankDeficiencyError`` — for masked weights this typically means a basis
    vector is unobserved on the mask's support.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 2:
        raise ValueError("basis must be a two-dimensional array")
    rhs = _as_vector_or_batch(x)
    zw = whiten(w, z)
    xw = whiten(w, rhs)

    q_mat, r_mat, piv = scipy.linalg.qr(zw, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r_mat))
    if diag.size == 0:
        raise ValueError("basis must have at least one column")
    use_svd = diag[-1] == 0.0 or diag[0] / diag[-1] > _QR_COND_LIMIT
    if use_svd:
        u, s, vt = np.linalg.svd(zw, full_matrices=False)
        if s[0] == 0.0 or s[-1] < _RANK_TOL * s[0]:
            raise RankDeficiencyError(
                "weighted design lost column rank "
                f"(σ_min/σ_max = {0.0 if s[0] == 0.0 else s[-1] / s[0]:.3e})"
            )
        coeffs = vt.T @ ((u.T @ xw) / (s if xw.ndim == 1 else s[:, None]))
    else:
        y = scipy.linalg.solve_triangular(r_mat, q_mat.T @ xw)
        coeffs = np.empty_like(y)
        coeffs[piv] = y
    return ProjectionResult(projected=z @ coeffs, coefficients=coeffs)


def project_onto_glrr_space(
    a: Union[GlrrVector, np.ndarray],
    w: WeightSpec,
    x: Union[TimeSeries, np.ndarray],
    mode: str = "plain",
    spectrum: Optional[RotatedSpectrum] = None,
    basis: Optional[SubspaceBasis] = None,
    imag_tol: float = 1e-9,
) -> ProjectionResult:
    """Π_{Z(a),W}x through an orthonormal basis of Z(a).

    A precomputed ``basis`` (or ``spectrum``) can be supplied to share work
    across projections at the same a.
    """
    rhs = _as_vector_or_batch(x)
    if basis is None:
        basis = nullspace_basis(
            a, rhs.shape[0], mode=mode, spectrum=spectrum, imag_tol=imag_tol
        )
    return weighted_pinv_apply(basis.z, w, rhs)


# ---------------------------------------------------------------------------
# Gram (Γ) route
# ---------------------------------------------------------------------------


def _sparse_q(coeffs: np.ndarray, n: int) -> scipy.sparse.csc_matrix:
    r = coeffs.size - 1
    diags = [np.full(n - r, c) for c in coeffs]
    return scipy.sparse.diags(
        diags, offsets=[-i for i in range(r + 1)], shape=(n, n - r)
    ).tocsc()


class GammaFactor:
    """Banded Cholesky factorization of Γ(a) = Qᵀ(a)W⁻¹Q(a).

    Γ is (2(r+p)+1)-diagonal for a p-banded W⁻¹; its upper Cholesky factor
    has r+p+1 diagonals.  The factor is immutable and reusable for every
    Γ⁻¹ solve at the same (a, W) — a projection plus all Jacobian columns.
    """

    def __init__(self, a: Union[GlrrVector, np.ndarray], w: WeightSpec):
        coeffs = _glrr_coeffs(a)
        if isinstance(w, Identity):
            winv = scipy.sparse.identity(w.n, format="csc")
        elif isinstance(w, BandedWinv):
            winv = w.winv_sparse()
        else:
            raise WeightVariantError(
                "the Gram route needs W⁻¹ in banded form; "
                f"{type(w).__name__} does not provide one"
            )
        n = w.n
        r = coeffs.size - 1
        if n - r < 1:
            raise ValueError("series too short for this GLRR order")
        q = _sparse_q(coeffs, n)
        gram = (q.T @ (winv @ q)).tocsc()
        width = r + getattr(w, "p", 0)
        ab = np.zeros((width + 1, n - r))
        for d in range(width + 1):
            ab[width - d, d:] = gram.diagonal(d)
        try:
            chol = scipy.linalg.cholesky_banded(ab, lower=False)
        except np.linalg.LinAlgError as exc:
            raise GammaBreakdownError(
                f"Γ(a) is numerically indefinite at N={n}: {exc}"
            ) from exc
        self._chol = chol
        self._coeffs = coeffs
        self._w = w
        self.n = n
        self.r = r

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def w(self) -> WeightSpec:
        return self._w

    def solve(self, v: np.ndarray) -> np.ndarray:
        """Γ⁻¹·v through the two triangular banded solves."""
        return scipy.linalg.cho_solve_banded((self._chol, False), v)

    def kernel_projection(self, x: np.ndarray) -> np.ndarray:
        """(I − W⁻¹Q Γ⁻¹ Qᵀ)·x for a vector or columnwise matrix."""
        qtx = apply_q_transpose(self._coeffs, x)
        return x - apply_winv(self._w, apply_q(self._coeffs, self.solve(qtx)))


def project_gamma(
    a: Union[GlrrVector, np.ndarray],
    w: WeightSpec,
    x: Union[TimeSeries, np.ndarray],
    factor: Optional[GammaFactor] = None,
) -> np.ndarray:
    """Π_{Z(a),W}x = (I − W⁻¹Q(a)Γ⁻¹(a)Qᵀ(a))x without forming a basis."""
    rhs = _as_vector_or_batch(x)
    if factor is None:
        factor = GammaFactor(a, w)
    return factor.kernel_projection(rhs)


def vp_jacobian(
    a: Union[GlrrVector, np.ndarray],
    tau: int,
    w: WeightSpec,
    x: Union[TimeSeries, np.ndarray],
    factor: Optional[GammaFactor] = None,
) -> np.ndarray:
    """Jacobian of ȧ ↦ Π_{Z(H_τ(ȧ)),W}x at a = H_τ(ȧ), one column per free
    coefficient.

    Column for the full-vector position j ∈ K(τ) is

        −W⁻¹Q(a)Γ⁻¹Qᵀ(e_j)Πx − Π W⁻¹Q(e_j)Γ⁻¹Qᵀ(a)x,

    where Qᵀ(e_j)v windows v at offset j−1 and Q(e_j)u zero-pads u to that
    window.  All Γ⁻¹ solves reuse one factorization, batched columnwise.
    """
    rhs = _as_vector_or_batch(x)
    if rhs.ndim != 1:
        raise ValueError("the Jacobian is defined for a single series")
    if factor is None:
        factor = GammaFactor(a, w)
    coeffs = factor.coeffs
    w_spec = factor.w
    n = rhs.shape[0]
    r = factor.r
    if not 1 <= tau <= r + 1:
        raise ValueError(f"pivot index {tau} outside 1..{r + 1}")

    g = factor.solve(apply_q_transpose(coeffs, rhs))
    pix = rhs - apply_winv(w_spec, apply_q(coeffs, g))
    positions = [j for j in range(r + 1) if j != tau - 1]

    # first term: window Πx per position, batch-solve, expand through Q(a)
    windows = np.stack([pix[j : j + n - r] for j in positions], axis=1)
    term1 = apply_winv(w_spec, apply_q(coeffs, factor.solve(windows)))

    # second term: zero-padded copies of g through W⁻¹, then the projection
    padded = np.zeros((n, r))
    for col, j in enumerate(positions):
        padded[j : j + n - r, col] = g
    term2 = factor.kernel_projection(apply_winv(w_spec, padded))

    return -term1 - term2
