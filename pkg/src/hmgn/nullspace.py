"""Circulant-FFT machinery for orthonormal bases of GLRR nullspaces.

The subspace Z(a) = ker Qᵀ(a) of series satisfying a GLRR admits an
O(rN log N) construction through circulants: the N×N circulant C(ã) built
from the rotated coefficients ã = T_{r+1}(−α)·a is diagonalized by the
unitary DFT, C(ã) = F⁻¹·A_g·F, with eigenvalues g_a evaluated on the
rotated unit-circle grid ω_j = exp(i(2πj/N − α)).  Choosing the rotation α
to keep the grid away from the roots of the coefficient polynomial
g_a(z) = Σ a_{k+1} z^k makes A_g invertible, and a basis of Z(a) falls out
of applying A_g⁻¹ to r fixed Fourier columns.

Two accuracy modes are provided.  The plain mode orthonormalizes
L_r = A_g⁻¹·R_r directly; its subspace error grows with the eigenvalue
spread λ_max/λ_min, which for coefficient polynomials with unit-circle
roots of multiplicity t grows like N^t.  The compensated mode first
computes the triangular orthonormalization O_r = R̂⁻¹ from a QR of L_r,
then re-evaluates the product R_r·O_r as a polynomial in compensated
(error-free-transformation) arithmetic before dividing by the eigenvalues;
this keeps the elementwise error near machine precision regardless of the
spread, because the orthonormalized product has condition number O(1).

The same rotated spectrum also solves the banded system Qᵀ(a)·F̂ = M that
the search-direction computation needs (``fhat_matrix``): extend M by r
zero rows, twist, and apply C(ã)⁻¹ through the FFT.

All FFTs use the unitary convention (1/√N in both directions).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import scipy.linalg

from .errors import BasisRealizationError, SpectrumDegeneracyError
from .series import GlrrVector, TimeSeries, apply_q_transpose, as_time_series, embed

__all__ = [
    "RotatedSpectrum",
    "SubspaceBasis",
    "eval_poly_grid",
    "find_rotation",
    "rotated_spectrum",
    "nullspace_basis",
    "fhat_matrix",
]

_MODES = ("plain", "compensated")

CoeffLike = Union[GlrrVector, Sequence[float], np.ndarray]


def _coeffs(a: CoeffLike) -> np.ndarray:
    """Coefficient array for polynomial evaluation (complex allowed, length ≥ 1)."""
    if isinstance(a, GlrrVector):
        return a.coeffs
    arr = np.asarray(a)
    if arr.dtype.kind not in "fc":
        arr = arr.astype(float)
    arr = arr.reshape(-1)
    if arr.size < 1:
        raise ValueError("empty coefficient vector")
    return arr


def _check_mode(mode: str) -> None:
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")


def _twist(n: int, alpha: float) -> np.ndarray:
    """Diagonal of T_n(α) = diag(1, e^{iα}, …, e^{i(n−1)α})."""
    return np.exp(1j * alpha * np.arange(n))


# ---------------------------------------------------------------------------
# error-free transformations and compensated Horner evaluation
# ---------------------------------------------------------------------------

_SPLITTER = 134217729.0  # 2**27 + 1, Veltkamp splitting constant for doubles


def _two_sum(a, b):
    """s, e with s = fl(a+b) and a + b = s + e exactly (Knuth, branch-free)."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    """p, e with p = fl(a·b) and a·b = p + e exactly (Dekker/Veltkamp)."""
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = al * bl - (((p - ah * bh) - al * bh) - ah * bl)
    return p, e


def _comp_horner(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Compensated Horner evaluation of Σ coeffs[k]·z^k at complex points.

    Maintains an exact-to-first-order error expansion alongside the working
    value: every product and sum is replaced by its error-free transform and
    the rounding terms are accumulated through a plain Horner recurrence.
    The returned value s + e is accurate to ~2 ulp unless the evaluation
    condition number exceeds 1/u² (Compensated Horner scheme; the complex
    product is compensated componentwise).
    """
    coeffs = np.asarray(coeffs)
    zr, zi = np.real(z).astype(float), np.imag(z).astype(float)
    sr = np.full_like(zr, np.real(coeffs[-1]))
    si = np.full_like(zr, np.imag(coeffs[-1]))
    er = np.zeros_like(zr)
    ei = np.zeros_like(zr)
    for k in range(coeffs.size - 2, -1, -1):
        # s·z, componentwise error-free products and sums
        p1, d1 = _two_prod(sr, zr)
        p2, d2 = _two_prod(si, zi)
        p3, d3 = _two_prod(sr, zi)
        p4, d4 = _two_prod(si, zr)
        rp, d5 = _two_sum(p1, -p2)
        ip, d6 = _two_sum(p3, p4)
        # + coefficient
        sr_new, d7 = _two_sum(rp, float(np.real(coeffs[k])))
        si_new, d8 = _two_sum(ip, float(np.imag(coeffs[k])))
        # propagate accumulated error through the same recurrence (plain
        # arithmetic suffices: the error terms are already O(u))
        er_new = er * zr - ei * zi + (d1 - d2 + d5 + d7)
        ei_new = er * zi + ei * zr + (d3 + d4 + d6 + d8)
        sr, si, er, ei = sr_new, si_new, er_new, ei_new
    return (sr + er) + 1j * (si + ei)


def _plain_horner(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    acc = np.full(z.shape, complex(coeffs[-1]))
    for k in range(coeffs.size - 2, -1, -1):
        acc = acc * z + complex(coeffs[k])
    return acc


# ---------------------------------------------------------------------------
# eigenvalue grids and rotation search
# ---------------------------------------------------------------------------


def eval_poly_grid(
    a: CoeffLike, alpha: float, n: int, mode: str = "plain"
) -> np.ndarray:
    """g_a on the rotated grid: value j is g_a(exp(i(2πj/N − α))), j = 0..N−1."""
    _check_mode(mode)
    coeffs = _coeffs(a)
    z = np.exp(1j * (2.0 * np.pi * np.arange(n) / n - alpha))
    if mode == "compensated":
        return _comp_horner(coeffs, z)
    return _plain_horner(coeffs, z)


def _grid_min_abs(coeffs: np.ndarray, base: np.ndarray, alpha: float) -> float:
    """min_j |g_a| over the grid rotated by alpha (plain evaluation)."""
    z = base * np.exp(-1j * alpha)
    return float(np.min(np.abs(_plain_horner(coeffs, z))))


def _golden_max(f, lo: float, hi: float, iters: int = 60) -> float:
    """Golden-section maximization of a unimodal-enough f on [lo, hi]."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = f(x1)
    return x1 if f1 >= f2 else x2


def find_rotation(a: CoeffLike, n: int) -> float:
    """Rotation α₀ ∈ (−π/N, π/N] maximizing min_j |g_a| on the rotated grid.

    A dense scan over 256 equispaced candidates locates the basin, then
    golden-section refinement polishes the maximizer.  The returned rotation
    is guaranteed to keep every grid point away from the polynomial roots
    (minimum strictly positive).
    """
    coeffs = _coeffs(a)
    if n < coeffs.size:
        raise SpectrumDegeneracyError(
            f"grid size {n} smaller than coefficient count {coeffs.size}"
        )
    base = np.exp(2j * np.pi * np.arange(n) / n)
    half = np.pi / n
    step = 2.0 * half / 256.0
    cand = -half + step * np.arange(1, 257)
    vals = np.array([_grid_min_abs(coeffs, base, al) for al in cand])
    best = int(np.argmax(vals))
    if vals[best] <= 0.0:
        raise SpectrumDegeneracyError(
            "every candidate rotation hits a root of the coefficient "
            f"polynomial on the size-{n} grid; is the GLRR order too large "
            "for the series length?"
        )
    alpha = _golden_max(
        lambda al: _grid_min_abs(coeffs, base, al),
        cand[best] - step,
        cand[best] + step,
    )
    # wrap into (−π/N, π/N] (the grid is 2π/N-periodic in the rotation)
    wrapped = np.mod(alpha + half, 2.0 * half)
    alpha = (wrapped if wrapped != 0.0 else 2.0 * half) - half
    if _grid_min_abs(coeffs, base, alpha) <= 0.0:  # pragma: no cover - paranoia
        alpha = cand[best]
    return float(alpha)


@dataclass(frozen=True)
class RotatedSpectrum:
    """Eigenvalues of the rotated circulant C(T_{r+1}(−α₀)·a).

    ``eigenvalues[j] = g_a(exp(i(2πj/N − α₀)))``; all strictly nonzero.
    """

    alpha0: float
    eigenvalues: np.ndarray
    n: int
    r: int

    def __post_init__(self):
        eig = np.asarray(self.eigenvalues, dtype=complex).reshape(-1)
        if eig.size != self.n:
            raise ValueError("eigenvalue count does not match grid size")
        if not np.all(np.isfinite(eig.view(float))):
            raise SpectrumDegeneracyError("non-finite circulant eigenvalues")
        if np.min(np.abs(eig)) == 0.0:
            raise SpectrumDegeneracyError(
                "zero circulant eigenvalue: rotated grid hits a polynomial root"
            )
        eig.flags.writeable = False
        object.__setattr__(self, "eigenvalues", eig)

    @property
    def min_abs_eigenvalue(self) -> float:
        return float(np.min(np.abs(self.eigenvalues)))


def rotated_spectrum(
    a: CoeffLike, n: int, mode: str = "plain", alpha0: Optional[float] = None
) -> RotatedSpectrum:
    """Find (or accept) a rotation and evaluate the circulant eigenvalues."""
    _check_mode(mode)
    coeffs = _coeffs(a)
    if alpha0 is None:
        alpha0 = find_rotation(coeffs, n)
    eig = eval_poly_grid(coeffs, alpha0, n, mode)
    return RotatedSpectrum(float(alpha0), eig, n, coeffs.size - 1)


# ---------------------------------------------------------------------------
# nullspace bases
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis Z (N×r) of Z(a), with realization diagnostics.

    ``defect`` is the relative size σ_{r+1}/σ₁ of the complex-to-real
    realization (0 when the complex basis spanned the complexification of a
    real subspace exactly); ``residual_norm`` is ‖Qᵀ(a)·Z‖_F.
    """

    z: np.ndarray
    defect: float
    residual_norm: float

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        z.flags.writeable = False
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def r(self) -> int:
        return self.z.shape[1]


def _fourier_columns(n: int, r: int) -> np.ndarray:
    """R_r ∈ C^{N×r}: the unitary DFT of the last r standard basis vectors.

    Column j (1-based) is the Fourier mode (1/√N)·exp(i2πk(r+1−j)/N); the
    columns are exactly orthonormal.
    """
    k = np.arange(n)[:, None]
    j = np.arange(1, r + 1)[None, :]
    return np.exp(2j * np.pi * k * (r + 1 - j) / n) / np.sqrt(n)


def _left_singular_block(m: np.ndarray, r: int) -> np.ndarray:
    """Leading r left singular vectors, with a QR fallback if SVD stalls."""
    try:
        u, _, _ = np.linalg.svd(m, full_matrices=False)
        return u[:, :r]
    except np.linalg.LinAlgError:
        q, _ = np.linalg.qr(m)
        return q[:, :r]


def _realize_basis(z_c: np.ndarray, imag_tol: float) -> tuple:
    """Real orthonormal basis from a complex one spanning a conjugation-closed
    subspace.

    Real and imaginary parts of the complex columns all lie in the underlying
    real subspace, so the r leading left singular vectors of [Re Z | Im Z]
    recover it; σ_{r+1}/σ₁ measures how far the complex span was from the
    complexification of any real r-dimensional subspace.
    """
    r = z_c.shape[1]
    stacked = np.concatenate([z_c.real, z_c.imag], axis=1)
    u, s, _ = np.linalg.svd(stacked, full_matrices=False)
    defect = float(s[r] / s[0]) if s[0] > 0 else 0.0
    if defect > imag_tol:
        raise BasisRealizationError(defect, imag_tol)
    return u[:, :r], defect


def nullspace_basis(
    a: CoeffLike,
    n: int,
    mode: str = "plain",
    spectrum: Optional[RotatedSpectrum] = None,
    imag_tol: float = 1e-9,
) -> SubspaceBasis:
    """Orthonormal basis of Z(a) = ker Qᵀ(a) in O(rN log N + Nr²).

    Plain mode orthonormalizes L_r = A_g⁻¹·R_r by an SVD.  Compensated mode
    computes the triangular factor O_r = R̂⁻¹ from a QR of L_r, re-evaluates
    B = R_r·O_r columnwise as the polynomial Σ_j O_r[j,c]·z^{r+1−j} on the
    unrotated grid in compensated arithmetic, and uses U_r = A_g⁻¹·B; this
    removes the λ_max/λ_min error amplification of the plain route.

    ``imag_tol`` bounds the relative defect of the final complex-to-real
    realization; exceeding it raises ``BasisRealizationError`` rather than
    silently truncating imaginary parts.
    """
    _check_mode(mode)
    coeffs = _coeffs(a)
    r = coeffs.size - 1
    if r < 1:
        raise ValueError("GLRR order must be at least 1")
    if not r < n / 2:
        raise ValueError(f"GLRR order r={r} must satisfy r < N/2 (N={n})")
    if spectrum is None:
        spectrum = rotated_spectrum(coeffs, n, mode)
    eig = spectrum.eigenvalues
    r_cols = _fourier_columns(n, r)
    l_mat = r_cols / eig[:, None]

    if mode == "plain":
        u_r = _left_singular_block(l_mat, r)
    else:
        _, rhat = np.linalg.qr(l_mat)
        o_r = scipy.linalg.solve_triangular(rhat, np.eye(r, dtype=complex))
        # column c of R_r·O_r equals (1/√N)·p_c(z_k) on the unrotated grid,
        # with p_c(z) = Σ_j O_r[j,c]·z^{r+1−j}
        z_grid = np.exp(2j * np.pi * np.arange(n) / n)
        b = np.empty((n, r), dtype=complex)
        for c in range(r):
            poly = np.zeros(r + 1, dtype=complex)
            poly[1:] = o_r[::-1, c]  # power m carries O_r[r+1−m, c]
            b[:, c] = _comp_horner(poly, z_grid) / np.sqrt(n)
        u_r = b / eig[:, None]

    z_c = _twist(n, -spectrum.alpha0)[:, None] * np.fft.ifft(
        u_r, axis=0, norm="ortho"
    )
    z, defect = _realize_basis(z_c, imag_tol)
    residual = float(np.linalg.norm(apply_q_transpose(coeffs.real, z)))
    return SubspaceBasis(z, defect, residual)


# ---------------------------------------------------------------------------
# right-hand-side solver for the search direction
# ---------------------------------------------------------------------------


def fhat_matrix(
    a: CoeffLike,
    s: Union[TimeSeries, Sequence[float], np.ndarray],
    tau: int,
    mode: str = "plain",
    spectrum: Optional[RotatedSpectrum] = None,
) -> np.ndarray:
    """Solve Qᵀ(a)·F̂ = M for F̂ ∈ R^{N×r}, M = −(rows K(τ) of T_{r+1}(S))ᵀ.

    The solve extends M by r zero rows, twists by T_{N−r}(α₀), applies the
    inverse rotated circulant through the FFT, and untwists; the real part
    is exact because M and Q(a) are real.
    """
    _check_mode(mode)
    coeffs = _coeffs(a)
    r = coeffs.size - 1
    x = as_time_series(s)
    n = x.n
    if r < 1:
        raise ValueError("GLRR order must be at least 1")
    if not r < n / 2:
        raise ValueError(f"GLRR order r={r} must satisfy r < N/2 (N={n})")
    if not 1 <= tau <= r + 1:
        raise ValueError(f"tau={tau} out of range 1..{r + 1}")
    if spectrum is None:
        spectrum = rotated_spectrum(coeffs, n, mode)

    traj = embed(x, r + 1)  # (r+1)×(N−r)
    keep = [i for i in range(r + 1) if i != tau - 1]  # K(τ), 0-based
    m = -traj[keep, :].T  # (N−r)×r
    m_ext = np.zeros((n, r), dtype=complex)
    m_ext[: n - r, :] = _twist(n - r, spectrum.alpha0)[:, None] * m
    y = np.fft.fft(m_ext, axis=0, norm="ortho") / spectrum.eigenvalues[:, None]
    fhat = _twist(n, -spectrum.alpha0)[:, None] * np.fft.ifft(
        y, axis=0, norm="ortho"
    )
    return np.ascontiguousarray(fhat.real)
