"""Weight matrices for weighted least-squares (semi)norms on series space.

The objective ‖x‖²_W = xᵀWx is evaluated through factors rather than dense
matrices.  Four representations cover the use cases of this package:

* ``Identity`` — W = I.
* ``BandedW`` — W is banded SPD and stored through its upper-triangular
  banded Cholesky factor C with p+1 diagonals, W = CᵀC.  The inverse
  autocovariance matrix of a stationary AR(p) process has this form.
* ``BandedWinv`` — the *inverse* of W is banded SPD; stored through the
  upper Cholesky factor Ĉ of W⁻¹ = ĈᵀĈ.  Applying W then costs two banded
  triangular solves.
* ``Masked`` — W = U·W₀·U with U = diag(mask): rows/columns at unobserved
  positions are zeroed, giving a seminorm that ignores missing entries.
  The effective factor is C₀·U, still banded with the same bandwidth.

Banded factors are stored by diagonals: ``bands[d][i] = C[i, i+d]`` for
d = 0..p, so ``bands[d]`` has length n−d.  All operations run in O(n·p).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Union

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import WeightVariantError

__all__ = [
    "WeightSpec",
    "Identity",
    "BandedW",
    "BandedWinv",
    "Masked",
    "ar_inverse_covariance",
    "banded_w_from_w_bands",
    "banded_winv_from_winv_bands",
    "mask_missing",
    "apply_w",
    "apply_c",
    "solve_chat_t",
    "whiten",
    "weighted_norm",
]

Bands = Sequence[np.ndarray]


# ---------------------------------------------------------------------------
# banded-storage helpers
# ---------------------------------------------------------------------------


def _freeze_bands(bands: Bands, n: int) -> tuple:
    out = []
    for d, band in enumerate(bands):
        band = np.asarray(band, dtype=float).reshape(-1)
        if band.size != n - d:
            raise ValueError(
                f"band {d} has length {band.size}, expected {n - d} for dimension {n}"
            )
        band = band.copy()
        band.flags.writeable = False
        out.append(band)
    return tuple(out)


def _bands_to_ab_upper(bands: Bands, n: int) -> np.ndarray:
    """Upper banded storage used by scipy: ab[p−d, j] = M[j−d, j]."""
    p = len(bands) - 1
    ab = np.zeros((p + 1, n))
    for d, band in enumerate(bands):
        ab[p - d, d:] = band
    return ab


def _bands_to_ab_lower_t(bands: Bands, n: int) -> np.ndarray:
    """Lower banded storage of the TRANSPOSE: ab[d, j] = Mᵀ[j+d, j] = M[j, j+d]."""
    p = len(bands) - 1
    ab = np.zeros((p + 1, n))
    for d, band in enumerate(bands):
        ab[d, : n - d] = band
    return ab


def _ab_upper_to_bands(ab: np.ndarray) -> List[np.ndarray]:
    p = ab.shape[0] - 1
    return [ab[p - d, d:].copy() for d in range(p + 1)]


def _bands_to_dense(bands: Bands, n: int) -> np.ndarray:
    m = np.zeros((n, n))
    for d, band in enumerate(bands):
        m += np.diag(band, k=d)
    return m


def _mul_upper(bands: Bands, x: np.ndarray) -> np.ndarray:
    """M·x for upper-triangular banded M (vector or columnwise matrix x)."""
    n = x.shape[0]
    out = np.zeros_like(x, dtype=float)
    for d, band in enumerate(bands):
        b = band if x.ndim == 1 else band[:, None]
        out[: n - d] += b * x[d:]
    return out


def _mul_upper_t(bands: Bands, x: np.ndarray) -> np.ndarray:
    """Mᵀ·x for upper-triangular banded M."""
    n = x.shape[0]
    out = np.zeros_like(x, dtype=float)
    for d, band in enumerate(bands):
        b = band if x.ndim == 1 else band[:, None]
        out[d:] += b * x[: n - d]
    return out


def _chol_banded_or_raise(w_bands: Bands, n: int, what: str) -> List[np.ndarray]:
    ab = _bands_to_ab_upper(w_bands, n)
    try:
        c_ab = scipy.linalg.cholesky_banded(ab, lower=False)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"{what} is not positive definite: {exc}") from exc
    return _ab_upper_to_bands(c_ab)


# ---------------------------------------------------------------------------
# weight representations
# ---------------------------------------------------------------------------


class WeightSpec:
    """Base class; see module docstring for the four variants."""

    n: int

    def to_dense(self) -> np.ndarray:
        """Dense W, for small-n verification only."""
        raise NotImplementedError


@dataclass(frozen=True)
class Identity(WeightSpec):
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")

    def to_dense(self) -> np.ndarray:
        return np.eye(self.n)


@dataclass(frozen=True)
class BandedW(WeightSpec):
    """W = CᵀC with banded upper-triangular C (bands[d][i] = C[i, i+d])."""

    n: int
    c_bands: tuple

    def __post_init__(self):
        object.__setattr__(self, "c_bands", _freeze_bands(self.c_bands, self.n))

    @property
    def p(self) -> int:
        return len(self.c_bands) - 1

    def to_dense(self) -> np.ndarray:
        c = _bands_to_dense(self.c_bands, self.n)
        return c.T @ c


@dataclass(frozen=True)
class BandedWinv(WeightSpec):
    """W⁻¹ = ĈᵀĈ with banded upper-triangular Ĉ (bands[d][i] = Ĉ[i, i+d])."""

    n: int
    chat_bands: tuple

    def __post_init__(self):
        bands = _freeze_bands(self.chat_bands, self.n)
        if np.any(bands[0] == 0.0):
            raise ValueError("factor of W⁻¹ must be nonsingular")
        object.__setattr__(self, "chat_bands", bands)

    @property
    def p(self) -> int:
        return len(self.chat_bands) - 1

    def winv_sparse(self) -> scipy.sparse.csc_matrix:
        """W⁻¹ = ĈᵀĈ as a sparse matrix (used by Gram-matrix assembly)."""
        chat = scipy.sparse.diags(
            self.chat_bands, offsets=list(range(self.p + 1)), format="csr"
        )
        return (chat.T @ chat).tocsc()

    def to_dense(self) -> np.ndarray:
        chat = _bands_to_dense(self.chat_bands, self.n)
        return np.linalg.inv(chat.T @ chat)


@dataclass(frozen=True)
class Masked(WeightSpec):
    """W = U·W₀·U, U = diag(mask); a seminorm ignoring unobserved entries."""

    inner: WeightSpec
    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool).reshape(-1)
        if mask.size != self.inner.n:
            raise ValueError(
                f"mask length {mask.size} does not match dimension {self.inner.n}"
            )
        if isinstance(self.inner, BandedWinv):
            raise WeightVariantError(
                "masking needs an explicit factor of W; a banded-inverse "
                "representation cannot be masked"
            )
        mask = mask.copy()
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)

    @property
    def n(self) -> int:  # type: ignore[override]
        return self.inner.n

    def to_dense(self) -> np.ndarray:
        u = self.mask.astype(float)
        return u[:, None] * self.inner.to_dense() * u[None, :]


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def ar_inverse_covariance(
    phi: Sequence[float], sigma2: float, n: int
) -> WeightSpec:
    """Inverse autocovariance matrix of a stationary AR(p) process, factored.

    For the process s_t = Σ_k φ_k s_{t−k} + ε_t with innovation variance σ²,
    the inverse of the n×n autocovariance matrix Σ is (2p+1)-diagonal.  It is
    assembled exactly from the innovations representation W = AᵀA/σ², where A
    carries the prediction-error filter (−φ_p, …, −φ_1, 1) in rows p+1..n and
    whitens the initial p-block through the Cholesky factor of Σ_p⁻¹, then
    Cholesky-factored in banded form.

    Returns Identity for p = 0, σ² = 1; otherwise a BandedW.
    """
    phi = np.asarray(phi, dtype=float).reshape(-1)
    p = phi.size
    if n <= p:
        raise ValueError(f"series length n={n} must exceed the AR order p={p}")
    if not np.isfinite(sigma2) or sigma2 <= 0:
        raise ValueError(f"innovation variance must be positive, got {sigma2}")
    if p == 0:
        if sigma2 == 1.0:
            return Identity(n)
        return BandedW(n, (np.full(n, 1.0 / np.sqrt(sigma2)),))

    # characteristic roots of z^p − φ₁ z^{p−1} − … − φ_p must lie inside the
    # unit circle for stationarity
    roots = np.roots(np.concatenate(([1.0], -phi)))
    if roots.size and np.max(np.abs(roots)) >= 1.0 - 1e-10:
        raise ValueError(f"AR coefficients {phi.tolist()} are not stationary")

    # exact covariance of the initial state (s_p, …, s_1) via the discrete
    # Lyapunov equation of the companion form
    companion = np.zeros((p, p))
    companion[0, :] = phi
    if p > 1:
        companion[1:, :-1] = np.eye(p - 1)
    g = np.zeros((p, p))
    g[0, 0] = sigma2
    sigma_p = scipy.linalg.solve_discrete_lyapunov(companion, g)
    sigma_p = 0.5 * (sigma_p + sigma_p.T)

    boundary = np.sqrt(sigma2) * np.linalg.cholesky(np.linalg.inv(sigma_p)).T

    a = scipy.sparse.lil_matrix((n, n))
    a[:p, :p] = boundary
    filt = np.concatenate((-phi[::-1], [1.0]))
    for t in range(p, n):
        a[t, t - p : t + 1] = filt
    a = a.tocsr()
    w = (a.T @ a) / sigma2

    w_bands = [np.asarray(w.diagonal(d)).reshape(-1) for d in range(p + 1)]
    c_bands = _chol_banded_or_raise(w_bands, n, "AR inverse covariance")
    return BandedW(n, tuple(c_bands))


def banded_w_from_w_bands(w_bands: Bands) -> BandedW:
    """BandedW from the upper bands of an SPD W itself (bands[d][i] = W[i,i+d])."""
    n = np.asarray(w_bands[0]).size
    return BandedW(n, tuple(_chol_banded_or_raise(w_bands, n, "weight matrix")))


def banded_winv_from_winv_bands(winv_bands: Bands) -> BandedWinv:
    """BandedWinv from the upper bands of an SPD W⁻¹ (bands[d][i] = W⁻¹[i,i+d])."""
    n = np.asarray(winv_bands[0]).size
    return BandedWinv(
        n, tuple(_chol_banded_or_raise(winv_bands, n, "inverse weight matrix"))
    )


def mask_missing(w0: WeightSpec, mask: Sequence[bool]) -> Masked:
    """Masked variant of w0: W = U·W₀·U with U = diag(mask).

    Nested masking composes: masking a Masked weight intersects the masks.
    """
    if isinstance(w0, Masked):
        combined = w0.mask & np.asarray(mask, dtype=bool).reshape(-1)
        return Masked(w0.inner, combined)
    return Masked(w0, np.asarray(mask, dtype=bool))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def _check_dim(w: WeightSpec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != w.n:
        raise ValueError(f"vector length {x.shape[0]} does not match dimension {w.n}")
    return x


def apply_c(w: WeightSpec, x: np.ndarray) -> np.ndarray:
    """C·x for the (effective) factor C with W = CᵀC.

    Identity → x; BandedW → banded product; Masked → C₀·(mask∘x).  The
    banded-inverse variant carries no factor of W and is rejected.
    """
    x = _check_dim(w, x)
    if isinstance(w, Identity):
        return x.copy()
    if isinstance(w, BandedW):
        return _mul_upper(w.c_bands, x)
    if isinstance(w, Masked):
        m = w.mask if x.ndim == 1 else w.mask[:, None]
        return apply_c(w.inner, np.where(m, x, 0.0))
    raise WeightVariantError(
        f"no explicit factor of W available for {type(w).__name__}"
    )


def solve_chat_t(w: WeightSpec, x: np.ndarray) -> np.ndarray:
    """(Ĉᵀ)⁻¹·x through a banded lower-triangular solve.

    Defined for the banded-inverse variant (and trivially for Identity).
    """
    x = _check_dim(w, x)
    if isinstance(w, Identity):
        return x.copy()
    if isinstance(w, BandedWinv):
        ab = _bands_to_ab_lower_t(w.chat_bands, w.n)
        return scipy.linalg.solve_banded((w.p, 0), ab, x)
    raise WeightVariantError(
        f"no factor of W⁻¹ available for {type(w).__name__}"
    )


def _solve_chat(w: BandedWinv, x: np.ndarray) -> np.ndarray:
    """Ĉ⁻¹·x (upper-triangular banded solve)."""
    ab = _bands_to_ab_upper(w.chat_bands, w.n)
    return scipy.linalg.solve_banded((0, w.p), ab, x)


def apply_w(w: WeightSpec, x: np.ndarray) -> np.ndarray:
    """W·x in O(n·p) for every variant (vector or columnwise matrix x)."""
    x = _check_dim(w, x)
    if isinstance(w, Identity):
        return x.copy()
    if isinstance(w, BandedW):
        return _mul_upper_t(w.c_bands, _mul_upper(w.c_bands, x))
    if isinstance(w, BandedWinv):
        # W = (ĈᵀĈ)⁻¹ = Ĉ⁻¹·Ĉ⁻ᵀ: two banded triangular solves
        return _solve_chat(w, solve_chat_t(w, x))
    if isinstance(w, Masked):
        m = w.mask if x.ndim == 1 else w.mask[:, None]
        inner = apply_w(w.inner, np.where(m, x, 0.0))
        return np.where(m, inner, 0.0)
    raise WeightVariantError(f"unknown weight variant {type(w).__name__}")


def apply_winv(w: WeightSpec, x: np.ndarray) -> np.ndarray:
    """W⁻¹·x where the inverse is available in banded form.

    Identity → x; BandedWinv → ĈᵀĈ·x.  Other variants have no cheap inverse
    and are rejected.
    """
    x = _check_dim(w, x)
    if isinstance(w, Identity):
        return x.copy()
    if isinstance(w, BandedWinv):
        return _mul_upper_t(w.chat_bands, _mul_upper(w.chat_bands, x))
    raise WeightVariantError(
        f"no banded inverse of W available for {type(w).__name__}"
    )


def whiten(w: WeightSpec, x: np.ndarray) -> np.ndarray:
    """y with ‖y‖₂ = ‖x‖_W: C·x where a factor of W exists, (Ĉᵀ)⁻¹·x otherwise."""
    if isinstance(w, BandedWinv):
        return solve_chat_t(w, x)
    return apply_c(w, x)


def weighted_norm(w: WeightSpec, x: np.ndarray) -> float:
    """√(xᵀWx), computed through the factor for conditioning."""
    y = whiten(w, x)
    return float(np.linalg.norm(y))
