"""Sine eigenbasis of the Dirichlet Laplacian on (0, 1).

Everything downstream works in the Galerkin space H_N spanned by
``e_k(xi) = sqrt(2) sin(k pi xi)``, k = 1..N.  The Laplacian acts
diagonally, ``A e_k = -lambda_k e_k`` with ``lambda_k = k^2 pi^2 > 0``
(we store the positive magnitudes and keep the sign in the semigroup).
The Burgers nonlinearity is evaluated through closed-form sine-product
coupling coefficients, so its algebraic identities hold to rounding
error instead of aliasing error.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

SQRT2 = float(np.sqrt(2.0))


class SpectralField:
    """Coefficient vector over the sine basis; an element of H_N."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs) -> None:
        arr = np.asarray(coeffs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("coefficient vector must be 1-D and nonempty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficient vector contains NaN or Inf")
        self.coeffs = arr

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    @classmethod
    def zero(cls, n_modes: int) -> "SpectralField":
        return cls(np.zeros(n_modes))

    @classmethod
    def basis(cls, k: int, n_modes: int) -> "SpectralField":
        """The eigenfunction e_k embedded in H_N (requires 1 <= k <= N)."""
        if not 1 <= k <= n_modes:
            raise ValueError(f"basis index {k} outside 1..{n_modes}")
        c = np.zeros(n_modes)
        c[k - 1] = 1.0
        return cls(c)

    def norm(self, s: float = 0.0) -> float:
        return sobolev_norm(self, s)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        if other.n_modes != self.n_modes:
            raise ValueError("fields of different N: project explicitly first")
        return SpectralField(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        if other.n_modes != self.n_modes:
            raise ValueError("fields of different N: project explicitly first")
        return SpectralField(self.coeffs - other.coeffs)

    def __rmul__(self, scalar: float) -> "SpectralField":
        return SpectralField(float(scalar) * self.coeffs)

    def __repr__(self) -> str:
        return f"SpectralField(n_modes={self.n_modes}, l2={self.norm():.6g})"


class SpectralOperator:
    """The (negative) Dirichlet Laplacian truncated to N modes.

    ``eigenvalues[k-1] = lambda_k = k^2 pi^2``; the generator acts as
    ``-lambda_k`` on mode k.
    """

    __slots__ = ("n_modes", "eigenvalues")

    def __init__(self, n_modes: int) -> None:
        if n_modes < 1:
            raise ValueError("need at least one mode")
        self.n_modes = n_modes
        k = np.arange(1, n_modes + 1, dtype=float)
        self.eigenvalues = (k * np.pi) ** 2


def eigenvalue(k: int) -> float:
    """Magnitude of the k-th Laplacian eigenvalue, ``k^2 pi^2``."""
    if k < 1:
        raise ValueError("mode index must be >= 1")
    return float((k * np.pi) ** 2)


def sobolev_norm(x: SpectralField, s: float = 0.0) -> float:
    """Norm of D((-A)^{s/2}): ``(sum_k a_k^2 lambda_k^s)^{1/2}``.

    ``s = 0`` is the L2 norm (Parseval); negative ``s`` is admitted and
    used for the |.|_{-1} bound on the nonlinearity.
    """
    lam = SpectralOperator(x.n_modes).eigenvalues
    if s == 0.0:
        return float(np.linalg.norm(x.coeffs))
    return float(np.sqrt(np.sum(x.coeffs**2 * lam**s)))


def apply_semigroup(x: SpectralField, t: float) -> SpectralField:
    """Heat semigroup e^{tA}: mode-wise damping ``a_k -> exp(-lambda_k t) a_k``."""
    if t < 0:
        raise ValueError("semigroup time must be nonnegative")
    lam = SpectralOperator(x.n_modes).eigenvalues
    return SpectralField(np.exp(-lam * t) * x.coeffs)


def project(x: SpectralField, m_modes: int) -> SpectralField:
    """Orthogonal projection onto H_M: truncate (M < N) or zero-pad (M > N)."""
    if m_modes < 1:
        raise ValueError("projection level must be >= 1")
    n = x.n_modes
    if m_modes <= n:
        return SpectralField(x.coeffs[:m_modes].copy())
    out = np.zeros(m_modes)
    out[:n] = x.coeffs
    return SpectralField(out)


@lru_cache(maxsize=None)
def _coupling_indices(n_modes: int):
    # index matrices for the sine-product selection rules:
    # <e_j e'_k, e_m> couples k = |j - m| (plus) and k = j + m (minus)
    j = np.arange(1, n_modes + 1)
    m = j[:, None]
    idx_abs = np.abs(j[None, :] - m)
    idx_sum = np.minimum(j[None, :] + m, 2 * n_modes + 1)
    return idx_abs, idx_sum


def _weighted_padding(y: np.ndarray) -> np.ndarray:
    # w_k = k y_k, padded so out-of-range gathers read zero
    n = y.size
    wpad = np.zeros(2 * n + 2)
    wpad[1 : n + 1] = np.arange(1, n + 1) * y
    return wpad


def _convection_matrix(y: np.ndarray) -> np.ndarray:
    # matrix M with M[m-1, j-1] = w_{|j-m|} - w_{j+m} where w_k = k y_k;
    # then <x d_xi y, e_m> = (sqrt(2) pi / 2) (M x)_m
    idx_abs, idx_sum = _coupling_indices(y.size)
    wpad = _weighted_padding(y)
    return wpad[idx_abs] - wpad[idx_sum]


def trilinear_b(x: SpectralField, y: SpectralField, z: SpectralField) -> float:
    """The trilinear form ``b(x, y, z) = int_0^1 x (d_xi y) z dxi``, exactly.

    Computed from the closed-form coupling
    ``b(e_j, e_k, e_l) = (sqrt(2) k pi / 2) (1_{k=|j-l|} - 1_{k=j+l})``.
    """
    if not (x.n_modes == y.n_modes == z.n_modes):
        raise ValueError("trilinear form requires all fields at the same N")
    mat = _convection_matrix(y.coeffs)
    return float(SQRT2 * np.pi / 2.0 * (z.coeffs @ (mat @ x.coeffs)))


def burgers_nonlinearity_raw(x: np.ndarray) -> np.ndarray:
    """Galerkin projection of ``x d_xi x`` as a raw coefficient vector."""
    mat = _convection_matrix(x)
    return SQRT2 * np.pi / 2.0 * (mat @ x)


def burgers_nonlinearity(x: SpectralField) -> SpectralField:
    """P_N B(x) with ``B(x) = x d_xi x``; energy neutral: <B(x), x> = 0."""
    return SpectralField(burgers_nonlinearity_raw(x.coeffs))


def evaluate_at(x: SpectralField, points: np.ndarray) -> np.ndarray:
    """Pointwise values ``x(xi) = sum_k a_k sqrt(2) sin(k pi xi)``."""
    return evaluate_at_raw(x.coeffs, np.asarray(points, dtype=float))


def evaluate_at_raw(coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
    k = np.arange(1, coeffs.size + 1)
    return SQRT2 * np.sin(np.outer(points, k * np.pi)) @ coeffs


def evaluate_derivative_at(x: SpectralField, points: np.ndarray) -> np.ndarray:
    """Pointwise values of ``d_xi x``."""
    pts = np.asarray(points, dtype=float)
    k = np.arange(1, x.n_modes + 1)
    return SQRT2 * (np.cos(np.outer(pts, k * np.pi)) * (k * np.pi)) @ x.coeffs


def composite_gauss_legendre(panels: int, nodes: int):
    """Composite Gauss-Legendre rule on [0, 1]: (points, weights)."""
    if panels < 1 or nodes < 1:
        raise ValueError("panels and nodes must be positive")
    xs, ws = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(0.0, 1.0, panels + 1)
    pts = []
    wts = []
    for a, b in zip(edges[:-1], edges[1:]):
        pts.append(0.5 * (b - a) * xs + 0.5 * (a + b))
        wts.append(0.5 * (b - a) * ws)
    return np.concatenate(pts), np.concatenate(wts)


def quadrature_panels_for(n_modes: int, nodes: int = 16) -> int:
    # keep the per-panel phase of the worst 3N-frequency trig product well
    # inside the resolvable range of an `nodes`-point rule
    return max(8, -(-n_modes // 2))


@lru_cache(maxsize=None)
def _projection_rule(n_modes: int):
    # denser than the band-limited minimum: composed nonlinearities such as
    # sin(x(.)) spread energy well beyond 3 N pi for large-amplitude fields
    pts, wts = composite_gauss_legendre(max(8, n_modes), 24)
    k = np.arange(1, n_modes + 1)
    basis = SQRT2 * np.sin(np.outer(pts, k * np.pi))  # (Q, N)
    return pts, wts, basis


def project_pointwise_raw(values: np.ndarray, n_modes: int) -> np.ndarray:
    """Quadrature projection of point values (on the cached rule) onto H_N."""
    _, wts, basis = _projection_rule(n_modes)
    return basis.T @ (wts * values)


def pointwise_quadrature_points(n_modes: int) -> np.ndarray:
    return _projection_rule(n_modes)[0]
