"""Weighted ellipsoidal norms with certified contraction factors.

A :class:`WeightedNorm` is ``||w||_P = sqrt(w^T P w)`` for an SPD ``P``
with ``P >= I``. Built from a residual mixing matrix ``B`` and a target
``gamma > rho(B)``, ``P`` solves the Stein equation

    (B / gamma)^T P (B / gamma) - P = -I,

and the induced norm of ``B`` is then exactly
``gamma * sqrt(1 - 1 / lambda_max(P))``. Matrices of shape ``(n, p)`` are
measured column by column and the ``p`` column norms combined in 2-norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericalFailure, SpectralRadiusTooLarge
from .mixing import MixingPair

KRON_LIMIT = 64
DEFAULT_GAMMA_FRACTION = 0.25


@dataclass(frozen=True)
class WeightedNorm:
    P: np.ndarray
    sigma: float
    gamma: float

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def __call__(self, X) -> float:
        return block_norm(X, self)

    def vector(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return float(np.sqrt(max(w @ self.P @ w, 0.0)))


def default_gamma(rho: float, fraction: float = DEFAULT_GAMMA_FRACTION) -> float:
    return rho + fraction * (1.0 - rho)


def _solve_stein(A: np.ndarray) -> np.ndarray:
    """``P = I + A^T P A`` for ``rho(A) < 1``."""
    n = A.shape[0]
    eye = np.eye(n)
    if n <= KRON_LIMIT:
        K = np.eye(n * n) - np.kron(A.T, A.T)
        P = np.linalg.solve(K, eye.reshape(-1)).reshape(n, n)
    else:
        # Smith doubling: P = sum_k (A^T)^k A^k, squaring the terms each pass
        P = eye.copy()
        Ak = A.copy()
        for _ in range(200):
            step = Ak.T @ P @ Ak
            P = P + step
            Ak = Ak @ Ak
            if np.max(np.abs(step)) <= 1e-16 * np.max(np.abs(P)):
                break
    return 0.5 * (P + P.T)


def build_contraction_norm(B: np.ndarray, gamma: float) -> WeightedNorm:
    """Norm under which ``B`` contracts by a certified ``sigma < gamma``."""
    B = np.asarray(B, dtype=float)
    rho = float(np.max(np.abs(np.linalg.eigvals(B)))) if B.size else 0.0
    if not gamma < 1.0:
        raise SpectralRadiusTooLarge(f"gamma={gamma} must be below 1")
    if rho >= gamma:
        raise SpectralRadiusTooLarge(f"rho(B)={rho:.6g} is not below gamma={gamma:.6g}")
    A = B / gamma
    P = _solve_stein(A)
    n = B.shape[0]
    resid = np.max(np.abs(A.T @ P @ A - P + np.eye(n)))
    if not np.isfinite(resid) or resid > 1e-9 * max(1.0, np.max(np.abs(P))):
        raise NumericalFailure(f"Stein equation residual {resid:.3g}")
    lam_max = float(np.linalg.eigvalsh(P)[-1])
    sigma = gamma * np.sqrt(max(0.0, 1.0 - 1.0 / lam_max))
    P.setflags(write=False)
    return WeightedNorm(P, float(sigma), float(gamma))


def block_norm(X, norm: WeightedNorm | None = None) -> float:
    """Column-wise norm of ``X`` (vector or ``(n, p)``) lifted by the 2-norm.

    ``norm=None`` means the plain Euclidean norm on each column.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if norm is None:
        cols = np.sqrt(np.sum(X * X, axis=0))
    else:
        if X.shape[0] != norm.n:
            raise ValueError(f"expected {norm.n} rows, got {X.shape[0]}")
        cols = np.sqrt(np.maximum(np.einsum("ij,ik,kj->j", X, norm.P, X), 0.0))
    return float(np.linalg.norm(cols))


def induced_matrix_norm(W: np.ndarray, norm: WeightedNorm | None = None) -> float:
    """``sup ||W x||_P / ||x||_P`` via the generalized eigenproblem ``(W^T P W, P)``."""
    W = np.asarray(W, dtype=float)
    if norm is None:
        return float(np.linalg.norm(W, 2))
    P = norm.P
    try:
        lam = scipy.linalg.eigh(W.T @ P @ W, P, eigvals_only=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalFailure(str(exc)) from exc
    return float(np.sqrt(max(lam[-1], 0.0)))


def _ratio_bound(P_num: np.ndarray, P_den: np.ndarray) -> float:
    # sup x^T P_num x / x^T P_den x
    try:
        lam = scipy.linalg.eigh(P_num, P_den, eigvals_only=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalFailure(str(exc)) from exc
    return float(np.sqrt(lam[-1]))


def equivalence_constants(norm_R: WeightedNorm, norm_C: WeightedNorm) -> tuple[float, float, float, float]:
    """Tight ``(delta_CR, delta_C2, delta_RC, delta_R2)``.

    ``||x||_C <= delta_CR ||x||_R``, ``||x||_C <= delta_C2 ||x||_2``,
    ``||x||_R <= delta_RC ||x||_C``, ``||x||_R <= delta_R2 ||x||_2``.
    """
    if norm_R.n != norm_C.n:
        raise ValueError("norms act on different dimensions")
    eye = np.eye(norm_R.n)
    return (
        _ratio_bound(norm_C.P, norm_R.P),
        _ratio_bound(norm_C.P, eye),
        _ratio_bound(norm_R.P, norm_C.P),
        _ratio_bound(norm_R.P, eye),
    )


@dataclass(frozen=True)
class NormSystem:
    norm_R: WeightedNorm
    norm_C: WeightedNorm
    delta_CR: float
    delta_C2: float
    delta_RC: float
    delta_R2: float

    @property
    def sigma_R(self) -> float:
        return self.norm_R.sigma

    @property
    def sigma_C(self) -> float:
        return self.norm_C.sigma

    @classmethod
    def for_mixing(cls, mixing: MixingPair, gamma_fraction: float = DEFAULT_GAMMA_FRACTION) -> "NormSystem":
        norm_R = build_contraction_norm(mixing.B_R, default_gamma(mixing.rho_R, gamma_fraction))
        norm_C = build_contraction_norm(mixing.B_C, default_gamma(mixing.rho_C, gamma_fraction))
        return cls(norm_R, norm_C, *equivalence_constants(norm_R, norm_C))

    def summary(self) -> dict:
        return {
            "gamma_R": self.norm_R.gamma,
            "gamma_C": self.norm_C.gamma,
            "sigma_R": self.sigma_R,
            "sigma_C": self.sigma_C,
            "delta_CR": self.delta_CR,
            "delta_C2": self.delta_C2,
            "delta_RC": self.delta_RC,
            "delta_R2": self.delta_R2,
        }
