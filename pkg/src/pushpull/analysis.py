"""Linear-rate certificate for Push-Pull on a static topology.

The three monitored errors ``[||xbar - x*||_2, ||X - 1 xbar||_R,
||Y - v ybar||_C]`` obey ``e_{k+1} <= A e_k`` componentwise for a 3x3
nonnegative matrix ``A`` whose entries depend on the step size, the mixing
pair and the contraction norms. :func:`step_size_bound` returns the largest
step for which ``rho(A) < 1`` follows from the determinant test in
:func:`cubic_radius_criterion`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AssumptionViolation,
    DiagonalTooLarge,
    NotIrreducible,
    StepSizeOutOfRange,
    TraceMismatch,
)
from .mixing import MixingPair, check_assumptions
from .norms import NormSystem
from .solver import SolverTrace, fit_rate

GUARD_RTOL = 1e-12
CONTRACTION_SLACK = 1e-8
ROUNDOFF_FLOOR = 1e-14  # absolute allowance, relative to the initial error scale


@dataclass(frozen=True)
class NetworkConstants:
    """Scalars of the mixing pair that enter the transition matrix."""

    n: int
    uv: float
    u_minus_1: float  # ||u - 1||_2
    v_minus_1_R: float  # ||v - 1||_R
    R_norm: float  # ||R||_2
    R_minus_I: float  # ||R - I||_2
    Rv: float  # ||R v||_2
    sigma_R: float
    sigma_C: float
    delta_RC: float
    delta_C2: float

    @classmethod
    def from_parts(cls, mixing: MixingPair, norms: NormSystem) -> "NetworkConstants":
        n = mixing.n
        ones = np.ones(n)
        R = np.asarray(mixing.R)
        return cls(
            n=n,
            uv=mixing.uv,
            u_minus_1=float(np.linalg.norm(mixing.u - ones)),
            v_minus_1_R=norms.norm_R.vector(mixing.v - ones),
            R_norm=float(np.linalg.norm(R, 2)),
            R_minus_I=float(np.linalg.norm(R - np.eye(n), 2)),
            Rv=float(np.linalg.norm(R @ mixing.v)),
            sigma_R=norms.sigma_R,
            sigma_C=norms.sigma_C,
            delta_RC=norms.delta_RC,
            delta_C2=norms.delta_C2,
        )


@dataclass(frozen=True)
class TransitionMatrix:
    a: np.ndarray
    alpha: float
    alpha_prime: float
    rho_A: float
    norm_gamma: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "alpha_prime": self.alpha_prime,
            "rho_A": self.rho_A,
            "A": self.a.tolist(),
            "norm_gamma": list(self.norm_gamma),
        }


def spectral_radius(M) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(M, dtype=float)))))


def transition_entries(k: NetworkConstants, mu: float, L: float, alpha: float) -> np.ndarray:
    n, rn = k.n, math.sqrt(k.n)
    ap = alpha * k.uv / n
    sR, sC = k.sigma_R, k.sigma_C
    return np.array([
        [1 - ap * mu, ap * L / rn, alpha * k.u_minus_1 / n],
        [alpha * sR * k.v_minus_1_R * L, sR * (1 + alpha * k.v_minus_1_R * L / rn), alpha * sR * k.delta_RC],
        [alpha * sC * k.delta_C2 * k.Rv * L ** 2,
         sC * k.delta_C2 * L * (k.R_minus_I + alpha * k.Rv * L / rn),
         sC * (1 + alpha * k.delta_C2 * k.R_norm * L)],
    ])


def build_transition_matrix(mixing: MixingPair, norms: NormSystem, mu: float, L: float,
                            alpha: float) -> TransitionMatrix:
    """Transition matrix at step ``alpha``; requires ``alpha' = alpha u^T v / n <= 2/(mu+L)``."""
    k = NetworkConstants.from_parts(mixing, norms)
    ap = alpha * k.uv / k.n
    if alpha < 0 or ap > 2.0 / (mu + L) * (1 + GUARD_RTOL):
        raise StepSizeOutOfRange(f"alpha'={ap:.6g} exceeds 2/(mu+L)={2 / (mu + L):.6g}")
    a = transition_entries(k, mu, L, alpha)
    a.setflags(write=False)
    return TransitionMatrix(a, float(alpha), float(ap), spectral_radius(a),
                            (norms.norm_R.gamma, norms.norm_C.gamma))


def det_I_minus_A_expanded(a) -> float:
    """``det(I - A)`` through its expansion in the entries of ``A``."""
    a = np.asarray(a)
    (a11, a12, a13), (a21, a22, a23), (a31, a32, a33) = a
    return ((1 - a11) * (1 - a22) * (1 - a33) - a12 * a23 * a31 - a13 * a21 * a32
            - (1 - a22) * a13 * a31 - (1 - a11) * a23 * a32 - (1 - a33) * a12 * a21)


def det_I_minus_A_substituted(k: NetworkConstants, mu: float, L: float, alpha: float) -> float:
    """Same determinant with the entries written out in terms of the network constants."""
    n, rn = k.n, math.sqrt(k.n)
    ap = alpha * k.uv / n
    sR, sC, dRC, dC2 = k.sigma_R, k.sigma_C, k.delta_RC, k.delta_C2
    a = transition_entries(k, mu, L, alpha)
    one_a11, one_a22, one_a33 = 1 - a[0, 0], 1 - a[1, 1], 1 - a[2, 2]
    mix = k.R_minus_I + alpha * k.Rv * L / rn
    return (one_a11 * one_a22 * one_a33
            - ap * alpha ** 2 * sR * sC * dRC * dC2 * k.Rv * L ** 3 / rn
            - alpha ** 2 * sR * sC * dC2 * k.u_minus_1 * k.v_minus_1_R * mix * L ** 2 / n
            - alpha ** 2 * sC * dC2 * k.Rv * k.u_minus_1 * L ** 2 / n * one_a22
            - alpha * sR * sC * dRC * dC2 * L * mix * one_a11
            - ap * alpha * sR * k.v_minus_1_R * L ** 2 / rn * one_a33)


@dataclass(frozen=True)
class StepSizeCertificate:
    c1: float
    c2: float
    c3: float
    alpha_max: float
    binding_term: str
    terms: dict
    norm_gamma: tuple[float, float]
    constants: NetworkConstants
    mu: float
    L: float

    def to_dict(self) -> dict:
        k = self.constants
        return {
            "c1": self.c1,
            "c2": self.c2,
            "c3": self.c3,
            "alpha_max": self.alpha_max,
            "binding_term": self.binding_term,
            "terms": self.terms,
            "norm_gamma": list(self.norm_gamma),
            "mu": self.mu,
            "L": self.L,
            "sigma_R": k.sigma_R,
            "sigma_C": k.sigma_C,
            "delta_RC": k.delta_RC,
            "delta_C2": k.delta_C2,
            "uv": k.uv,
            "norm_u_minus_1": k.u_minus_1,
            "norm_v_minus_1_R": k.v_minus_1_R,
            "norm_R": k.R_norm,
            "norm_R_minus_I": k.R_minus_I,
            "norm_Rv": k.Rv,
        }


def _safe_div(num: float, den: float) -> float:
    return math.inf if den == 0 else num / den


def certificate_constants(k: NetworkConstants, mu: float, L: float) -> tuple[float, float, float]:
    n, rn = k.n, math.sqrt(k.n)
    sR, sC, dRC, dC2 = k.sigma_R, k.sigma_C, k.delta_RC, k.delta_C2
    c1 = (sR * sC * dC2 * k.Rv * L ** 2 / (n * rn)
          * (k.uv * dRC * (L + mu) + k.u_minus_1 * k.v_minus_1_R * L))
    c2 = (sR * sC * dC2 * k.u_minus_1 * k.v_minus_1_R * k.R_minus_I * L ** 2 / n
          + sC * dC2 * k.Rv * k.u_minus_1 * (1 - sR) * L ** 2 / n
          + sR * sC * dRC * dC2 * L * k.R_minus_I * k.uv / n * mu
          + sR * k.v_minus_1_R * L ** 2 / rn * (1 - sC) * k.uv / n)
    c3 = k.uv / (4 * n) * mu * (1 - sR) * (1 - sC)
    return c1, c2, c3


def step_size_bound(mixing: MixingPair, norms: NormSystem, mu: float, L: float) -> StepSizeCertificate:
    """Largest certified step: the minimum of the quadratic-inequality root,
    the two diagonal-margin conditions and the ``alpha'`` guard."""
    report = check_assumptions(mixing.R, mixing.C)
    if not report.passed:
        raise AssumptionViolation(f"assumptions fail: {', '.join(report.failures())}")
    if not 0 < mu <= L:
        raise AssumptionViolation(f"need 0 < mu <= L, got mu={mu}, L={L}")
    k = NetworkConstants.from_parts(mixing, norms)
    c1, c2, c3 = certificate_constants(k, mu, L)
    terms = {
        "quadratic": _safe_div(2 * c3, c2 + math.sqrt(c2 ** 2 + 4 * c1 * c3)),
        "tracking": _safe_div(1 - k.sigma_C, 2 * k.sigma_C * k.delta_C2 * k.R_norm * L),
        "consensus": _safe_div((1 - k.sigma_R) * math.sqrt(k.n), 2 * k.sigma_R * k.v_minus_1_R * L),
        "alpha_prime_guard": 2.0 / (mu + L) * k.n / k.uv,
    }
    binding = min(terms, key=terms.get)
    return StepSizeCertificate(c1, c2, c3, terms[binding], binding, terms,
                               (norms.norm_R.gamma, norms.norm_C.gamma), k, mu, L)


def _irreducible(M: np.ndarray) -> bool:
    n = M.shape[0]
    pattern = (M > 0).astype(float) + np.eye(n)
    return bool(np.all(np.linalg.matrix_power(pattern, n - 1) > 0))


def det3(M) -> float:
    (a, b, c), (d, e, f), (g, h, i) = np.asarray(M, dtype=float)
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def cubic_radius_criterion(M, lambda_star: float) -> bool:
    """``rho(M) < lambda_star`` decided by the sign of ``det(lambda_star I - M)``.

    Valid for nonnegative irreducible 3x3 ``M`` whose diagonal lies below
    ``lambda_star``.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3) or np.any(M < 0):
        raise ValueError("expected a nonnegative 3x3 matrix")
    if not lambda_star > 0:
        raise ValueError("lambda_star must be positive")
    if not _irreducible(M):
        raise NotIrreducible("(I + M)^2 has a zero entry")
    if np.any(np.diag(M) >= lambda_star):
        raise DiagonalTooLarge(f"diagonal {np.diag(M)} not below {lambda_star}")
    return det3(lambda_star * np.eye(3) - M) > 0


@dataclass(frozen=True)
class Lemma7Report:
    steps_checked: int
    violations: int
    worst_excess: float  # max over k, i of lhs / rhs - 1
    floor: float
    empirical_rate: float
    rho_A: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_lemma7_along_trace(trace: SolverTrace, A: TransitionMatrix, slack: float = CONTRACTION_SLACK) -> Lemma7Report:
    """Check ``e_{k+1} <= A e_k`` at every recorded step of a static Push-Pull run.

    A step counts as a violation when ``lhs > rhs (1 + slack) + floor`` with
    ``floor = 1e-14 * max(e_0)``. The floor only matters when an entry of
    ``A e_k`` is exactly zero (e.g. a rank-one mixing matrix), where the
    monitored error sits at rounding level instead.
    """
    if not trace.static or trace.variant != "push_pull":
        raise TraceMismatch("needs a static-topology push_pull trace")
    if not math.isclose(trace.alpha, A.alpha, rel_tol=1e-14, abs_tol=0.0):
        raise TraceMismatch(f"trace alpha {trace.alpha!r} differs from matrix alpha {A.alpha!r}")
    gammas = getattr(trace, "norm_gamma", None)
    if gammas is not None and not np.allclose(gammas, A.norm_gamma, rtol=1e-14, atol=0.0):
        raise TraceMismatch("trace and matrix use different contraction norms")
    e = trace.composite()
    if len(e) < 2:
        raise TraceMismatch("trace too short")
    rhs = e[:-1] @ np.asarray(A.a).T
    lhs = e[1:]
    floor = ROUNDOFF_FLOOR * float(np.max(e[0]))
    bad = lhs > rhs * (1 + slack) + floor
    with np.errstate(divide="ignore", invalid="ignore"):
        excess = np.where(rhs > 0, lhs / rhs - 1, np.where(lhs > 0, np.inf, -1.0))
    rate = fit_rate(np.linalg.norm(e, axis=1))
    return Lemma7Report(len(lhs), int(bad.sum()), float(excess.max()), floor, rate, A.rho_A)


def small_alpha_rate_check(mixing: MixingPair, norms: NormSystem, mu: float, L: float) -> dict:
    """Compare ``1 - rho_A`` with ``alpha' mu`` at two small fractions of the certified step."""
    cert = step_size_bound(mixing, norms, mu, L)
    out = {"alpha_max": cert.alpha_max}
    for div in (10, 100):
        A = build_transition_matrix(mixing, norms, mu, L, cert.alpha_max / div)
        out[f"ratio_{div}"] = (1 - A.rho_A) / (A.alpha_prime * mu)
        out[f"rho_A_{div}"] = A.rho_A
    return out
