"""Strongly convex, smooth agent objectives and their global optimum.

Two families: quadratics ``f(x) = 1/2 x^T A x - b^T x`` and a regularized
Huber loss ``f(x) = sum_d h(x_d - c_d) + reg_mu/2 ||x - c||^2``. Plain Huber
has linear tails and is not strongly convex; the regularizer restores it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GenerationFailure, NonConvergence, ShapeMismatch, SingularSystem

NEWTON_BUDGET = 1000
NEWTON_TOL = 1e-13


@dataclass(frozen=True)
class QuadraticAgent:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape != (b.size, b.size):
            raise ShapeMismatch(f"A {A.shape} does not match b of length {b.size}")
        if np.max(np.abs(A - A.T), initial=0.0) > 1e-12:
            raise ValueError("A must be symmetric")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.A @ x - self.b @ x)

    def gradient(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=float) - self.b

    def hessian(self, x) -> np.ndarray:
        return self.A

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist()}


@dataclass(frozen=True)
class HuberAgent:
    center: np.ndarray
    huber_delta: float = 1.0
    reg_mu: float = 0.1

    def __post_init__(self):
        if self.huber_delta <= 0 or self.reg_mu <= 0:
            raise ValueError("huber_delta and reg_mu must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(-1))

    def value(self, x) -> float:
        t = np.asarray(x, dtype=float) - self.center
        a = np.abs(t)
        d = self.huber_delta
        h = np.where(a <= d, 0.5 * t * t, d * (a - 0.5 * d))
        return float(h.sum() + 0.5 * self.reg_mu * (t @ t))

    def gradient(self, x) -> np.ndarray:
        t = np.asarray(x, dtype=float) - self.center
        return np.clip(t, -self.huber_delta, self.huber_delta) + self.reg_mu * t

    def hessian(self, x) -> np.ndarray:
        t = np.asarray(x, dtype=float) - self.center
        return np.diag((np.abs(t) <= self.huber_delta).astype(float) + self.reg_mu)

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "huber_delta": self.huber_delta, "reg_mu": self.reg_mu}


@dataclass(frozen=True)
class ObjectiveEnsemble:
    """``n`` agents sharing strong-convexity ``mu`` and smoothness ``L``."""

    agents: tuple
    mu: float
    L: float
    family: str = "custom"
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if not self.agents:
            raise ValueError("ensemble needs at least one agent")
        if not 0 < self.mu <= self.L:
            raise ValueError(f"need 0 < mu <= L, got mu={self.mu}, L={self.L}")
        dims = {self._dim(a) for a in self.agents}
        if len(dims) != 1:
            raise ShapeMismatch(f"agents disagree on dimension: {sorted(dims)}")

    @staticmethod
    def _dim(agent) -> int:
        return agent.b.size if isinstance(agent, QuadraticAgent) else agent.center.size

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def p(self) -> int:
        return self._dim(self.agents[0])

    def value(self, x) -> float:
        return sum(a.value(x) for a in self.agents)

    def total_gradient(self, x) -> np.ndarray:
        return sum(a.gradient(x) for a in self.agents)

    def stacked_gradient(self, X) -> np.ndarray:
        """Row ``i`` is the gradient of agent ``i`` at row ``i`` of ``X``."""
        X = np.asarray(X, dtype=float)
        if X.shape != (self.n, self.p):
            raise ShapeMismatch(f"expected ({self.n}, {self.p}), got {X.shape}")
        return np.stack([a.gradient(x) for a, x in zip(self.agents, X)])

    def global_optimum(self) -> np.ndarray:
        return global_optimum(self)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "seed": self.seed,
            "mu": self.mu,
            "L": self.L,
            "agents": [a.to_dict() for a in self.agents],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ObjectiveEnsemble":
        agents = []
        for spec in data["agents"]:
            if "A" in spec:
                agents.append(QuadraticAgent(np.array(spec["A"]), np.array(spec["b"])))
            else:
                agents.append(HuberAgent(np.array(spec["center"]), spec["huber_delta"], spec["reg_mu"]))
        return cls(tuple(agents), data["mu"], data["L"], data.get("family", "custom"), data.get("seed"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "ObjectiveEnsemble":
        return cls.from_dict(json.loads(Path(path).read_text()))


def stacked_gradient(ensemble: ObjectiveEnsemble, X) -> np.ndarray:
    return ensemble.stacked_gradient(X)


def global_optimum(ensemble: ObjectiveEnsemble) -> np.ndarray:
    """Minimizer of the summed objective.

    Quadratics are solved in closed form; anything else goes through a
    damped Newton method with backtracking on the summed objective.
    """
    agents = ensemble.agents
    if all(isinstance(a, QuadraticAgent) for a in agents):
        A = sum(a.A for a in agents)
        b = sum(a.b for a in agents)
        if np.linalg.matrix_rank(A) < A.shape[0]:
            raise SingularSystem("summed Hessian is singular")
        return np.linalg.solve(A, b)

    if all(isinstance(a, HuberAgent) for a in agents):
        x = np.mean([a.center for a in agents], axis=0)
    else:
        x = np.zeros(ensemble.p)
    for _ in range(NEWTON_BUDGET):
        g = ensemble.total_gradient(x)
        if np.linalg.norm(g) <= NEWTON_TOL:
            return x
        H = sum(a.hessian(x) for a in agents)
        step = np.linalg.solve(H, g)
        f0 = ensemble.value(x)
        t = 1.0
        while t > 1e-12 and ensemble.value(x - t * step) > f0 - 1e-4 * t * (g @ step):
            t *= 0.5
        x_new = x - t * step
        if np.array_equal(x_new, x):
            # stalled at rounding level; accept if the gradient is already tiny
            if np.linalg.norm(g) <= 10 * NEWTON_TOL:
                return x
            break
        x = x_new
    raise NonConvergence(f"Newton did not reach gradient norm {NEWTON_TOL}")


def make_quadratic_ensemble(n: int, p: int, seed: int, mu: float = 1.0, L: float = 4.0) -> ObjectiveEnsemble:
    """Random quadratics whose Hessian spectra lie in ``[mu, L]``.

    Each agent gets ``Q diag(eigs) Q^T`` with a random orthogonal ``Q``; the
    first agent's spectrum contains both endpoints so the certified constants
    are tight.
    """
    rng = np.random.default_rng(seed)
    agents = []
    for i in range(n):
        Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
        eigs = rng.uniform(mu, L, size=p)
        if i == 0:
            eigs[0] = mu
            if p > 1:
                eigs[-1] = L
        A = Q @ np.diag(eigs) @ Q.T
        A = 0.5 * (A + A.T)
        b = rng.normal(0.0, 2.0, size=p)
        agents.append(QuadraticAgent(A, b))
    lam = [np.linalg.eigvalsh(a.A) for a in agents]
    mu_c = float(min(l[0] for l in lam))
    L_c = float(max(l[-1] for l in lam))
    return ObjectiveEnsemble(tuple(agents), mu_c, L_c, "quadratic", seed)


def huber_zone_conditions(ensemble: ObjectiveEnsemble, x_star: np.ndarray) -> tuple[bool, bool]:
    """``(optimum in every quadratic zone, origin outside at least one zone)``."""
    at_star = all(np.all(np.abs(x_star - a.center) <= a.huber_delta) for a in ensemble.agents)
    origin_out = any(np.any(np.abs(a.center) > a.huber_delta) for a in ensemble.agents)
    return at_star, origin_out


def make_huber_ensemble(
    n: int, p: int, seed: int, huber_delta: float = 1.0, reg_mu: float = 0.1, max_attempts: int = 100
) -> ObjectiveEnsemble:
    """Regularized Huber agents with the optimum inside every quadratic zone
    and the origin outside at least one of them.

    Centres scatter within ``huber_delta / 2`` of a random anchor placed a few
    thresholds away from the origin; both zone conditions are re-verified on
    the computed optimum and the draw is repeated if either fails.
    """
    if n < 1 or p < 1 or huber_delta <= 0 or reg_mu <= 0:
        raise ValueError("n, p, huber_delta and reg_mu must be positive")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        anchor = rng.uniform(-5.0, 5.0, size=p) * huber_delta
        centers = anchor + rng.uniform(-0.5, 0.5, size=(n, p)) * huber_delta
        agents = tuple(HuberAgent(c, huber_delta, reg_mu) for c in centers)
        ens = ObjectiveEnsemble(agents, reg_mu, 1.0 + reg_mu, "huber", seed)
        x_star = global_optimum(ens)
        if all(huber_zone_conditions(ens, x_star)):
            return ens
    raise GenerationFailure(f"no valid Huber ensemble in {max_attempts} attempts")
