"""Critical parameters shared by the Potts, FK, six-vertex and ATRC models.

Everything is derived from the cluster weight q > 4 and validated once at
construction, so the samplers never recompute the algebra themselves.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

_RTOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    q: float
    beta_c: float
    p_c: float
    lam: float
    c: float
    c_b: float
    J: float
    U: float

    @property
    def sqrt_q(self) -> float:
        return math.sqrt(self.q)

    @property
    def w_tau(self) -> float:
        """ATRC weight of an edge open in both layers."""
        return math.exp(2 * self.U) * (math.exp(2 * self.J) - math.exp(-2 * self.J))

    @property
    def w_tautau(self) -> float:
        """ATRC weight of an edge open only in the product layer."""
        return math.exp(2 * (self.U - self.J)) - 1.0

    @property
    def p_clockwise(self) -> float:
        """Probability that a free loop receives the favoured orientation."""
        return math.exp(self.lam) / (math.exp(self.lam) + math.exp(-self.lam))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        p = from_q(float(d["q"]))
        for k, v in d.items():
            if k in p.to_dict() and not math.isclose(v, getattr(p, k), rel_tol=1e-9, abs_tol=1e-12):
                raise ValueError(f"inconsistent parameter {k}={v}, expected {getattr(p, k)}")
        return p


def _close(a: float, b: float, tol: float = _RTOL) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def validate(p: ModelParams, tol: float = _RTOL) -> None:
    sq = math.sqrt(p.q)
    checks = {
        "beta_c": (p.beta_c, math.log1p(sq)),
        "p_c": (p.p_c, sq / (sq + 1)),
        "p_c vs beta_c": (p.p_c, -math.expm1(-p.beta_c)),
        "sqrt q": (sq, math.exp(p.lam) + math.exp(-p.lam)),
        "c": (p.c, math.exp(p.lam / 2) + math.exp(-p.lam / 2)),
        "c_b": (p.c_b, math.exp(p.lam / 2)),
        "c^2": (p.c ** 2, sq + 2),
        "c_b + 1/c_b": (p.c_b + 1 / p.c_b, p.c),
        "coth 2J": (1 / math.tanh(2 * p.J), p.c),
        "sinh 2J": (math.sinh(2 * p.J), math.exp(-2 * p.U)),
        "sinh 2J via c": (math.sinh(2 * p.J), 1 / math.sqrt(p.c ** 2 - 1)),
    }
    for name, (a, b) in checks.items():
        if not _close(a, b, tol):
            raise ArithmeticError(f"parameter identity {name} violated: {a} != {b}")


def from_q(q: float) -> ModelParams:
    """All critical parameters for cluster weight ``q`` (must exceed 4)."""
    q = float(q)
    if not q > 4:
        raise ValueError(
            f"q={q} is in the continuous-transition regime (q <= 4); only q > 4 is supported"
        )
    sq = math.sqrt(q)
    lam = math.acosh(sq / 2)
    c = math.exp(lam / 2) + math.exp(-lam / 2)
    J = math.atanh(1 / c) / 2
    U = -math.log(math.sinh(2 * J)) / 2
    p = ModelParams(
        q=q,
        beta_c=math.log1p(sq),
        p_c=sq / (sq + 1),
        lam=lam,
        c=c,
        c_b=math.exp(lam / 2),
        J=J,
        U=U,
    )
    validate(p)
    return p


def check_selfdual(J: float, U: float, tol: float = 1e-10) -> bool:
    """True iff (J, U) lies on the Ashkin-Teller self-dual curve within ``tol``."""
    return abs(math.sinh(2 * J) - math.exp(-2 * U)) <= tol
