"""Payment mechanisms: genie-aided template and the peer-prediction scheme.

All operations are pure.  Reports use the integer coding 1, 0 and
NON_PARTICIPATION (= -1) for the opt-out symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import CostFunction

__all__ = [
    "NON_PARTICIPATION",
    "MechanismConfig",
    "MechanismError",
    "genie_payment",
    "majority_excluding",
    "peer_payment",
    "design_Z",
    "design_Z0_Z1",
]

NON_PARTICIPATION = -1


class MechanismError(ValueError):
    """Degenerate mechanism design inputs."""


@dataclass(frozen=True)
class MechanismConfig:
    """Payment constants and the majority-consistency probabilities behind them."""

    z: float
    z0: float
    z1: float
    beta0: float
    beta1: float
    epsilon: float

    def __post_init__(self) -> None:
        if self.z0 <= 0.0 or self.z1 <= 0.0:
            raise MechanismError("payment constants must be positive")
        if self.beta0 + self.beta1 <= 1.0:
            raise MechanismError("need beta0 + beta1 > 1")


def genie_payment(x: int, w: int, z_g: float, prior_w1: float) -> float:
    """Hypothetical payment when the true world bit is observable.

    Pays z_g / Pr(W = w) for a report matching w, nothing otherwise
    (including non-participation).
    """
    if x == NON_PARTICIPATION or x != w:
        return 0.0
    pr_w = prior_w1 if w == 1 else 1.0 - prior_w1
    return z_g / pr_w


def majority_excluding(reports, i: int):
    """Majority bit among the other participants' reports.

    Returns 1 or 0, or None when user i opted out or is the only
    participant (payment is zero downstream either way).  With n total
    participants, the majority threshold on the others' sum is
    floor((n - 1) / 2) + 1, so even splits resolve to 0.
    """
    if not 0 <= i < len(reports):
        raise IndexError(f"index {i} out of range")
    participants = [x for x in reports if x != NON_PARTICIPATION]
    n = len(participants)
    if reports[i] == NON_PARTICIPATION or n <= 1:
        return None
    others_sum = sum(x for j, x in enumerate(reports) if j != i and x != NON_PARTICIPATION)
    return 1 if others_sum >= (n - 1) // 2 + 1 else 0


def peer_payment(x_i: int, m, cfg: MechanismConfig) -> float:
    """Pay z1 on a 1-report matching the others' majority, z0 on a matching 0-report."""
    if m is None or x_i == NON_PARTICIPATION:
        return 0.0
    if x_i == 1:
        return cfg.z1 * m
    return cfg.z0 * (1 - m)


def design_Z(epsilon: float, theta0: float, cost: CostFunction) -> float:
    """Base design scalar for a target tie-level privacy epsilon.

    Z = g'(eps) (e^eps + 1)^2 / (2 e^eps (2 theta0 - 1)).  A zero marginal
    cost at eps makes every payment vanish; that degenerate case is raised
    rather than silently returned.
    """
    if epsilon < 0.0:
        raise MechanismError("epsilon must be >= 0")
    gp = cost.derivative(epsilon)
    if gp <= 0.0:
        raise MechanismError(
            f"g'({epsilon}) = {gp}: zero marginal cost gives a degenerate zero payment"
        )
    ee = math.exp(epsilon)
    return gp * (ee + 1.0) ** 2 / (2.0 * ee * (2.0 * theta0 - 1.0))


def design_Z0_Z1(z: float, beta0: float, beta1: float, prior_w1: float) -> tuple[float, float]:
    """Per-report payment constants from the base scalar and majority accuracies."""
    if z <= 0.0:
        raise MechanismError("z must be positive")
    denom = beta0 + beta1 - 1.0
    if denom <= 0.0:
        raise MechanismError("need beta0 + beta1 > 1")
    p1 = prior_w1
    p0 = 1.0 - prior_w1
    if p0 <= 0.0 or p1 <= 0.0:
        raise MechanismError("priors must be interior")
    z0 = z * (p1 * beta1 + p0 * (1.0 - beta0)) / (denom * p1 * p0)
    z1 = z * (p1 * (1.0 - beta1) + p0 * beta0) / (denom * p1 * p0)
    return z0, z1
