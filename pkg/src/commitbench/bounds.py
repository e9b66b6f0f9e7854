"""Closed-form upper bounds on the expected cost of FHC(v).

Two noise settings are covered. With i.i.d. prediction noise of scale
``sigma`` and a Hölder-continuous cost (exponent ``alpha``)::

    E cost(FHC(v)) <= opt + 2*T*beta*D/v + 2*G*T*sigma**alpha

With exponentially decaying error correlation the noise term scales with
``||f_v||``, the norm of the filtered error up to lead ``v``::

    ||f_v||**2 = sum_{s=0..v} c**2 * sigma**2 * a**(2s)
    E cost(FHC(v)) <= opt + 2*T*beta*D/v + 2*G*T*||f_v||

The second form is evaluated with the geometric sum taken over exactly
the stated summation limits (``v + 1`` terms). These bounds are analytic
and do not describe the simulator's own cost.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import ConfigError, DomainError

EXPDECAY_NOTE = ("exp-decay noise term uses sqrt(sum_{s=0..v} c^2 sigma^2 a^(2s)) "
                 "= c*sigma*sqrt((1 - a^(2(v+1))) / (1 - a^2)); other closed forms of the "
                 "same sum (a^(2v) numerator, halved exponent) are not used")


class UnsupportedExponentError(ConfigError):
    pass


@dataclass(frozen=True)
class BoundParams:
    T: float = 24.0
    beta: float = 1.0
    diam: float = 1.0
    g_lip: float = 1.0
    alpha: float = 1.0
    sigma: float = 1.0
    a: float = 0.0
    c: float = 1.0
    opt_cost: float = 0.0

    def __post_init__(self):
        for name in ("T", "beta", "diam", "g_lip", "sigma", "a", "c", "opt_cost"):
            if not getattr(self, name) >= 0:
                raise DomainError(f"{name} must be >= 0")
        if not 0 < self.alpha <= 1:
            raise DomainError("alpha must lie in (0, 1]")
        if self.a >= 1:
            raise DomainError("decay a must be < 1")

    def to_dict(self):
        return asdict(self)


def _check_v(v):
    if int(v) != v or v < 1:
        raise DomainError(f"commitment v must be a positive integer, got {v}")
    return int(v)


def switching_term(p: BoundParams, v):
    return 2.0 * p.T * p.beta * p.diam / _check_v(v)


def bound_iid(p: BoundParams, v):
    return p.opt_cost + switching_term(p, v) + 2.0 * p.g_lip * p.T * p.sigma ** p.alpha


def fv_norm_expdecay(p: BoundParams, v):
    v = _check_v(v)
    if p.a >= 1:
        raise DomainError("decay a must be < 1")
    if p.a == 0.0:
        return p.c * p.sigma
    a2 = p.a * p.a
    return math.sqrt(p.c ** 2 * p.sigma ** 2 * (1.0 - a2 ** (v + 1)) / (1.0 - a2))


def bound_expdecay(p: BoundParams, v):
    if p.alpha != 1:
        raise UnsupportedExponentError("the exp-decay bound assumes Lipschitz costs (alpha = 1)")
    return p.opt_cost + switching_term(p, v) + 2.0 * p.g_lip * p.T * fv_norm_expdecay(p, v)


@dataclass
class TradeoffCurve:
    params: BoundParams
    rows: list            # (v, bound_iid, bound_expdecay or None)
    argmin_iid: int
    argmin_expdecay: int | None
    note: str = EXPDECAY_NOTE

    def metadata(self):
        return {"params": self.params.to_dict(), "argmin_iid": self.argmin_iid,
                "argmin_expdecay": self.argmin_expdecay, "note": self.note}


def _argmin(values):
    # first index wins ties, scanning v upwards
    best = min(range(len(values)), key=lambda i: (values[i], i))
    return best + 1


def tradeoff_curve(p: BoundParams, v_max):
    v_max = _check_v(v_max)
    iid = [bound_iid(p, v) for v in range(1, v_max + 1)]
    if p.alpha == 1:
        exp = [bound_expdecay(p, v) for v in range(1, v_max + 1)]
        arg_exp = _argmin(exp)
    else:
        exp = [None] * v_max
        arg_exp = None
    rows = [(v, iid[v - 1], exp[v - 1]) for v in range(1, v_max + 1)]
    return TradeoffCurve(p, rows, _argmin(iid), arg_exp)
