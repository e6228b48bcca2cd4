"""Cross-oracle comparison suites behind ``mm1ps compare``.

Each check evaluates one asymptotic formula against an independent oracle
(exact inversion, a dual series form, or a neighbouring regime) at a fixed
representative point and reports the observed relative error next to the
tolerance it is held to. Nothing is tuned per point: a row fails when the
asymptotics are not yet accurate there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import regimes_fixed as rf
from . import regimes_heavy as rh
from .exact import invert_density
from .model import ModelParams


@dataclass(frozen=True)
class CheckRow:
    suite: str
    name: str
    point: str
    observed: float
    tolerance: float
    oracle: str

    @property
    def passed(self) -> bool:
        return math.isfinite(self.observed) and self.observed <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "name": self.name,
            "point": self.point,
            "observed": self.observed,
            "tolerance": self.tolerance,
            "status": "pass" if self.passed else "fail",
            "oracle": self.oracle,
        }


def rel(a: float, b: float) -> float:
    """``|a/b - 1|``."""
    return abs(a / b - 1.0)


def log_rel(log_a: float, log_b: float) -> float:
    """``|exp(log_a - log_b) - 1|`` for values that may under- or overflow."""
    return abs(math.expm1(log_a - log_b)) if log_a - log_b < 700 else math.inf


def _exact(t, x, rho):
    return invert_density(t, x, ModelParams(rho)).continuous


# -- fixed rho -------------------------------------------------------------------------


def _t1_case1():
    t, x, p = 40.1, 40.0, ModelParams(0.5)
    return CheckRow("theorem1", "T1-case1", "x=40 t=40.1 rho=0.5",
                    rel(rf.regime1_bessel(t, x, p).continuous, _exact(t, x, 0.5)), 0.01, "exact-inversion")


def _t1_case2():
    t, x, p = 120.0, 60.0, ModelParams(0.5)
    return CheckRow("theorem1", "T1-case2", "x=60 t=120 rho=0.5",
                    rel(rf.regime2_saddle(t, x, p).continuous, _exact(t, x, 0.5)), 0.03, "exact-inversion")


def _t1_case3():
    t, x, p = 450.0, 30.0, ModelParams(0.5)
    return CheckRow("theorem1", "T1-case3", "x=30 t=450 rho=0.5",
                    rel(rf.regime3_series(t, x, p).continuous, _exact(t, x, 0.5)), 0.05, "exact-inversion")


def _t1_case4():
    t, x, p = 40.0, 1.0, ModelParams(0.3)
    return CheckRow("theorem1", "T1-case4", "x=1 t=40 rho=0.3",
                    rel(rf.regime4_spectral(t, x, p).continuous, _exact(t, x, 0.3)), 0.05, "exact-inversion")


# -- heavy traffic ---------------------------------------------------------------------


def _t2_case1():
    eps = 0.01
    v = rh.ht_case1(3.0, 1.0, eps).continuous
    return CheckRow("theorem2", "T2-case1", "t=3 x=1 eps=0.01", rel(v, _exact(3.0, 1.0, 1 - eps)), 0.02,
                    "exact-inversion")


def _t2_case2():
    eps, x, t = 0.01, 2.0, 150.0
    v = rh.ht_case2(eps * t, x, eps).continuous
    return CheckRow("theorem2", "T2-case2", "x=2 t=150 eps=0.01", rel(v, _exact(t, x, 1 - eps)), 0.005,
                    "exact-inversion")


def _t2_case3():
    eps, X, Ts = 0.01, 1.0, 2.0
    x = X / eps
    t = x + eps * Ts
    a = rh.ht_case3(X, Ts, eps).extra["log_value"]
    b = rf.regime1_bessel(t, x, ModelParams(1 - eps)).extra["log_value"]
    return CheckRow("theorem2", "T2-case3", "X=1 T*=2 eps=0.01", log_rel(a, b), 0.02, "T1-case1")


def _t2_case4():
    eps, X, T = 0.05, 1.0, 2.0
    v = rh.ht_case4(T, X, eps).continuous
    return CheckRow("theorem2", "T2-case4", "X=1 T=2 eps=0.05", rel(v, _exact(T / eps, X / eps, 1 - eps)), 0.05,
                    "exact-inversion")


def _t2_case5():
    worst = 0.0
    for ratio in (0.1, 1.0, 10.0):
        T = 1.0
        Z = math.sqrt(ratio * T)
        worst = max(worst, rel(rh.ht_case5(T, Z, 0.01, "direct").continuous,
                               rh.ht_case5(T, Z, 0.01, "poisson").continuous))
    return CheckRow("theorem2", "T2-case5", "Z^2/T in {0.1,1,10}", worst, 1e-10, "poisson-dual")


def _t2_case6():
    Theta, X, eps = 3.0, 2.0, 0.05
    a = rh.ht_case6(Theta, X, eps, "integral").continuous
    b = rh.ht_case6(Theta, X, eps, "pcf_series").continuous
    return CheckRow("theorem2", "T2-case6", "X=2 Theta=3 eps=0.05", rel(a, b), 1e-3, "pcf-series")


def _t2_case6_forms():
    """All three forms with the spectral exponent aligned to leading order."""
    Theta, X, eps = 3.0, 2.0, 0.05
    a = rh.ht_case6(Theta, X, eps, "integral").continuous
    b = rh.ht_case6(Theta, X, eps, "pcf_series").continuous
    c = rh.ht_case6(Theta, X, eps, "spectral", corrected=False).continuous
    worst = max(rel(a, b), rel(c, a), rel(c, b))
    return CheckRow("theorem2", "T2-case6-forms", "X=2 Theta=3 eps=0.05", worst, 1e-3,
                    "integral/pcf/spectral(leading)")


# -- overlaps --------------------------------------------------------------------------


def _m_1_2():
    p = ModelParams(0.5)
    x = 1000.0
    t = x + 25.0 / (p.rho * x)
    a = rf.regime1_bessel(t, x, p).extra["log_value"]
    b = rf.regime2_saddle(t, x, p).extra["log_value"]
    return CheckRow("matching", "T1 case1<->case2", "x=1000 x(t-x)=25/rho", log_rel(a, b), 0.05, "T1-case2")


def _m_2_3():
    p = ModelParams(0.5)
    x = 100.0
    t = 1.25 * x * x
    a = rf.regime2_saddle(t, x, p).extra["log_value"]
    b = rf.regime3_series(t, x, p).extra["log_value"]
    return CheckRow("matching", "T1 case2<->case3", "x=100 t=1.25x^2", log_rel(a, b), 0.10, "T1-case3")


def _m_match_3():
    p = ModelParams(0.5)
    t = 1e4
    x = 2.0 * t ** (1.0 / 3.0)
    a = rf.matching_formula(t, x, p).extra["log_value"]
    b = rf.regime3_series(t, x, p).extra["log_value"]
    return CheckRow("matching", "T1 match<->case3", "t=1e4 x=2t^(1/3)", log_rel(a, b), 0.10, "T1-case3")


def _m_2_5():
    eps, Z, T = 1e-8, 0.01, 1.0
    x = Z / math.sqrt(eps)
    a = rh.ht_case2(T, x, eps).extra["leading"]
    b = rh.ht_case5(T, Z, eps, "poisson").continuous
    return CheckRow("matching", "T2 case2<->case5", "eps=1e-8 Z=0.01 T=1", rel(a, b), 0.02, "T2-case5")


def _m_5_4():
    eps, T = 1e-6, 1.0
    Z = math.sqrt(40.0 * T)
    X = Z * math.sqrt(eps)
    a = rh.ht_case4(T, X, eps).continuous
    b = rh.ht_case5(T, Z, eps, "direct").continuous
    return CheckRow("matching", "T2 case5<->case4", "eps=1e-6 Z^2/T=40", rel(a, b), 0.05, "T2-case5")


def _m_5_6():
    X, Theta, eps = 0.1, 0.04, 0.01
    a = rh.ht_case6(Theta, X, eps, "integral").continuous
    b = rh.ht_case5(Theta / eps, X / math.sqrt(eps), eps, "direct").continuous
    return CheckRow("matching", "T2 case5<-case6", "X=0.1 Theta=0.04", rel(a, b), 0.02, "T2-case5")


def _m_6_44():
    X, Theta, eps = 12.0, 3.0, 0.05
    a = rh.ht_case6(Theta, X, eps, "integral").continuous
    b = rh.case6_large_X(Theta, X, eps)
    return CheckRow("matching", "T2 case6->large-X", "X=12 Theta=3", rel(a, b), 0.01, "single-image limit")


def _m_4_44():
    eps, X = 1e-3, 0.1
    T = 50.0 * X
    a = rh.ht_case4(T, X, eps).extra["log_value"]
    b = math.log(rh.case6_large_X(eps * T, X, eps))
    return CheckRow("matching", "T2 case4->large-X", "eps=1e-3 X=0.1 T=50X", log_rel(a, b), 0.01,
                    "single-image limit")


SUITES = {
    "theorem1": (_t1_case1, _t1_case2, _t1_case3, _t1_case4),
    "theorem2": (_t2_case1, _t2_case2, _t2_case3, _t2_case4, _t2_case5, _t2_case6, _t2_case6_forms),
    "matching": (_m_1_2, _m_2_3, _m_match_3, _m_2_5, _m_5_4, _m_5_6, _m_6_44, _m_4_44),
}


def run_suite(name: str) -> list[CheckRow]:
    """Run one suite (or ``"all"``) and return its rows in a fixed order."""
    names = list(SUITES) if name == "all" else [name]
    return [check() for n in names for check in SUITES[n]]
