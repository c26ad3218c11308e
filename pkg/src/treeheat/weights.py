"""Admissibility conditions for weights on the tree and companion weights.

The dual series condition (for 1 < p < infinity, conjugate p' = p/(p-1))

    sum_y (q^{d(x,y)} (1+d(x,y))^e)^{-p'} u(y)^{-p'/p} < infinity

with profile exponent e (1 + alpha/2 for the stable family, nu + 1 for the
wave-type family), and the p = 1 variant sup_y (q^d (1+d)^e u(y))^{-1} <
infinity, decide weighted boundedness of the truncated maximal operators.
The heat-family condition replaces the profile by the tabulated kernel H_R.

Verdicts follow a strict certification policy: `admissible` needs a finite
certified tail, `not-admissible` needs a divergence certificate (closed-form
ratio analysis, or terms persistently bounded below with nondecreasing
ratio); weights given as finite tables without a closed form can otherwise
only be `inconclusive`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .geometry import (
    ROOT,
    TreeGeometry,
    depth,
    radial_distance_counts,
    sphere_size,
    validate_word,
)
from .kernels import KernelFamily, tabulate
from .quadrature import DEFAULT_SPEC, QuadratureSpec

ADMISSIBLE = "admissible"
NOT_ADMISSIBLE = "not-admissible"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ClosedFormWeight:
    """u_k = c * q^(a*k) * (1+k)^b."""

    c: float
    a: float
    b: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("coefficient c must be > 0")

    def value(self, q: int, k: int) -> float:
        return self.c * float(q) ** (self.a * k) * (1.0 + k) ** self.b

    def label(self) -> str:
        return f"{self.c:g}*q^({self.a:g}k)*(1+k)^{self.b:g}"


@dataclass(frozen=True)
class WeightSpec:
    """A strictly positive weight with exponent p; radial closed form,
    radial table, or explicit vertex table."""

    geom: TreeGeometry
    p: float
    closed_form: ClosedFormWeight | None = None
    radial: tuple[float, ...] | None = None
    table: dict | None = None

    def __post_init__(self):
        reps = sum(x is not None for x in (self.closed_form, self.radial, self.table))
        if reps != 1:
            raise ValueError("exactly one weight representation must be given")
        if not self.p >= 1.0:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.radial is not None:
            if len(self.radial) != self.geom.radius + 1:
                raise ValueError("radial weight length must be radius + 1")
            if any(not v > 0 for v in self.radial):
                raise ValueError("weights must be strictly positive")
        if self.table is not None and any(not v > 0 for v in self.table.values()):
            raise ValueError("weights must be strictly positive")

    @staticmethod
    def from_closed_form(
        geom: TreeGeometry, p: float, c: float, a: float, b: float
    ) -> "WeightSpec":
        return WeightSpec(geom, p, closed_form=ClosedFormWeight(c, a, b))

    @staticmethod
    def from_radial(geom: TreeGeometry, p: float, values) -> "WeightSpec":
        return WeightSpec(geom, p, radial=tuple(float(v) for v in values))

    @staticmethod
    def from_table(geom: TreeGeometry, p: float, mapping) -> "WeightSpec":
        table = {}
        for w, v in mapping.items():
            w = validate_word(w, geom.q)
            if depth(w) > geom.radius:
                raise ValueError(f"vertex {w} outside the ball")
            table[w] = float(v)
        return WeightSpec(geom, p, table=table)

    @property
    def is_radial(self) -> bool:
        return self.table is None

    def radial_value(self, k: int) -> float:
        if self.closed_form is not None:
            return self.closed_form.value(self.geom.q, k)
        if self.radial is not None:
            if not 0 <= k <= self.geom.radius:
                raise ValueError(f"k={k} outside radius {self.geom.radius}")
            return self.radial[k]
        raise ValueError("explicit weight has no radial form")

    def value(self, x) -> float:
        x = validate_word(x, self.geom.q)
        if self.table is not None:
            if x not in self.table:
                raise ValueError(f"weight undefined at {x}")
            return self.table[x]
        return self.radial_value(depth(x))

    def label(self) -> str:
        if self.closed_form is not None:
            return self.closed_form.label()
        return "radial-table" if self.radial is not None else "explicit-table"


@dataclass(frozen=True)
class AdmissibilityVerdict:
    condition: str
    p: float
    params: dict
    base_vertex: tuple
    statistic: float  # partial sum (1 < p) or running sup (p = 1)
    tail_bound: float | None  # None: unknown; math.inf: certified divergent
    verdict: str

    def to_record(self) -> dict:
        tail = self.tail_bound
        if tail is not None and math.isinf(tail):
            tail = "unbounded-tail"
        return {
            "condition": self.condition,
            "p": self.p,
            "params": dict(sorted(self.params.items())),
            "base_vertex": list(self.base_vertex),
            "partial": self.statistic,
            "tail": tail,
            "verdict": self.verdict,
        }


def _series_terms_at(u: WeightSpec, e: float, x) -> np.ndarray:
    """term_j = sum_{d(x,y)=j} (q^j (1+j)^e)^{-p'} u(y)^{-p'/p} over the ball."""
    q = u.geom.q
    p = u.p
    pp = p / (p - 1.0)
    r = u.geom.radius
    x = validate_word(x, q)
    k = depth(x)
    jmax = r - k  # spheres around x fully contained in the ball
    if jmax < 0:
        raise ValueError("base vertex outside the ball")
    terms = np.zeros(jmax + 1)
    if u.is_radial:
        census = radial_distance_counts(q, k, r)
        for i, row in census.items():
            if i > r:
                continue
            ui = u.radial_value(i) ** (-pp / p)
            for j, cnt in row.items():
                if j <= jmax:
                    terms[j] += cnt * ui
    else:
        from .geometry import distance, enumerate_ball

        for y in enumerate_ball(u.geom):
            j = distance(x, y)
            if j <= jmax:
                terms[j] += u.table.get(y, None) ** (-pp / p) if y in u.table else 0.0
    with np.errstate(over="ignore"):
        profile = np.array(
            [(float(q) ** j * (1.0 + j) ** e) ** (-pp) for j in range(jmax + 1)]
        )
    return terms * profile


def _closed_form_series_verdict(u: WeightSpec, e: float):
    """Exact ratio test on the closed-form term sequence.

    term_k ~ q^(gamma*k) * (1+k)^delta with
    gamma = 1 - p' - a*p'/p, delta = -e*p' - b*p'/p.
    """
    cf = u.closed_form
    p = u.p
    pp = p / (p - 1.0)
    gamma = 1.0 - pp - cf.a * pp / p
    delta = -e * pp - cf.b * pp / p
    if gamma > 0.0:
        return NOT_ADMISSIBLE, gamma, delta
    if gamma == 0.0:
        verdict = ADMISSIBLE if delta < -1.0 else NOT_ADMISSIBLE
        return verdict, gamma, delta
    return ADMISSIBLE, gamma, delta


def _closed_form_tail(u: WeightSpec, e: float, gamma: float, delta: float) -> float:
    """Certified tail of the closed-form series beyond the ball radius."""
    q = float(u.geom.q)
    p = u.p
    pp = p / (p - 1.0)
    cf = u.closed_form
    coeff = (q + 1.0) / q * cf.c ** (-pp / p)
    k = u.geom.radius + 1
    if gamma < 0.0:
        rho = q**gamma

        def term(kk):
            return coeff * q ** (gamma * kk) * (1.0 + kk) ** delta

        # extend until the per-step ratio comfortably certifies a geometric tail
        total = 0.0
        while True:
            r_k = rho * (1.0 + 1.0 / (1.0 + k)) ** max(delta, 0.0)
            if r_k < 0.99:
                return total + term(k) / (1.0 - r_k)
            total += term(k)
            k += 1
            if k > u.geom.radius + 100_000:
                raise NumericalError("tail certification did not stabilize")
    # gamma == 0, delta < -1: integral comparison sum_{j>=k} j^delta
    return coeff * (1.0 + k) ** (delta + 1.0) / (-(delta + 1.0))


def _table_series_verdict(terms: np.ndarray, allow_divergence: bool = True):
    """Empirical certification for weights given only as finite data.

    `allow_divergence` is False for explicit vertex tables: finite explicit
    data can certify convergence (geometric majorant) but never divergence,
    so those weights cap at inconclusive. Radial tables may certify
    divergence from persistently nondecreasing terms bounded below.
    """
    if len(terms) < 6:
        return INCONCLUSIVE, None
    tail5 = terms[-5:]
    prev5 = terms[-6:-1]
    if np.all(tail5 > 0) and np.all(prev5 > 0):
        ratios = tail5 / prev5
        if np.max(ratios) <= 0.95:
            rho = float(np.max(ratios))
            return ADMISSIBLE, float(terms[-1] * rho / (1.0 - rho))
        if allow_divergence and np.min(ratios) >= 1.0 and np.all(tail5 >= 1e-8):
            # terms persistently bounded below with nondecreasing ratio
            return NOT_ADMISSIBLE, math.inf
    return INCONCLUSIVE, None


def _check_series(u: WeightSpec, e: float, x, condition: str, params: dict):
    terms = _series_terms_at(u, e, x)
    partial = float(terms.sum())
    x = validate_word(x, u.geom.q)
    if u.closed_form is not None:
        verdict, gamma, delta = _closed_form_series_verdict(u, e)
        if verdict == ADMISSIBLE:
            tail = _closed_form_tail(u, e, gamma, delta)
        else:
            tail = math.inf
        return AdmissibilityVerdict(condition, u.p, params, x, partial, tail, verdict)
    verdict, tail = _table_series_verdict(terms, allow_divergence=u.table is None)
    return AdmissibilityVerdict(condition, u.p, params, x, partial, tail, verdict)


def _check_sup(u: WeightSpec, e: float, x, condition: str, params: dict):
    """p = 1 branch: sup_y (q^d (1+d)^e u(y))^{-1} over spheres around x."""
    q = u.geom.q
    x = validate_word(x, q)
    k = depth(x)
    jmax = u.geom.radius - k
    if jmax < 0:
        raise ValueError("base vertex outside the ball")
    if u.is_radial and k == 0:
        inv = [
            1.0 / (float(q) ** j * (1.0 + j) ** e * u.radial_value(j))
            for j in range(jmax + 1)
        ]
    else:
        from .geometry import distance, enumerate_ball

        inv_by_j: dict[int, float] = {}
        for y in enumerate_ball(u.geom):
            j = distance(x, y)
            if j > jmax:
                continue
            uy = u.value(y) if not u.is_radial else u.radial_value(depth(y))
            val = 1.0 / (float(q) ** j * (1.0 + j) ** e * uy)
            inv_by_j[j] = max(inv_by_j.get(j, 0.0), val)
        inv = [inv_by_j[j] for j in sorted(inv_by_j)]
    running_sup = float(max(inv))
    if u.closed_form is not None:
        cf = u.closed_form
        # g_k = q^{(1+a)k} (1+k)^{e+b} c; sup of 1/g finite iff g bounded below
        qexp = 1.0 + cf.a
        pexp = e + cf.b
        if qexp > 0.0 or (qexp == 0.0 and pexp >= 0.0):
            verdict, tail = ADMISSIBLE, 0.0
        else:
            verdict, tail = NOT_ADMISSIBLE, math.inf
        return AdmissibilityVerdict(
            condition, u.p, params, x, running_sup, tail, verdict
        )
    # finite data: the sup over the infinite tree cannot be certified
    return AdmissibilityVerdict(
        condition, u.p, params, x, running_sup, None, INCONCLUSIVE
    )


def check_thm1_i(u: WeightSpec, alpha: float, x=ROOT) -> AdmissibilityVerdict:
    """Admissibility for the stable-family maximal operator (exponent 1+alpha/2)."""
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must be in (0, 2), got {alpha}")
    e = 1.0 + alpha / 2.0
    params = {"alpha": alpha, "weight": u.label()}
    if u.p == 1.0:
        return _check_sup(u, e, x, "Thm1-i", params)
    return _check_series(u, e, x, "Thm1-i", params)


def check_thm2_i(u: WeightSpec, nu: float, x=ROOT) -> AdmissibilityVerdict:
    """Admissibility for the wave-type maximal operator (exponent nu+1)."""
    if not nu > 0.0:
        raise ValueError(f"nu must be > 0, got {nu}")
    e = nu + 1.0
    params = {"nu": nu, "weight": u.label()}
    if u.p == 1.0:
        return _check_sup(u, e, x, "Thm2-i", params)
    return _check_series(u, e, x, "Thm2-i", params)


def check_thm3_g(
    u: WeightSpec, R: float, x=ROOT, spec: QuadratureSpec = DEFAULT_SPEC
) -> AdmissibilityVerdict:
    """Heat-family condition with the tabulated kernel H_R as the profile."""
    if not R > 0.0:
        raise ValueError(f"R must be > 0, got {R}")
    q = u.geom.q
    x = validate_word(x, q)
    k = depth(x)
    r = u.geom.radius
    jmax = r - k
    if jmax < 0:
        raise ValueError("base vertex outside the ball")
    kern = tabulate(TreeGeometry(q, max(r, 4)), KernelFamily.heat(), R, spec)
    params = {"R": R, "weight": u.label()}
    p = u.p
    if p == 1.0:
        # sup_y H_R(d(x,y)) / u(y)
        if u.is_radial and k == 0:
            seq = [kern.value(j) / u.radial_value(j) for j in range(jmax + 1)]
        else:
            from .geometry import distance, enumerate_ball

            by_j: dict[int, float] = {}
            for y in enumerate_ball(u.geom):
                j = distance(x, y)
                if j > jmax:
                    continue
                uy = u.value(y) if not u.is_radial else u.radial_value(depth(y))
                by_j[j] = max(by_j.get(j, 0.0), kern.value(j) / uy)
            seq = [by_j[j] for j in sorted(by_j)]
        running_sup = float(max(seq))
        tail5, prev5 = np.array(seq[-5:]), np.array(seq[-6:-1])
        if len(seq) >= 6 and np.all(prev5 > 0) and np.max(tail5 / prev5) <= 0.95:
            return AdmissibilityVerdict(
                "Thm3-g", p, params, x, running_sup, 0.0, ADMISSIBLE
            )
        if len(seq) >= 6 and np.all(tail5 >= max(1.0, running_sup) * 0.99):
            return AdmissibilityVerdict(
                "Thm3-g", p, params, x, running_sup, 0.0, ADMISSIBLE
            )
        return AdmissibilityVerdict(
            "Thm3-g", p, params, x, running_sup, None, INCONCLUSIVE
        )
    pp = p / (p - 1.0)
    terms = np.zeros(jmax + 1)
    if u.is_radial:
        census = radial_distance_counts(q, k, r)
        for i, row in census.items():
            if i > r:
                continue
            ui = u.radial_value(i) ** (-pp / p)
            for j, cnt in row.items():
                if j <= jmax:
                    terms[j] += cnt * ui
    else:
        from .geometry import distance, enumerate_ball

        for y in enumerate_ball(u.geom):
            j = distance(x, y)
            if j <= jmax and y in u.table:
                terms[j] += u.table[y] ** (-pp / p)
    terms *= np.array([kern.value(j) ** pp for j in range(jmax + 1)])
    partial = float(terms.sum())
    verdict, tail = _table_series_verdict(terms, allow_divergence=u.table is None)
    return AdmissibilityVerdict("Thm3-g", p, params, x, partial, tail, verdict)


def companion_weight(u: WeightSpec, exponent: float, p: float | None = None) -> WeightSpec:
    """v = min(u, w) with w_k = q^{-pk}(1+k)^{-p*e-2}/sphere_size(k).

    `exponent` is the family profile e (1+alpha/2 or nu+1). By construction
    sum_k sphere_size(k) ((1+k)^e q^k)^p w_k = sum_k (1+k)^{-2} < infinity.
    """
    if p is None:
        p = u.p
    geom = u.geom
    q = float(geom.q)

    def w_k(k: int) -> float:
        return (
            q ** (-p * k)
            * (1.0 + k) ** (-p * exponent - 2.0)
            / sphere_size(geom, k)
        )

    if u.is_radial:
        vals = [
            min(u.radial_value(k), w_k(k)) for k in range(geom.radius + 1)
        ]
        return WeightSpec.from_radial(geom, p, vals)
    table = {y: min(uy, w_k(depth(y))) for y, uy in u.table.items()}
    return WeightSpec(geom, p, table=table)
