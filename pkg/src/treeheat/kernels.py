"""Radial kernels of the heat semigroup and its two subordinated families.

For q >= 2 the heat kernel comes from the explicit oscillatory integral over
[0, pi]; the time variable of that formula is rescaled by 1/(q+1) so that the
kernel generated is the one of exp(-t L) with L f = f - (mean of f over
neighbors). The rescaling is forced by the walk-count series for exp(-t L)
and by the q = 1 degeneration, where the kernel must be exp(-t) I_k(t).
q = 1 always routes through the Bessel form.

Subordinated families are integrated in normalized variables: the stable
kernel over y = s * t^(-2/alpha) against f_{alpha,1}, the wave-type kernel
over w = v^nu for the Gamma-weighted time mixture, which removes all moving
spikes and endpoint singularities from the outer quadrature.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NumericalError
from .geometry import TreeGeometry, radial_distance_counts, sphere_size
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate
from .special import _f1, bessel_i_scaled

_GK_X = None
_GK_W = None


def _gk_nodes():
    global _GK_X, _GK_W
    if _GK_X is None:
        from .quadrature import _WK, _XK

        _GK_X, _GK_W = _XK, _WK
    return _GK_X, _GK_W


@dataclass(frozen=True)
class KernelFamily:
    """heat | stable(alpha) | wave(nu)."""

    kind: str
    alpha: float | None = None
    nu: float | None = None

    def __post_init__(self):
        if self.kind == "heat":
            if self.alpha is not None or self.nu is not None:
                raise ValueError("heat family takes no parameters")
        elif self.kind == "stable":
            if self.alpha is None or not 0.0 < self.alpha < 2.0:
                raise ValueError("stable family needs alpha in (0, 2)")
        elif self.kind == "wave":
            if self.nu is None or not self.nu > 0.0:
                raise ValueError("wave family needs nu > 0")
        else:
            raise ValueError(f"unknown kernel family {self.kind!r}")

    @staticmethod
    def heat() -> "KernelFamily":
        return KernelFamily("heat")

    @staticmethod
    def stable(alpha: float) -> "KernelFamily":
        return KernelFamily("stable", alpha=alpha)

    @staticmethod
    def wave(nu: float) -> "KernelFamily":
        return KernelFamily("wave", nu=nu)

    def label(self) -> str:
        if self.kind == "stable":
            return f"stable(alpha={self.alpha:g})"
        if self.kind == "wave":
            return f"wave(nu={self.nu:g})"
        return "heat"


@lru_cache(maxsize=4096)
def _heat_design(q: int, k: int, panels: int):
    """Composite GK nodes and combined weights for the [0, pi] integral."""
    xk, wk = _gk_nodes()
    edges = np.linspace(0.0, math.pi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    u = (mid[:, None] + half[:, None] * xk[None, :]).ravel()
    w = (half[:, None] * wk[None, :]).ravel()
    denom = (q + 1.0) ** 2 - 4.0 * q * np.cos(u) ** 2
    if k == 0:
        geo = 2.0 * q * (q + 1.0) / math.pi * np.sin(u) ** 2 / denom
    else:
        geo = (
            2.0
            / (math.pi * float(q) ** (k / 2.0 - 1.0))
            * np.sin(u)
            * (q * np.sin((k + 1.0) * u) - np.sin((k - 1.0) * u))
            / denom
        )
    return u, w * geo


def _heat_fixed(q: int, k: int, s, panels: int):
    """Heat kernel values at times s (array) with a fixed composite rule."""
    u, wg = _heat_design(q, k, panels)
    s = np.asarray(s, dtype=float)
    expo = s[:, None] * (2.0 * math.sqrt(q) / (q + 1.0) * np.cos(u)[None, :] - 1.0)
    return np.exp(expo) @ wg


_SERIES_T_MAX = 600.0  # e^{-t} stays representable; series weights never overflow


@lru_cache(maxsize=200_000)
def _heat_series_row(q: int, t: float, jmax: int):
    """H_t(0..jmax) by the positive Poisson-walk series; exact in cancellation
    regimes where the oscillatory integral loses all significant digits."""
    nmax = max(jmax + 40, int(t + 12.0 * math.sqrt(t) + 40.0))
    u = np.zeros(nmax + 2)
    u[0] = 1.0
    out = np.zeros(jmax + 1)
    w = math.exp(-t)
    for n in range(nmax + 1):
        if w > 0.0:
            out += w * u[: jmax + 1]
        nxt = np.empty_like(u)
        nxt[0] = u[1]
        nxt[1:-1] = (u[:-2] + q * u[2:]) / (q + 1.0)
        nxt[-1] = 0.0
        u = nxt
        w *= t / (n + 1.0)
    return tuple(out)


@lru_cache(maxsize=200_000)
def _heat_row_diff(q: int, t: float, jmax: int):
    """H_t(j) - delta_{j0} for j = 0..jmax, accurate at absolute scale t.

    The n = 0 term of the Poisson-walk series cancels the identity exactly,
    so the result carries no O(1) cancellation — essential for the Bochner
    integral of (W_t - I) f against t^{-1-a/2} near t = 0.
    """
    if t > _SERIES_T_MAX:
        raise ValueError(f"series row restricted to t <= {_SERIES_T_MAX}")
    nmax = max(jmax + 40, int(t + 12.0 * math.sqrt(t) + 40.0))
    u = np.zeros(nmax + 2)
    u[0] = 1.0
    e0 = np.zeros(jmax + 1)
    e0[0] = 1.0
    out = np.zeros(jmax + 1)
    w = math.exp(-t)
    for n in range(nmax + 1):
        if w > 0.0:
            out += w * (u[: jmax + 1] - e0)
        nxt = np.empty_like(u)
        nxt[0] = u[1]
        nxt[1:-1] = (u[:-2] + q * u[2:]) / (q + 1.0)
        nxt[-1] = 0.0
        u = nxt
        w *= t / (n + 1.0)
    return tuple(out)


def _heat_panels(q: int, k: int, s_max: float) -> int:
    # >= 4(k+2) panels against the ~k oscillation; extra panels when the
    # integrand concentrates at u=0 on a scale ~ 1/sqrt(s)
    p = max(8, 4 * (k + 2), int(math.ceil(4.0 * math.sqrt(max(s_max, 1.0)))))
    return 1 << (p - 1).bit_length()  # bucket to a power of two for caching


def heat_kernel_many(q: int, k: int, s, spec: QuadratureSpec = DEFAULT_SPEC):
    """H_s(k) for an array of times s; q = 1 uses the Bessel form."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s <= 0):
        raise ValueError("times must be positive")
    if q == 1:
        return np.asarray(bessel_i_scaled(k, s), dtype=float)
    out = np.zeros_like(s)
    # spectral gap b = 1 - 2 sqrt(q)/(q+1): beyond s_cut the kernel underflows
    b = 1.0 - 2.0 * math.sqrt(q) / (q + 1.0)
    s_cut = 700.0 / b
    live = np.flatnonzero(s <= s_cut)
    if len(live) == 0:
        return out
    order = live[np.argsort(s[live])]
    ss = s[order]
    # process in buckets of comparable magnitude so one rule serves the batch
    start = 0
    n = len(ss)
    while start < n:
        smax = ss[start] * 16.0
        stop = int(np.searchsorted(ss, smax, side="right"))
        stop = max(stop, start + 1)
        chunk = ss[start:stop]
        panels = _heat_panels(q, k, float(chunk[-1]))
        v1 = _heat_fixed(q, k, chunk, panels)
        v2 = _heat_fixed(q, k, chunk, 2 * panels)
        # below ~1e8 x the cancellation noise floor of the oscillatory rule
        # the integral has lost most significant digits; those entries are
        # recomputed by the positive-term series (the exp factor is <= 1, so
        # noise is ~ machine eps * sum |weights|) and exempt from the
        # two-rule convergence check
        _, wg = _heat_design(q, k, panels)
        noise = 2e-15 * float(np.sum(np.abs(wg)))
        resolved = np.abs(v2) >= 1e8 * noise
        err = float(np.max(np.abs(v1 - v2) * resolved, initial=0.0))
        if err > max(spec.abs_tol, spec.rel_tol * float(np.max(np.abs(v2)))):
            v3 = _heat_fixed(q, k, chunk, 4 * panels)
            resolved = np.abs(v3) >= 1e8 * noise
            err = float(np.max(np.abs(v2 - v3) * resolved, initial=0.0))
            if err > max(spec.abs_tol, spec.rel_tol * float(np.max(np.abs(v3)))):
                raise NumericalError(
                    f"heat kernel rule not converged at q={q}, k={k}", err_estimate=err
                )
            v2 = v3
        jmax = -(-(k + 1) // 8) * 8
        for i in np.flatnonzero(~resolved):
            si = float(chunk[i])
            v2[i] = _heat_series_row(q, si, jmax)[k] if si <= _SERIES_T_MAX else 0.0
        out[order[start:stop]] = v2
        start = stop
    return _clamp(out, spec)


def _clamp(values, spec: QuadratureSpec):
    values = np.asarray(values, dtype=float)
    bad = values < -spec.abs_tol
    if np.any(bad):
        raise NumericalError(
            f"kernel value negative beyond tolerance: {values[bad].min():.3e}"
        )
    return np.maximum(values, 0.0)


def heat_kernel(q: int, t: float, k: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """H_t(k) on the degree-(q+1) tree; q = 1 routes to the Bessel form."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if q == 1:
        return heat_kernel_Z(t, k)
    return float(heat_kernel_many(q, k, [t], spec)[0])


def heat_kernel_Z(t: float, k: int) -> float:
    """exp(-t) I_k(t): the heat kernel on the integer line."""
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    return float(bessel_i_scaled(k, t))


def _heat_peak_time(q: int, k: int) -> float:
    """Rough location of the maximum of s -> H_s(k); grid seeding only."""
    if k == 0:
        return 1.0
    if q == 1:
        return float(k)
    b = 1.0 - 2.0 * math.sqrt(q) / (q + 1.0)
    return max(1.0, k / max(4.0 * b, 1.0))


def stable_kernel(
    q: int, alpha: float, t: float, k: int, spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    """P_t^alpha(k) = int_0^inf f_{alpha,t}(s) H_s(k) ds."""
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must be in (0, 2), got {alpha}")
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    beta = alpha / 2.0
    tau = t ** (1.0 / beta)  # t^{2/alpha}

    def integrand(y):
        y = np.asarray(y, dtype=float)
        dens = np.array([_f1(beta, float(yi)) for yi in y])
        out = np.zeros_like(y)
        live = dens > 0.0
        if np.any(live):
            out[live] = dens[live] * heat_kernel_many(q, k, tau * y[live], spec)
        return out

    bp = [0.5, 1.0, 2.0, _heat_peak_time(q, k) / tau]
    val, _ = integrate(integrand, 0.0, math.inf, spec, initial_panels=16, breakpoints=bp)
    return float(_clamp(np.array([val]), spec)[0])


def wave_kernel(
    q: int, nu: float, t: float, k: int, spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    """T_t^nu(k): Gamma-weighted time mixture of the heat kernel.

    In w = v^nu for the substitution v = t^2/(4s):
    T_t^nu(k) = (1/Gamma(nu+1)) int_0^inf e^{-w^{1/nu}} H_{t^2/(4 w^{1/nu})}(k) dw.
    """
    if nu <= 0:
        raise ValueError(f"nu must be > 0, got {nu}")
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    inv_nu = 1.0 / nu

    def integrand(w):
        w = np.asarray(w, dtype=float)
        out = np.zeros_like(w)
        with np.errstate(over="ignore", divide="ignore"):
            v = np.where(w > 0, w, 1.0) ** inv_nu
            s = t * t / (4.0 * v)
        live = (w > 0) & np.isfinite(v) & (s > 0) & np.isfinite(s)
        if np.any(live):
            out[live] = np.exp(-v[live]) * heat_kernel_many(q, k, s[live], spec)
        return out

    s_peak = _heat_peak_time(q, k)
    w_peak = (t * t / (4.0 * s_peak)) ** nu
    bp = sorted({w_peak, min(1.0, 4.0 * w_peak), 1.0})
    val, _ = integrate(integrand, 0.0, math.inf, spec, initial_panels=16, breakpoints=bp)
    val /= math.gamma(nu + 1.0)
    return float(_clamp(np.array([val]), spec)[0])


def comparator_Z(alpha: float, t: float, k: int) -> float:
    """The closed-form comparison kernel t |k|^(-1-alpha) on the line (1 at 0)."""
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must be in (0, 2), got {alpha}")
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    if k == 0:
        return 1.0
    return t * float(abs(k)) ** (-1.0 - alpha)


def kernel_value(
    q: int, family: KernelFamily, t: float, k: int, spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    if family.kind == "heat":
        return heat_kernel(q, t, k, spec)
    if family.kind == "stable":
        return stable_kernel(q, family.alpha, t, k, spec)
    return wave_kernel(q, family.nu, t, k, spec)


@dataclass(frozen=True)
class RadialKernel:
    """Tabulated k -> K_t(k) on a ball, with a certified mass tail bound."""

    geom: TreeGeometry
    family: KernelFamily
    t: float
    values: tuple[float, ...]
    tail_bound: float

    def value(self, k: int) -> float:
        if not 0 <= k <= self.geom.radius:
            raise ValueError(f"k={k} outside table radius {self.geom.radius}")
        return self.values[k]

    def mass(self) -> float:
        return sum(
            sphere_size(self.geom, k) * v for k, v in enumerate(self.values)
        )


def _tail_bound(geom: TreeGeometry, terms: np.ndarray, spec: QuadratureSpec) -> float:
    """Bound sum_{k>radius} sphere_size(k) K(k) from the computed mass terms.

    Geometric fit when the empirical ratio stays below 0.9 (heat-like decay),
    otherwise a fitted power-law majorant with a safety factor; families with
    genuinely heavy radial tails (stable, wave) land in the second branch.
    """
    r = geom.radius
    if r < 4:
        raise NumericalError("radius too small for tail certification")
    tail_terms = terms[-3:]
    total = float(terms.sum())
    if float(tail_terms.max()) <= max(1e-13, 1e-12 * total):
        # boundary terms are at numerical noise scale; the tail is negligible
        return float(max(spec.abs_tol, 5.0 * tail_terms.max()))
    ratios = terms[-3:] / np.maximum(terms[-4:-1], 1e-300)
    rho = float(ratios.max())
    if rho < 0.9:
        return float(terms[-1] * rho / (1.0 - rho))
    window = min(8, r // 2)
    ks = np.arange(r - window + 1, r + 1, dtype=float)
    ms = terms[-window:]
    if np.any(ms <= 0):
        raise NumericalError("cannot certify tail: vanishing terms with slow decay")
    slope = float(np.polyfit(np.log(ks), np.log(ms), 1)[0])
    if slope > -1.05:
        raise NumericalError(
            f"mass terms decay too slowly (slope {slope:.3f}); increase radius"
        )
    c = float(np.max(ms / ks**slope)) * 2.0
    return c * r ** (slope + 1.0) / (-slope - 1.0)


_TABLE_CACHE: dict = {}
_TABLE_LOCK = threading.Lock()


def tabulate(
    geom: TreeGeometry,
    family: KernelFamily,
    t: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> RadialKernel:
    """Tabulate K_t(k) for 0 <= k <= radius with a certified tail bound."""
    key = (geom, family, t, spec)
    with _TABLE_LOCK:
        hit = _TABLE_CACHE.get(key)
    if hit is not None:
        return hit
    values = np.array(
        [kernel_value(geom.q, family, t, k, spec) for k in range(geom.radius + 1)]
    )
    values = _clamp(values, spec)
    terms = np.array(
        [sphere_size(geom, k) * v for k, v in enumerate(values)]
    )
    bound = _tail_bound(geom, terms, spec)
    kernel = RadialKernel(geom, family, t, tuple(float(v) for v in values), bound)
    with _TABLE_LOCK:
        _TABLE_CACHE.setdefault(key, kernel)
    return kernel


def radial_convolve(q: int, a, b, k: int) -> float:
    """(A * B)(k) = sum_z A(d(o, z)) B(d(x, z)) for radial tables A, B.

    Uses the joint distance census of the o-x geodesic; A and B must extend
    far enough that every census entry is covered (len(a) + len(b) > 2k not
    required, but truncation is the caller's responsibility).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    total = 0.0
    for i, row in radial_distance_counts(q, k, len(a) - 1).items():
        for j, cnt in row.items():
            if j < len(b):
                total += cnt * a[i] * b[j]
    return total


def write_kernel_csv(kernel: RadialKernel, fh) -> None:
    """CSV schema: metadata comment line, then k,sphere_size,value,cumulative_mass."""
    fam = kernel.family
    params = ""
    if fam.kind == "stable":
        params = f"alpha={fam.alpha:.17g}"
    elif fam.kind == "wave":
        params = f"nu={fam.nu:.17g}"
    fh.write(
        f"# q={kernel.geom.q},family={fam.kind},params={params},"
        f"t={kernel.t:.17g},tail_bound={kernel.tail_bound:.17g}\n"
    )
    fh.write("k,sphere_size,value,cumulative_mass\n")
    cum = 0.0
    for k, v in enumerate(kernel.values):
        sz = sphere_size(kernel.geom, k)
        cum += sz * v
        fh.write(f"{k},{sz},{v:.16e},{cum:.16e}\n")
