"""Rotationally symmetric model manifolds and comparison geometry.

A manifold with a pole is realized as the warped product
``g = dr^2 + f(r)^2 g_sphere`` where the warping function solves
``f'' + K(r) f = 0, f(0) = 0, f'(0) = 1`` for a radial curvature profile K.
On such a metric the Hessian of ``r^2`` is diagonal with eigenvalue 2 in the
radial direction and ``2 r f'/f`` (multiplicity m-1) tangentially.
"""

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
import math

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import gamma

from . import io
from .errors import BoundViolated, EmptyWindow, HypothesisFailed, PoleViolation, TailDiverges

KINDS = ("euclidean", "constant", "pinched", "power_decay", "asymptotically_flat", "table")

# Gauss-Legendre rule used for every cell integral; exact for polynomials of degree 15.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


@lru_cache(maxsize=None)
def unit_sphere_area(m):
    """(m-1)-volume of the unit sphere in R^m."""
    if m < 1:
        raise ValueError("dimension must be >= 1")
    return 2.0 * math.pi ** (m / 2.0) / gamma(m / 2.0)


def _x_coth(x):
    """x*coth(x), continuous at 0."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    small = np.abs(x) < 1e-4
    xs = x[small]
    out[small] = 1.0 + xs**2 / 3.0 - xs**4 / 45.0
    xl = x[~small]
    out[~small] = xl / np.tanh(xl)
    return out


@dataclass(frozen=True)
class CurvatureProfile:
    """A radial curvature profile K(r), possibly a concrete choice inside a band.

    For the banded kinds (pinched, power_decay, asymptotically_flat) the
    concrete curvature is ``lo + envelope * (hi - lo)``; ``envelope=0`` (the
    default) selects the lower envelope, which maximizes f.
    """

    kind: str
    K: float = 0.0
    alpha: float = 1.0
    beta: float = 1.0
    A: float = 0.0
    B: float = 0.0
    decay: float = 1.0
    a: float = 0.0
    b: float = 0.0
    envelope: float = 0.0
    table_r: tuple = field(default=(), repr=False)
    table_K: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown curvature kind {self.kind!r}; expected one of {KINDS}")
        if not 0.0 <= self.envelope <= 1.0:
            raise ValueError("envelope must lie in [0, 1]")
        if self.kind == "pinched" and not (0.0 < self.beta <= self.alpha):
            raise ValueError("pinched profile requires 0 < beta <= alpha")
        if self.kind == "power_decay" and (self.A < 0 or self.B < 0 or self.decay <= 0):
            raise ValueError("power_decay requires A >= 0, B >= 0, decay > 0")
        if self.kind == "asymptotically_flat" and (self.a < 0 or not 0.0 <= self.b**2 <= 0.25):
            raise ValueError("asymptotically_flat requires a >= 0 and b^2 in [0, 1/4]")
        if self.kind == "table":
            r = np.asarray(self.table_r, dtype=float)
            if r.ndim != 1 or r.size < 2 or np.any(np.diff(r) <= 0) or len(self.table_K) != r.size:
                raise ValueError("table profile needs strictly increasing radii and matching K values")

    # constructors -------------------------------------------------------------
    @classmethod
    def euclidean(cls):
        return cls("euclidean")

    @classmethod
    def constant(cls, K):
        return cls("constant", K=float(K))

    @classmethod
    def pinched(cls, alpha, beta, envelope=0.0):
        return cls("pinched", alpha=float(alpha), beta=float(beta), envelope=envelope)

    @classmethod
    def power_decay(cls, A, B, decay, envelope=0.0):
        return cls("power_decay", A=float(A), B=float(B), decay=float(decay), envelope=envelope)

    @classmethod
    def asymptotically_flat(cls, a, b, envelope=0.0):
        return cls("asymptotically_flat", a=float(a), b=float(b), envelope=envelope)

    @classmethod
    def table(cls, r, K):
        return cls("table", table_r=tuple(float(x) for x in r), table_K=tuple(float(x) for x in K))

    # curvature ----------------------------------------------------------------
    def band(self, r):
        """Lower and upper curvature envelopes at radii ``r``."""
        r = np.asarray(r, dtype=float)
        if self.kind == "euclidean":
            lo = hi = np.zeros_like(r)
        elif self.kind == "constant":
            lo = hi = np.full_like(r, self.K)
        elif self.kind == "pinched":
            lo, hi = np.full_like(r, -self.alpha**2), np.full_like(r, -self.beta**2)
        elif self.kind == "power_decay":
            w = (1.0 + r * r) ** (1.0 + self.decay)
            lo, hi = -self.A / w, self.B / w
        elif self.kind == "asymptotically_flat":
            w = 1.0 + r * r
            lo, hi = -self.a**2 / w, self.b**2 / w
        else:
            lo = hi = np.interp(r, self.table_r, self.table_K)
        return lo, hi

    def __call__(self, r):
        lo, hi = self.band(r)
        return lo + self.envelope * (hi - lo)

    def default_case(self):
        if self.kind == "pinched" or (self.kind == "constant" and self.K < 0):
            return "i"
        if self.kind == "power_decay":
            return "ii"
        if self.kind == "asymptotically_flat" or self.kind == "euclidean" or (
                self.kind == "constant" and self.K == 0):
            return "iii"
        return None

    def case_parameters(self, case=None):
        """Return ``(case_id, params)`` describing which comparison case applies."""
        case = case or self.default_case()
        flat = self.kind == "euclidean" or (self.kind == "constant" and self.K == 0)
        if case == "i":
            if self.kind == "pinched":
                return "i", {"alpha": self.alpha, "beta": self.beta}
            if self.kind == "constant" and self.K < 0:
                s = math.sqrt(-self.K)
                return "i", {"alpha": s, "beta": s}
        elif case == "ii":
            if self.kind == "power_decay":
                return "ii", {"A": self.A, "B": self.B, "decay": self.decay}
            if flat:
                return "ii", {"A": 0.0, "B": 0.0, "decay": self.decay}
        elif case == "iii":
            if self.kind == "asymptotically_flat":
                return "iii", {"a": self.a, "b": self.b}
            if flat:
                return "iii", {"a": 0.0, "b": 0.0}
        raise HypothesisFailed(f"{self.kind} profile does not fit curvature case {case!r}")


@dataclass(frozen=True, eq=False)
class WarpingTable:
    """Warping function tabulated on a uniform grid ``r_0 = 0 < ... < r_N``."""

    r: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    m: int
    profile: CurvatureProfile = None

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("domain dimension m must be >= 2")
        if not (self.r.shape == self.f.shape == self.fp.shape) or self.r.ndim != 1:
            raise ValueError("r, f, f' must be 1-D arrays of equal length")
        if self.r[0] != 0.0 or np.any(np.diff(self.r) <= 0):
            raise ValueError("grid must start at 0 and increase strictly")
        if self.f[0] != 0.0 or abs(self.fp[0] - 1.0) > 1e-12:
            raise ValueError("pole condition requires f(0)=0, f'(0)=1")

    @property
    def h(self):
        return float(self.r[1] - self.r[0])

    @property
    def n_steps(self):
        return self.r.size - 1

    @property
    def r_max(self):
        return float(self.r[-1])

    @property
    def omega(self):
        return unit_sphere_area(self.m)

    @cached_property
    def spline(self):
        return CubicHermiteSpline(self.r, self.f, self.fp)

    @cached_property
    def r_dlogf(self):
        """r f'/f per node, set to its limit 1 at the pole."""
        out = np.ones_like(self.r)
        out[1:] = self.r[1:] * self.fp[1:] / self.f[1:]
        return out

    @cached_property
    def dlogf(self):
        """f'/f per node; the pole entry is +inf."""
        out = np.full_like(self.r, np.inf)
        out[1:] = self.fp[1:] / self.f[1:]
        return out

    # volume weights ------------------------------------------------------------
    def area_at(self, r):
        return self.omega * self.spline(np.asarray(r, dtype=float)) ** (self.m - 1)

    @cached_property
    def area(self):
        return self.omega * self.f ** (self.m - 1)

    @cached_property
    def r_mid(self):
        return 0.5 * (self.r[1:] + self.r[:-1])

    @cached_property
    def f_mid(self):
        return self.spline(self.r_mid)

    @cached_property
    def area_mid(self):
        return self.omega * self.f_mid ** (self.m - 1)

    def _cell_integral(self, lo, hi, func):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        half = 0.5 * (hi - lo)
        x = 0.5 * (hi + lo)[..., None] + half[..., None] * _GL_X
        return half * np.sum(_GL_W * func(x), axis=-1)

    @cached_property
    def half_volumes(self):
        """Volumes of the left and right half cells around each node.

        ``left[i]`` covers ``[r_i - h/2, r_i]`` and ``right[i]`` covers
        ``[r_i, r_i + h/2]``; both vanish where the interval leaves the grid.
        """
        right = np.zeros_like(self.r)
        left = np.zeros_like(self.r)
        right[:-1] = self._cell_integral(self.r[:-1], self.r_mid, self.area_at)
        left[1:] = self._cell_integral(self.r_mid, self.r[1:], self.area_at)
        return left, right

    @cached_property
    def node_volume(self):
        """Dual-cell volume per node (half cells at both ends)."""
        left, right = self.half_volumes
        return left + right

    @cached_property
    def ball_volumes(self):
        left, right = self.half_volumes
        return np.concatenate([[0.0], np.cumsum(right[:-1] + left[1:])])

    @cached_property
    def _inverse_area_cells(self):
        cells = np.zeros(self.n_steps)
        cells[1:] = self._cell_integral(self.r[1:-1], self.r[2:], lambda x: 1.0 / self.area_at(x))
        return cells

    def to_csv(self, path):
        spec = hessian_spectrum(self)
        return io.write_csv(path, {"r": self.r, "f": self.f, "f_prime": self.fp,
                                   "lambda_tan": spec.lambda_tan})

    @classmethod
    def from_csv(cls, path, m, profile=None):
        cols = io.read_csv(path)
        return cls(cols["r"], cols["f"], cols["f_prime"], m, profile)


def solve_warping(profile, r_max, n_steps, m=3):
    """Integrate ``f'' = -K f`` with classical RK4 on a uniform grid.

    Raises PoleViolation if f reaches zero beyond the origin.
    """
    if r_max <= 0:
        raise ValueError("r_max must be positive")
    if n_steps < 16:
        raise ValueError("n_steps must be >= 16")
    h = r_max / n_steps
    r = np.linspace(0.0, r_max, n_steps + 1)
    K_node = np.asarray(profile(r), dtype=float)
    K_half = np.asarray(profile(r[:-1] + 0.5 * h), dtype=float)
    f = np.empty_like(r)
    fp = np.empty_like(r)
    y0, y1 = 0.0, 1.0
    f[0], fp[0] = y0, y1
    for i in range(n_steps):
        ka, kb, kc = K_node[i], K_half[i], K_node[i + 1]
        k1f, k1p = y1, -ka * y0
        k2f, k2p = y1 + 0.5 * h * k1p, -kb * (y0 + 0.5 * h * k1f)
        k3f, k3p = y1 + 0.5 * h * k2p, -kb * (y0 + 0.5 * h * k2f)
        k4f, k4p = y1 + h * k3p, -kc * (y0 + h * k3f)
        y0 = y0 + h / 6.0 * (k1f + 2 * k2f + 2 * k3f + k4f)
        y1 = y1 + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        if not y0 > 0.0:
            raise PoleViolation(r[i + 1], y0)
        f[i + 1], fp[i + 1] = y0, y1
    return WarpingTable(r, f, fp, int(m), profile)


@dataclass(frozen=True, eq=False)
class HessianSpectrum:
    """Eigenvalues of Hess(r^2): 2 (radial, once) and lambda_tan (m-1 times)."""

    r: np.ndarray
    lambda_tan: np.ndarray
    m: int
    lambda_rad: float = 2.0

    @property
    def multiplicities(self):
        return (1, self.m - 1)

    @property
    def lambda_max(self):
        return np.maximum(self.lambda_rad, self.lambda_tan)

    @property
    def trace(self):
        return self.lambda_rad + (self.m - 1) * self.lambda_tan

    def eigenvalues(self):
        """Sorted eigenvalues per node, shape (N+1, m)."""
        ev = np.empty((self.r.size, self.m))
        ev[:, 0] = self.lambda_rad
        ev[:, 1:] = self.lambda_tan[:, None]
        return np.sort(ev, axis=1)


def hessian_spectrum(warp):
    return HessianSpectrum(warp.r, 2.0 * warp.r_dlogf, warp.m)


@dataclass(frozen=True)
class SigmaBound:
    sigma_numeric: float = None
    sigma_closed: float = None
    case_id: str = None
    p: float = None
    m: int = None
    r_argmin: float = None

    @property
    def sigma(self):
        """The exponent to use: the grid value when available, else the closed form."""
        return self.sigma_numeric if self.sigma_numeric is not None else self.sigma_closed

    @property
    def holds_P1(self):
        s = self.sigma
        return s is not None and s > 0.0


def p1_quantity(spec, p):
    """Pointwise 1/2 (sum of eigenvalues - p * largest eigenvalue)."""
    return 0.5 * (spec.trace - p * spec.lambda_max)


def sigma_numeric(spec, p, r_window=None, profile=None, case=None):
    """Grid infimum of the (P1) quantity over ``r_lo <= r <= r_hi``.

    If ``profile`` is given and one of the closed-form cases applies, the
    closed-form lower bound is attached as well.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    lo, hi = r_window if r_window is not None else (spec.r[0], spec.r[-1])
    mask = (spec.r >= lo) & (spec.r <= hi)
    if not np.any(mask):
        raise EmptyWindow(f"no grid node in window [{lo}, {hi}]")
    q = p1_quantity(spec, p)[mask]
    k = int(np.argmin(q))
    closed, case_id = None, None
    if profile is not None:
        try:
            cf = sigma_closed_form(profile, spec.m, p, case=case)
            closed, case_id = cf.sigma_closed, cf.case_id
        except HypothesisFailed:
            pass
    return SigmaBound(float(q[k]), closed, case_id, float(p), spec.m, float(spec.r[mask][k]))


def sigma_closed_form(profile, m, p, case=None, strict=True):
    """Closed-form lower bound for the (P1) quantity in curvature cases (i)-(iii).

    In case (i) the hypothesis (m-1)*beta - p*alpha > 0 is strict.  With
    ``strict=False`` the boundary value 0 is admitted as well: the comparison
    argument only needs the tangential coefficient to be nonnegative, and the
    bound m - p*alpha/beta stays positive there.
    """
    case_id, c = profile.case_parameters(case)
    if case_id == "i":
        lhs = (m - 1) * c["beta"] - p * c["alpha"]
        if not (lhs > 0 or (not strict and lhs >= 0)):
            raise HypothesisFailed(f"case (i) needs (m-1)*beta - p*alpha > 0, got {lhs:.6g}")
        sigma = m - p * c["alpha"] / c["beta"]
    elif case_id == "ii":
        eps = c["decay"]
        if not 0.0 <= c["B"] < 2.0 * eps:
            raise HypothesisFailed(f"case (ii) needs 0 <= B < 2*decay, got B={c['B']}")
        sigma = 1.0 + (m - 1) * (1.0 - c["B"] / (2 * eps)) - p * math.exp(c["A"] / (2 * eps))
        if not sigma > 0:
            raise HypothesisFailed(
                f"case (ii) needs 1+(m-1)(1-B/2e)-p*exp(A/2e) > 0, got {sigma:.6g}")
    else:
        lhs = (2.0 + (m - 1) * (1.0 + math.sqrt(1.0 - 4 * c["b"] ** 2))
               - p * (1.0 + math.sqrt(1.0 + 4 * c["a"] ** 2)))
        if not lhs > 0:
            raise HypothesisFailed(
                f"case (iii) needs 2+(m-1)(1+sqrt(1-4b^2))-p(1+sqrt(1+4a^2)) > 0, got {lhs:.6g}")
        sigma = lhs / 2.0
    return SigmaBound(None, float(sigma), case_id, float(p), int(m))


def hessian_r_bounds(r, case_id, c):
    """``(r*h1(r), r*h2(r))`` for the Hessian comparison of each case."""
    r = np.asarray(r, dtype=float)
    if case_id == "i":
        return _x_coth(c["beta"] * r), _x_coth(c["alpha"] * r)
    if case_id == "ii":
        e = c["decay"]
        one = np.ones_like(r)
        return (1.0 - c["B"] / (2 * e)) * one, math.exp(c["A"] / (2 * e)) * one
    one = np.ones_like(r)
    return (0.5 * (1 + math.sqrt(1 - 4 * c["b"] ** 2)) * one,
            0.5 * (1 + math.sqrt(1 + 4 * c["a"] ** 2)) * one)


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    case_id: str
    lower_slack: np.ndarray
    upper_slack: np.ndarray
    rh2_slack: np.ndarray
    eigen_slack: np.ndarray

    @property
    def worst(self):
        return {name: float(np.min(getattr(self, name)))
                for name in ("lower_slack", "upper_slack", "rh2_slack", "eigen_slack")}

    @property
    def worst_slack(self):
        return min(self.worst.values())


def comparison_check(warp, profile=None, p=2.0, case=None, tol=1e-8, raise_on_violation=True):
    """Check the Hessian comparison bounds and the eigenvalue-sum bound nodewise.

    All bounds are compared after multiplication by r, so the pole node is
    included through the continuity limits.
    """
    profile = profile if profile is not None else warp.profile
    case_id, c = profile.case_parameters(case)
    rh1, rh2 = hessian_r_bounds(warp.r, case_id, c)
    x = warp.r_dlogf
    spec = hessian_spectrum(warp)
    lhs = spec.trace - p * spec.lambda_max
    rep = ComparisonReport(case_id, x - rh1, rh2 - x, rh2 - 1.0,
                           lhs - 2.0 * (1.0 + (warp.m - 1) * rh1 - p * rh2))
    if raise_on_violation:
        for name in ("lower_slack", "upper_slack", "rh2_slack", "eigen_slack"):
            arr = getattr(rep, name)
            k = int(np.argmin(arr))
            if arr[k] < -tol:
                raise BoundViolated(f"case ({case_id}) {name.replace('_slack', '')} bound",
                                    k, warp.r[k], arr[k])
    return rep


def sphere_area(warp, r):
    """Area of the geodesic sphere of radius r."""
    return float(warp.area_at(r)) if np.ndim(r) == 0 else warp.area_at(r)


def ball_volume(warp, rho):
    """Volume of the geodesic ball of radius rho (rho within the grid)."""
    rho = float(rho)
    if not 0.0 <= rho <= warp.r_max * (1 + 1e-14):
        raise ValueError(f"rho={rho} outside the grid")
    k = min(int(np.searchsorted(warp.r, rho, side="right")) - 1, warp.n_steps)
    base = warp.ball_volumes[k]
    if rho > warp.r[k]:
        base += float(warp._cell_integral(np.array(warp.r[k]), np.array(rho), warp.area_at))
    return float(base)


def tail_integral_parts(warp, r, growth_exponent=1.0):
    """``(quadrature to r_max, analytic tail beyond r_max)`` of ``int_r^inf ds / area(s)``.

    The analytic tail assumes ``area(s) >= area(r_max) (s/r_max)^((m-1) k)`` with
    k the growth exponent of f, which holds with k=1 whenever K <= 0.
    """
    r = float(r)
    if r <= 0.0:
        raise TailDiverges("tail integral from the pole is infinite")
    power = (warp.m - 1) * growth_exponent
    if power <= 1.0:
        raise TailDiverges(f"area grows like s^{power:g}; int ds/area diverges")
    tail = warp.r_max / (warp.area[-1] * (power - 1.0))
    if r >= warp.r_max:
        return 0.0, warp.r_max ** power / (warp.area[-1] * (power - 1.0)) * r ** (1.0 - power)
    k = int(np.searchsorted(warp.r, r, side="right")) - 1
    cells = warp._inverse_area_cells
    quad = float(np.sum(cells[k + 1:]))
    upper = warp.r[k + 1]
    if upper > r:
        quad += float(warp._cell_integral(np.array(r), np.array(upper),
                                          lambda x: 1.0 / warp.area_at(x)))
    return quad, tail


def tail_integral(warp, r, growth_exponent=1.0):
    quad, tail = tail_integral_parts(warp, r, growth_exponent)
    return quad + tail


def tail_profile(warp, growth_exponent=1.0):
    """Tail integral at every grid node (inf at the pole)."""
    power = (warp.m - 1) * growth_exponent
    if power <= 1.0:
        raise TailDiverges(f"area grows like s^{power:g}; int ds/area diverges")
    tail = warp.r_max / (warp.area[-1] * (power - 1.0))
    cells = warp._inverse_area_cells
    rev = np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]])
    out = rev + tail
    out[0] = np.inf
    return out


@dataclass(frozen=True, eq=False)
class VolumeBoundReport:
    case_id: str
    constant: float
    exponent: float
    slack: np.ndarray
    r_ref: float

    @property
    def worst_slack(self):
        return float(np.min(self.slack)) if self.slack.size else 0.0


def volume_bound_check(warp, profile=None, case=None, r_ref=1.0, tol=1e-8, raise_on_violation=True):
    """Check the polynomial volume-growth bounds of cases (ii) and (iii).

    Case (ii): area(r) <= omega_m exp((m-1)A/(2 decay)) r^(m-1) at every node.
    Case (iii): area(r) <= C r^((m-1)A') for r >= r_ref, with C fitted at r_ref.
    Slack is relative: (bound - area) / bound.
    """
    profile = profile if profile is not None else warp.profile
    case_id, c = profile.case_parameters(case)
    m = warp.m
    r = warp.r[1:]
    area = warp.area[1:]
    if case_id == "ii":
        exponent = m - 1.0
        const = warp.omega * math.exp((m - 1) * c["A"] / (2 * c["decay"]))
        sel = np.ones_like(r, dtype=bool)
        r_ref = 0.0
    elif case_id == "iii":
        exponent = (m - 1) * 0.5 * (1 + math.sqrt(1 + 4 * c["a"] ** 2))
        r_ref = min(float(r_ref), warp.r_max)
        k = int(np.argmin(np.abs(r - r_ref)))
        r_ref = float(r[k])
        const = area[k] / r_ref**exponent
        sel = r >= r_ref
    else:
        raise HypothesisFailed("volume bound check applies to cases (ii) and (iii) only")
    bound = const * r[sel] ** exponent
    slack = (bound - area[sel]) / bound
    rep = VolumeBoundReport(case_id, float(const), float(exponent), slack, r_ref)
    if raise_on_violation and slack.size:
        k = int(np.argmin(slack))
        if slack[k] < -tol:
            idx = np.flatnonzero(sel)[k] + 1
            raise BoundViolated(f"case ({case_id}) volume growth bound", idx, warp.r[idx], slack[k])
    return rep
