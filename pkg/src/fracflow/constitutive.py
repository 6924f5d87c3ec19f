"""Material laws for unsaturated flow.

Implements the dimensionless van Genuchten-Mualem closed forms (saturation,
its derivative, relative conductivity), the Kirchhoff potential
``u = int_0^psi K(S(phi)) dphi`` with its inverse, the energy density
``W(psi) = int_0^psi S'(phi) phi dphi``, and grid-scanned bounds used by the
a-priori estimate checks.  A linear saturation family with closed forms is
provided for tests that need a nondegenerate storage derivative.

Saturation here is dimensionless (volumetric water content divided by the
saturated content), so S = 1 for psi >= 0 and the residual value is
theta_R/theta_S.  The Kirchhoff and energy integrals have no closed form for
van Genuchten and are evaluated from a cached per-segment quadrature table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

__all__ = [
    "TableRangeError",
    "VanGenuchtenParams",
    "VanGenuchtenModel",
    "LinearModel",
    "BoundsReport",
    "LookupTable",
    "MATRIX_SOIL",
    "FRACTURE_SOIL",
]


class TableRangeError(ValueError):
    """Raised when a head or potential falls outside the tabulated range."""


@dataclass(frozen=True)
class VanGenuchtenParams:
    """Van Genuchten-Mualem parameter set.

    Parameters
    ----------
    alpha : float
        Inverse capillary length scale (dimensionless after scaling by the
        reference length).
    n : float
        Pore-size distribution exponent, must exceed 1.  The Mualem exponent
        is m = 1 - 1/n.
    theta_S : float
        Saturated volumetric water content.
    theta_R : float
        Residual volumetric water content.
    K_S : float
        Saturated hydraulic conductivity in m/s.  Only ratios of K_S between
        materials enter the dimensionless problem.
    """

    alpha: float
    n: float
    theta_S: float
    theta_R: float
    K_S: float

    def __post_init__(self) -> None:
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.n <= 1.0:
            raise ValueError("n must exceed 1")
        if not 0.0 <= self.theta_R < self.theta_S:
            raise ValueError("need 0 <= theta_R < theta_S")
        if self.K_S <= 0.0:
            raise ValueError("K_S must be positive")

    @property
    def m(self) -> float:
        return 1.0 - 1.0 / self.n

    @property
    def residual_saturation(self) -> float:
        """Dimensionless residual saturation theta_R/theta_S."""
        return self.theta_R / self.theta_S


@dataclass(frozen=True)
class LookupTable:
    """Monotone quadrature table backing an integral transform.

    ``values`` holds the cumulative integral anchored at the lowest node
    rather than at 0: anchoring on the left keeps the entries strictly
    increasing in float64 even where the integrand is 20 orders of
    magnitude below its peak (increments stay a bounded relative fraction
    of the accumulated mass).  The transform itself is
    ``values - anchor``; ``anchor`` is the entry at psi = 0.
    """

    psi: np.ndarray
    values: np.ndarray
    anchor: float
    psi_range: tuple[float, float]
    resolution: int


@dataclass(frozen=True)
class BoundsReport:
    """Scanned bounds of S' and K over a head interval.

    ``m_S`` = 0 flags a degenerate interval (it contains saturated states
    where the storage derivative vanishes).  ``M_psi`` is the linear-growth
    constant max(M_rho, M_f/m_S) of the L-infinity estimate; it is only
    filled when the source and initial-head bounds are supplied and the
    interval is nondegenerate.
    """

    psi_interval: tuple[float, float]
    m_S: float
    M_S: float
    m_K: float
    M_K: float
    degenerate: bool
    source_bound: float | None = None
    initial_bound: float | None = None
    M_psi: float | None = None


def _scan_bounds(model, psi_interval, source_bound, initial_bound, points):
    lo, hi = float(psi_interval[0]), float(psi_interval[1])
    if not lo < hi:
        raise ValueError("psi_interval must be a nondegenerate interval")
    xs = np.linspace(lo, hi, points)
    sp = model.d_saturation(xs)
    k = model.rel_conductivity(psi=xs)
    m_S = float(sp.min())
    M_S = float(sp.max())
    degenerate = not m_S > 0.0
    M_psi = None
    if source_bound is not None and initial_bound is not None and not degenerate:
        M_psi = max(float(initial_bound), float(source_bound) / m_S)
    return BoundsReport(
        psi_interval=(lo, hi),
        m_S=m_S,
        M_S=M_S,
        m_K=float(k.min()),
        M_K=float(k.max()),
        degenerate=degenerate,
        source_bound=source_bound,
        initial_bound=initial_bound,
        M_psi=M_psi,
    )


# ---------------------------------------------------------------------------
# cumulative quadrature table shared by the Kirchhoff and energy integrals
# ---------------------------------------------------------------------------

_GX32, _GW32 = np.polynomial.legendre.leggauss(32)
_GX16, _GW16 = np.polynomial.legendre.leggauss(16)

# per-segment agreement required between the 16- and 32-point rules before
# falling back to adaptive quadrature; keeps the cumulative error well under
# the 1e-10 budget of the table
_SEGMENT_TOL = 1e-13


def _gauss_panel(fn, a, b, gx, gw):
    """Fixed-order Gauss-Legendre integrals of fn over segments [a, b]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    pts = mid[..., None] + half[..., None] * gx
    return (fn(pts) * gw).sum(axis=-1) * half


class _CumulativeTable:
    """Left-anchored cumulative integral of ``fn`` over a fixed node set.

    Values are anchored at the lowest node so that increments stay a healthy
    relative fraction of the accumulated value even where the integrand is
    many orders of magnitude below its peak.  Evaluation at an arbitrary
    point adds a fixed-order Gauss panel over the partial segment.
    """

    def __init__(self, fn, nodes):
        self.fn = fn
        self.nodes = nodes
        seg32 = _gauss_panel(fn, nodes[:-1], nodes[1:], _GX32, _GW32)
        seg16 = _gauss_panel(fn, nodes[:-1], nodes[1:], _GX16, _GW16)
        bad = np.nonzero(np.abs(seg32 - seg16) > _SEGMENT_TOL)[0]
        for i in bad:
            seg32[i] = quad(
                lambda t: float(fn(np.asarray([t]))[0]),
                nodes[i],
                nodes[i + 1],
                epsabs=1e-13,
                limit=200,
            )[0]
        self.cum = np.concatenate([[0.0], np.cumsum(seg32)])
        # anchor index of 0.0, which is a node by construction
        self.zero_index = int(np.searchsorted(nodes, 0.0))
        self.anchor = float(self.cum[self.zero_index])

    def evaluate(self, x):
        """Integral of fn from 0 to x (x within the node range)."""
        xa = np.asarray(x, dtype=float)
        lo, hi = self.nodes[0], self.nodes[-1]
        if np.any(xa < lo) or np.any(xa > hi):
            raise TableRangeError(
                f"value outside tabulated range [{lo}, {hi}]; widen the table"
            )
        idx = np.clip(np.searchsorted(self.nodes, xa, side="right") - 1,
                      0, len(self.nodes) - 2)
        partial = _gauss_panel(self.fn, self.nodes[idx], xa, _GX32, _GW32)
        out = (self.cum[idx] - self.anchor) + partial
        return float(out) if np.isscalar(x) or xa.ndim == 0 else out

    def anchored(self, x):
        """Integral from the lowest node to x (strictly increasing values)."""
        return self.evaluate(x) + self.anchor


def _table_nodes(lo, hi, count):
    """Node set with ``count`` nodes on [lo, hi], 0 included exactly."""
    if not lo < 0.0 < hi:
        raise ValueError("table range must contain 0 in its interior")
    if count < 16:
        raise ValueError("table needs at least 16 nodes")
    n_seg = count - 1
    n_neg = max(1, min(n_seg - 1, round(n_seg * (0.0 - lo) / (hi - lo))))
    neg = np.linspace(lo, 0.0, n_neg + 1)
    pos = np.linspace(0.0, hi, n_seg - n_neg + 1)
    return np.concatenate([neg[:-1], pos])


class VanGenuchtenModel:
    """Closed-form material laws plus tabulated Kirchhoff/energy integrals.

    Parameters
    ----------
    params : VanGenuchtenParams
    table_range : (float, float)
        Head interval covered by the Kirchhoff and energy tables.
    table_nodes : int
        Number of table nodes (0 is always one of them).
    regularization_floor : float
        Heads below this value are evaluated with the asymptotic power-law
        tail of the closed forms instead of the full expression.

    The instance is immutable after construction and safe for concurrent
    reads; the tables are built eagerly.
    """

    def __init__(self, params: VanGenuchtenParams,
                 table_range=(-50.0, 10.0), table_nodes=4096,
                 regularization_floor=-1.0e12):
        self.params = params
        self.table_range = (float(table_range[0]), float(table_range[1]))
        self.table_nodes = int(table_nodes)
        self.regularization_floor = float(regularization_floor)
        nodes = _table_nodes(self.table_range[0], self.table_range[1],
                             self.table_nodes)
        self._kirchhoff_table = _CumulativeTable(
            lambda p: self.rel_conductivity(psi=p), nodes)
        self._energy_table = _CumulativeTable(
            lambda p: self.d_saturation(p) * p, nodes)

    # -- closed forms -------------------------------------------------------

    def _theta_eff(self, psi):
        """Effective saturation (1 + (-alpha psi)^n)^(-m), clipped at 1."""
        p = self.params
        x = np.minimum(np.asarray(psi, dtype=float), 0.0)
        floor = self.regularization_floor
        xsafe = np.maximum(x, floor)
        g = np.power(-p.alpha * xsafe, p.n)
        theta = np.power(1.0 + g, -p.m)
        tail = np.power(-p.alpha * np.minimum(x, floor), p.n * -p.m,
                        where=x < floor, out=np.zeros_like(x))
        return np.where(x < floor, tail, theta)

    def saturation(self, psi):
        """Dimensionless saturation S(psi); 1 on the saturated branch."""
        p = self.params
        sr = p.residual_saturation
        psi_a = np.asarray(psi, dtype=float)
        s = sr + (1.0 - sr) * self._theta_eff(psi_a)
        s = np.where(psi_a > 0.0, 1.0, s)
        return float(s) if np.isscalar(psi) or psi_a.ndim == 0 else s

    def d_saturation(self, psi):
        """Storage derivative dS/dpsi, analytic on psi <= 0, zero above."""
        p = self.params
        sr = p.residual_saturation
        psi_a = np.asarray(psi, dtype=float)
        x = np.minimum(psi_a, 0.0)
        floor = self.regularization_floor
        xsafe = np.maximum(x, floor)
        ax = -p.alpha * xsafe
        g = np.power(ax, p.n)
        core = np.power(ax, p.n - 1.0) * np.power(1.0 + g, -p.m - 1.0)
        # asymptotic tail below the floor: theta ~ (-alpha psi)^(-n m)
        axt = -p.alpha * np.minimum(x, floor)
        tail = np.power(axt, -p.n * p.m - 1.0, where=x < floor,
                        out=np.zeros_like(x))
        core = np.where(x < floor, tail, core)
        ds = (1.0 - sr) * p.m * p.n * p.alpha * core
        ds = np.where(psi_a > 0.0, 0.0, ds)
        return float(ds) if np.isscalar(psi) or psi_a.ndim == 0 else ds

    def rel_conductivity(self, s=None, *, psi=None):
        """Mualem relative conductivity, from saturation or from head.

        Exactly one of ``s`` (dimensionless saturation) and ``psi`` must be
        given.  Saturation input outside [theta_R/theta_S, 1] raises a
        ValueError; head input uses the numerically stable evaluation on the
        unsaturated branch and returns 1 for psi > 0.
        """
        p = self.params
        if (s is None) == (psi is None):
            raise ValueError("pass exactly one of s and psi")
        if psi is not None:
            psi_a = np.asarray(psi, dtype=float)
            x = np.minimum(psi_a, 0.0)
            floor = self.regularization_floor
            xsafe = np.maximum(x, floor)
            g = np.power(-p.alpha * xsafe, p.n)
            # theta^(1/m) is 1/(1+g) exactly; avoids cancellation at low theta
            t1m = 1.0 / (1.0 + g)
            theta = np.power(t1m, p.m)
            k = np.sqrt(theta) * (1.0 - np.power(g * t1m, p.m)) ** 2
            axt = -p.alpha * np.minimum(x, floor)
            ttail = np.power(axt, -p.n * p.m, where=x < floor,
                             out=np.zeros_like(x))
            t1mt = np.power(axt, -p.n, where=x < floor, out=np.zeros_like(x))
            ktail = np.sqrt(ttail) * (p.m * t1mt) ** 2
            k = np.where(x < floor, ktail, k)
            k = np.where(psi_a > 0.0, 1.0, k)
            return float(k) if np.isscalar(psi) or psi_a.ndim == 0 else k
        s_a = np.asarray(s, dtype=float)
        sr = p.residual_saturation
        slack = 1e-12
        if np.any(s_a < sr - slack) or np.any(s_a > 1.0 + slack):
            raise ValueError(
                f"saturation outside [{sr}, 1]; got range "
                f"[{s_a.min()}, {s_a.max()}]")
        theta = np.clip((s_a - sr) / (1.0 - sr), 0.0, 1.0)
        k = np.sqrt(theta) * (1.0 - (1.0 - theta ** (1.0 / p.m)) ** p.m) ** 2
        return float(k) if np.isscalar(s) or s_a.ndim == 0 else k

    # -- integral transforms ------------------------------------------------

    @property
    def kirchhoff_table(self) -> LookupTable:
        t = self._kirchhoff_table
        return LookupTable(psi=t.nodes, values=t.cum, anchor=t.anchor,
                           psi_range=self.table_range,
                           resolution=len(t.nodes))

    def kirchhoff(self, psi):
        """Kirchhoff potential u(psi) = int_0^psi K(S(phi)) dphi."""
        return self._kirchhoff_table.evaluate(psi)

    def kirchhoff_inv(self, u):
        """Head psi with kirchhoff(psi) = u, by bracketing plus Newton.

        The bracket comes from the monotone table; Newton steps use the
        integrand as the exact derivative and fall back to bisection
        whenever they leave the bracket.
        """
        u_a = np.asarray(u, dtype=float)
        if u_a.ndim > 0:
            return np.array([self.kirchhoff_inv(float(v)) for v in u_a])
        table = self._kirchhoff_table
        target = float(u_a) + table.anchor
        cum = table.cum
        if target < cum[0] - 1e-12 or target > cum[-1] + 1e-12:
            raise TableRangeError(
                "potential outside the range of the tabulated transform")
        target = min(max(target, cum[0]), cum[-1])
        i = int(np.clip(np.searchsorted(cum, target) - 1, 0, len(cum) - 2))
        lo, hi = table.nodes[i], table.nodes[i + 1]
        # secant-style initial guess from the bracketing segment
        dv = cum[i + 1] - cum[i]
        x = lo + (hi - lo) * ((target - cum[i]) / dv if dv > 0.0 else 0.5)
        for _ in range(80):
            f = table.anchored(x) - target
            if f == 0.0:
                break
            if f > 0.0:
                hi = x
            else:
                lo = x
            d = self.rel_conductivity(psi=x)
            step = f / d if d > 0.0 else np.inf
            x_new = x - step
            if not lo < x_new < hi:
                x_new = 0.5 * (lo + hi)
            if hi - lo <= 1e-14 * max(1.0, abs(x)):
                x = x_new
                break
            x = x_new
        return float(x)

    def b_of_u(self, u):
        """Saturation as a function of the Kirchhoff potential."""
        return self.saturation(self.kirchhoff_inv(u))

    def energy_w(self, psi):
        """Energy density W(psi) = int_0^psi S'(phi) phi dphi, >= 0."""
        return self._energy_table.evaluate(psi)

    def bounds_report(self, psi_interval, source_bound=None,
                      initial_bound=None, points=10001) -> BoundsReport:
        """Dense-scan bounds of S' and K over ``psi_interval``."""
        return _scan_bounds(self, psi_interval, source_bound, initial_bound,
                            points)


# Bundled benchmark materials: a silty matrix and a coarse, sharply drained
# fill for the fracture.  Their K_S ratio (about 61) and theta_S ratio
# (about 1.18) set the default conductivity and storage proportionality
# constants of the two-material problem.
MATRIX_SOIL = VanGenuchtenParams(
    alpha=0.423, n=2.06, theta_S=0.396, theta_R=0.131, K_S=5.74e-7)
FRACTURE_SOIL = VanGenuchtenParams(
    alpha=0.5, n=7.09, theta_S=0.469, theta_R=0.190, K_S=3.507e-5)


class LinearModel:
    """Linear saturation family with constant conductivity.

    S(psi) = intercept + slope * psi with slope > 0, K identically
    ``conductivity``.  Every transform has a closed form, storage never
    degenerates, and the Picard linearization is exact, which makes this
    family the workhorse of the structural solver tests.  Saturation values
    are not confined to [0, 1]; the family exists for analysis, not physics.
    """

    def __init__(self, slope=1.0, intercept=0.0, conductivity=1.0):
        if slope <= 0.0:
            raise ValueError("slope must be positive")
        if not 0.0 < conductivity <= 1.0:
            raise ValueError("conductivity must lie in (0, 1]")
        self.slope = float(slope)
        self.intercept = float(intercept)
        self.conductivity = float(conductivity)

    def saturation(self, psi):
        psi_a = np.asarray(psi, dtype=float)
        s = self.intercept + self.slope * psi_a
        return float(s) if np.isscalar(psi) or psi_a.ndim == 0 else s

    def d_saturation(self, psi):
        psi_a = np.asarray(psi, dtype=float)
        ds = np.full_like(psi_a, self.slope)
        return float(ds) if np.isscalar(psi) or psi_a.ndim == 0 else ds

    def rel_conductivity(self, s=None, *, psi=None):
        if (s is None) == (psi is None):
            raise ValueError("pass exactly one of s and psi")
        ref = psi if psi is not None else s
        ref_a = np.asarray(ref, dtype=float)
        k = np.full_like(ref_a, self.conductivity)
        return float(k) if np.isscalar(ref) or ref_a.ndim == 0 else k

    def kirchhoff(self, psi):
        psi_a = np.asarray(psi, dtype=float)
        u = self.conductivity * psi_a
        return float(u) if np.isscalar(psi) or psi_a.ndim == 0 else u

    def kirchhoff_inv(self, u):
        u_a = np.asarray(u, dtype=float)
        x = u_a / self.conductivity
        return float(x) if np.isscalar(u) or u_a.ndim == 0 else x

    def b_of_u(self, u):
        return self.saturation(self.kirchhoff_inv(u))

    def energy_w(self, psi):
        psi_a = np.asarray(psi, dtype=float)
        w = 0.5 * self.slope * psi_a ** 2
        return float(w) if np.isscalar(psi) or psi_a.ndim == 0 else w

    def bounds_report(self, psi_interval, source_bound=None,
                      initial_bound=None, points=10001) -> BoundsReport:
        return _scan_bounds(self, psi_interval, source_bound, initial_bound,
                            points)
