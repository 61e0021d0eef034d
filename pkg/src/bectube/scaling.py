"""Scaling regimes and the pair interaction.

Houses the (N, eps, beta) bookkeeping with the derived coupling a = eps^2/N
and interaction range mu = a^beta, the classification of parameter sequences
(admissible / moderately / strongly confining), the scaled two-body potential
and its Taylor decomposition in a curved guide, the effective 1D interaction
kernel obtained by integrating out the transverse directions, the mean-field
convolution defect, and the coupling constant of the effective nonlinearity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import RegularGridInterpolator, interp1d
from scipy.signal import fftconvolve
from scipy.stats import qmc

from .geometry import FrameField, TwistSpec, embed
from .transverse import TransverseModes


class ScalingError(ValueError):
    pass


# ---------------------------------------------------------------------------
# scaling points and sequence classification


@dataclass(frozen=True)
class ScalingPoint:
    """One point (N, eps, beta) of the combined mean-field/confinement limit."""

    N: int
    eps: float
    beta: float

    def __post_init__(self):
        if self.N < 1:
            raise ScalingError("N must be >= 1")
        if not 0.0 < self.eps <= 1.0:
            raise ScalingError("eps must lie in (0, 1]")
        if not 0.0 < self.beta < 1.0 / 3.0:
            raise ScalingError("beta must lie strictly inside (0, 1/3)")

    @property
    def a(self) -> float:
        return self.eps**2 / self.N

    @property
    def mu(self) -> float:
        return self.a**self.beta


def scaling_params(N: int, eps: float, beta: float) -> ScalingPoint:
    return ScalingPoint(int(N), float(eps), float(beta))


@dataclass
class Classification:
    admissible: bool
    moderate: bool
    strong: bool
    ratios_admissible: np.ndarray   # eps^{4/3} / mu
    ratios_moderate: np.ndarray     # mu / eps
    ratios_strong: np.ndarray       # eps / mu

    @property
    def neither(self) -> bool:
        return not (self.admissible or self.moderate or self.strong)


def _tail_vanishing(N: np.ndarray, r: np.ndarray) -> bool:
    # computable proxy for r_n -> 0: decreasing over the last half and a
    # negative fitted power-law exponent in N (so slow decays like N^(-0.05)
    # are recognized while sequences stuck at a positive level are not)
    half = len(r) // 2
    tail = r[half:]
    if np.any(np.diff(tail) >= 0):
        return False
    slope = np.polyfit(np.log(N[half:]), np.log(tail), 1)[0]
    return bool(slope < -0.01)


def classify_sequence(points: Sequence[ScalingPoint]) -> Classification:
    """Classify a finite parameter sequence by tail monotonicity.

    The defining conditions are asymptotic; on a finite sequence we require
    strict decrease over the last half plus a negative fitted power-law
    exponent as the computable proxy, and expose the raw ratio series.
    """
    if len(points) < 4:
        raise ScalingError("need at least 4 points to classify a sequence")
    N = np.array([p.N for p in points], dtype=float)
    eps = np.array([p.eps for p in points])
    mu = np.array([p.mu for p in points])
    if not np.all(np.diff(N) > 0):
        raise ScalingError("N must be strictly increasing along the sequence")
    if not np.all(np.diff(eps) < 0):
        raise ScalingError("eps must be strictly decreasing along the sequence")
    r_adm = eps ** (4.0 / 3.0) / mu
    r_mod = mu / eps
    r_str = eps / mu
    admissible = _tail_vanishing(N, r_adm)
    moderate = admissible and _tail_vanishing(N, r_mod)
    strong = admissible and not moderate and _tail_vanishing(N, r_str)
    return Classification(admissible, moderate, strong, r_adm, r_mod, r_str)


# ---------------------------------------------------------------------------
# pair potential


@dataclass(frozen=True)
class PairPotential:
    """Radial pair potential w(r) = wt(|r|^2) supported in the unit ball.

    ``wt`` and its derivative ``dwt`` act on the squared radius; ``mass`` and
    ``first_moment`` are the closed-form integrals of w and |r| w over R^3.
    """

    wt: Callable[[np.ndarray], np.ndarray]
    dwt: Callable[[np.ndarray], np.ndarray]
    mass: float
    first_moment: float

    def __call__(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        s = np.sum(r * r, axis=-1)
        return np.where(s < 1.0, self.wt(np.minimum(s, 1.0)), 0.0)

    def radial(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        s = rho * rho
        return np.where(s < 1.0, self.wt(np.minimum(s, 1.0)), 0.0)

    def scaled(self, factor: float) -> "PairPotential":
        f = float(factor)
        return PairPotential(
            wt=lambda s: f * self.wt(s), dwt=lambda s: f * self.dwt(s),
            mass=f * self.mass, first_moment=f * self.first_moment)


def bump_potential() -> PairPotential:
    """Default C^2 bump: wt(s) = (1-s)^3 on [0,1).

    Closed forms: total mass 64 pi / 315, first moment pi / 10.
    """
    return PairPotential(
        wt=lambda s: np.where(s < 1.0, (1.0 - np.minimum(s, 1.0)) ** 3, 0.0),
        dwt=lambda s: np.where(s < 1.0, -3.0 * (1.0 - np.minimum(s, 1.0)) ** 2, 0.0),
        mass=64.0 * np.pi / 315.0,
        first_moment=np.pi / 10.0,
    )


def validate_potential(w: PairPotential, n_check: int = 257) -> None:
    s = np.linspace(0.0, 2.0, n_check)
    if np.any(w.wt(np.minimum(s, 1.0) * (s < 1.0)) < -1e-14):
        raise ScalingError("pair potential must be nonnegative")
    if np.any(np.abs(w.wt(s[s >= 1.0] * 0 + 1.0)) > 1e-14):
        raise ScalingError("pair potential must vanish outside the unit ball")


def _r_eps(r, eps):
    r = np.asarray(r, dtype=float)
    out = r.copy()
    out[..., 1:] *= eps
    return out


def scaled_pair(w: PairPotential, sp: ScalingPoint,
                frame: FrameField = None, twist: TwistSpec = None):
    """Evaluator of the scaled two-body interaction
    (N-1) (a/mu^3) w((f_eps(r1) - f_eps(r2)) / mu).

    For a straight untwisted guide (frame is None) the embedding is the plain
    coordinate scaling r -> (x, eps y).
    """
    pref = (sp.N - 1) * sp.a / sp.mu**3

    if frame is None:
        def value(r1, r2):
            d = _r_eps(r1, sp.eps) - _r_eps(r2, sp.eps)
            return pref * float(w(d / sp.mu))
    else:
        def value(r1, r2):
            d = (embed(r1, sp.eps, frame, twist)
                 - embed(r2, sp.eps, frame, twist))
            return pref * float(w(d / sp.mu))

    return value


# ---------------------------------------------------------------------------
# Taylor decomposition in the curved guide


def _f_theta(r, frame: FrameField, twist: TwistSpec):
    """Unscaled embedding f(T_theta(r)) for points r = (x, y)."""
    r = np.asarray(r, dtype=float)
    x, y = r[..., 0], r[..., 1:]
    th = np.asarray(twist.theta(x))
    c, s = np.cos(th), np.sin(th)
    ty1 = c * y[..., 0] - s * y[..., 1]
    ty2 = s * y[..., 0] + c * y[..., 1]
    e1, e2 = frame.frame_at(x)
    return (frame.curve.c(x) + ty1[..., None] * e1 + ty2[..., None] * e2)


@dataclass
class TaylorDecomposition:
    """Split of the scaled interaction (per particle-pair, without the N-1
    mean-field prefactor) into a straight-guide part, a first-order
    correction, and the exact remainder."""

    eps: float
    mu: float
    w: PairPotential
    frame: FrameField
    twist: TwistSpec
    rbar: float                     # sampled sup |R| over the support
    rbar_samples: int

    def exact(self, r1, r2):
        d = (_f_theta(_r_eps(r1, self.eps), self.frame, self.twist)
             - _f_theta(_r_eps(r2, self.eps), self.frame, self.twist))
        return self.eps**2 / self.mu**3 * float(self.w(d / self.mu))

    def w0(self, r1, r2):
        d = _r_eps(r1, self.eps) - _r_eps(r2, self.eps)
        return self.eps**2 / self.mu**3 * float(self.w(d / self.mu))

    def _R(self, r1, r2):
        a = _r_eps(r1, self.eps)
        b = _r_eps(r2, self.eps)
        df = _f_theta(b, self.frame, self.twist) - _f_theta(a, self.frame, self.twist)
        return (float(df @ df) - float((b - a) @ (b - a))) / self.mu**2

    def t1(self, r1, r2):
        d = _r_eps(r2, self.eps) - _r_eps(r1, self.eps)
        s = float(d @ d) / self.mu**2
        if s >= 1.0:
            return 0.0
        return self._R(r1, r2) * self.eps**2 / self.mu**3 * float(self.w.dwt(s))

    def t2(self, r1, r2):
        return self.exact(r1, r2) - self.w0(r1, r2) - self.t1(r1, r2)


def taylor_decompose(w: PairPotential, sp: ScalingPoint, frame: FrameField,
                     twist: TwistSpec, y_halfwidth: float = 0.5,
                     n_samples: int = 10_000) -> TaylorDecomposition:
    """Decompose the scaled interaction and sample the remainder supremum.

    The remainder only matters on the interaction support, so ``rbar`` is the
    supremum of |R| over a quasi-random cloud of pairs restricted to
    ||f_eps(r1) - f_eps(r2)|| < mu.
    """
    eps, mu = sp.eps, sp.mu
    margin = 0.05 * (frame.x[-1] - frame.x[0])
    lo, hi = frame.x[0] + margin, frame.x[-1] - margin - 2 * mu

    sampler = qmc.Halton(d=8, seed=7)
    u = sampler.random(n_samples)
    r1 = np.empty((n_samples, 3))
    r1[:, 0] = lo + u[:, 0] * (hi - lo)
    r1[:, 1] = (2 * u[:, 1] - 1) * y_halfwidth
    r1[:, 2] = (2 * u[:, 2] - 1) * y_halfwidth
    # offsets on the interaction scale: dx ~ mu, dy ~ mu/eps (clipped to the box)
    r2 = r1.copy()
    r2[:, 0] += (2 * u[:, 3] - 1) * 1.2 * mu
    dy_scale = min(1.2 * mu / eps, 2 * y_halfwidth)
    r2[:, 1] = np.clip(r1[:, 1] + (2 * u[:, 4] - 1) * dy_scale,
                       -y_halfwidth, y_halfwidth)
    r2[:, 2] = np.clip(r1[:, 2] + (2 * u[:, 5] - 1) * dy_scale,
                       -y_halfwidth, y_halfwidth)

    f1 = _f_theta(_r_eps(r1, eps), frame, twist)
    f2 = _f_theta(_r_eps(r2, eps), frame, twist)
    on_support = np.linalg.norm(f1 - f2, axis=-1) < mu
    a = _r_eps(r1[on_support], eps)
    b = _r_eps(r2[on_support], eps)
    df = f2[on_support] - f1[on_support]
    R = (np.sum(df * df, axis=-1) - np.sum((b - a) ** 2, axis=-1)) / mu**2
    rbar = float(np.max(np.abs(R))) if len(R) else 0.0

    straight = frame.orthonormality_defect() < 1e-12 and np.max(frame.kappa) < 1e-14
    if straight and np.max(np.abs(twist.theta(frame.x))) < 1e-14:
        rbar = 0.0
    return TaylorDecomposition(eps=eps, mu=mu, w=w, frame=frame, twist=twist,
                               rbar=rbar, rbar_samples=int(on_support.sum()))


# ---------------------------------------------------------------------------
# effective 1D kernel and coupling


def effective_kernel(modes: TransverseModes, w: PairPotential,
                     eps: float, mu: float, n_x: int = None):
    """Effective 1D kernel obtained by integrating the scaled interaction
    against |chi_0|^2 in both transverse arguments.

    Returns (x_grid, kernel_values, mass).  The transverse double integral is
    reduced to the autocorrelation of |chi_0|^2 (smooth on the cross-section
    scale) integrated against the sharp interaction profile on a fine grid.
    """
    if n_x is None:
        n_x = 33
    dx = 2.0 * mu / (n_x - 1)
    if dx > mu / 4.0:
        raise ScalingError("x-grid coarser than mu/4: kernel unresolved")
    h = modes.cs.h
    P = modes.chi[0] ** 2
    # q(dy) = int |chi(y)|^2 |chi(y + dy)|^2 dy  on the (2n-1)^2 lag grid
    q = fftconvolve(P, P[::-1, ::-1]) * h**2
    n1, n2 = P.shape
    lag1 = h * np.arange(-(n1 - 1), n1)
    lag2 = h * np.arange(-(n2 - 1), n2)
    q_interp = RegularGridInterpolator((lag1, lag2), q, bounds_error=False,
                                       fill_value=0.0)

    # fine lag grid restricted to the interaction support |dy| < mu/eps
    half = min(mu / eps, float(lag1[-1]))
    n_f = max(17, int(np.ceil(16 * half / (mu / eps))) | 1)
    fy = np.linspace(-half, half, n_f)
    hf = fy[1] - fy[0]
    FY1, FY2 = np.meshgrid(fy, fy, indexing="ij")
    qf = q_interp(np.stack([FY1.ravel(), FY2.ravel()], axis=-1)).reshape(FY1.shape)

    x = np.linspace(-mu, mu, n_x)
    vals = np.empty(n_x)
    for i, xi in enumerate(x):
        s = (xi**2 + eps**2 * (FY1**2 + FY2**2)) / mu**2
        wv = np.where(s < 1.0, w.wt(np.minimum(s, 1.0)), 0.0)
        vals[i] = eps**2 / mu**3 * np.sum(qf * wv) * hf**2
    mass = float(np.trapezoid(vals, x))
    return x, vals, mass


def b_coefficient(modes: TransverseModes, w: PairPotential,
                  regime: str) -> float:
    """Coupling of the effective cubic nonlinearity: quartic integral of the
    ground mode times the total interaction mass for moderate confinement,
    zero for strong confinement."""
    if regime == "strong":
        return 0.0
    if regime != "moderate":
        raise ScalingError(f"unknown regime {regime!r}")
    return modes.q4 * w.mass


# ---------------------------------------------------------------------------
# mean-field convolution defect


def _radial_ft_table(w: PairPotential, k_max: float, n: int = 4096):
    """Radial 3D Fourier transform of w on [0, k_max]."""
    k = np.linspace(0.0, k_max, n)

    def one(kv):
        if kv < 1e-9:
            return 4 * np.pi * quad(lambda r: r**2 * w.radial(r), 0, 1)[0]
        return 4 * np.pi * quad(
            lambda r: r**2 * w.radial(r) * np.sinc(kv * r / np.pi), 0, 1)[0]

    vals = np.array([one(kv) for kv in k])
    return interp1d(k, vals, bounds_error=False, fill_value=0.0)


def convolution_defect(w: PairPotential, eps: float, mu: float,
                       sigma: float = 1.0, n_xi: int = 64,
                       xi_max: float = None) -> float:
    """L2 defect of the anisotropically scaled interaction acting as an
    approximate identity on a Gaussian of width ``sigma``, normalized by the
    Gaussian's gradient norm.

    Computed in Fourier space via Plancherel: the convolution kernel
    (eps^2/mu^3) w((x, eps y)/mu) has transform what(mu xi_x, (mu/eps) xi_y),
    so the defect is the L2 norm of (what - what(0)) fhat against the exact
    Gaussian transform.  Both mu and mu/eps must be resolved by the xi-grid.
    """
    if xi_max is None:
        xi_max = 8.0 / sigma
    if xi_max * max(mu, mu / eps) < 0.05:
        raise ScalingError("xi-grid does not resolve the kernel scales")
    what = _radial_ft_table(w, k_max=2.0 * xi_max * max(mu, mu / eps) + 1.0)
    w0 = float(what(0.0))
    xi = np.linspace(-xi_max, xi_max, n_xi)
    X, Y1, Y2 = np.meshgrid(xi, xi, xi, indexing="ij")
    f2 = np.exp(-sigma**2 * (X**2 + Y1**2 + Y2**2))  # |fhat|^2 up to a constant
    K = np.sqrt((mu * X) ** 2 + (mu / eps) ** 2 * (Y1**2 + Y2**2))
    defect2 = np.sum((what(K) - w0) ** 2 * f2)
    grad2 = np.sum((X**2 + Y1**2 + Y2**2) * f2)
    return float(np.sqrt(defect2 / grad2))


def convolution_defect_direct(w: PairPotential, eps: float, mu: float,
                              sigma: float = 1.0, box: float = 5.0,
                              n: int = 96) -> float:
    """Real-space oracle for the convolution defect (3D grid quadrature).

    Only feasible when mu and mu/eps are not much smaller than box/n; used to
    cross-check the spectral path at moderate scale separation.
    """
    x = np.linspace(-box, box, n, endpoint=False)
    d = x[1] - x[0]
    if d > mu / 4.0:
        raise ScalingError("quadrature grid coarser than mu/4")
    X, Y1, Y2 = np.meshgrid(x, x, x, indexing="ij")
    f = np.exp(-(X**2 + Y1**2 + Y2**2) / (2 * sigma**2))
    s = (X**2 + eps**2 * (Y1**2 + Y2**2)) / mu**2
    ker = eps**2 / mu**3 * np.where(s < 1.0, w.wt(np.minimum(s, 1.0)), 0.0)
    conv = np.fft.ifftn(np.fft.fftn(f) * np.fft.fftn(np.fft.ifftshift(ker))).real
    conv *= d**3
    defect = np.sqrt(np.sum((conv - f * w.mass) ** 2) * d**3)
    gf = np.gradient(f, d, edge_order=2)
    grad = np.sqrt(np.sum(gf[0]**2 + gf[1]**2 + gf[2]**2) * d**3)
    return float(defect / grad)
