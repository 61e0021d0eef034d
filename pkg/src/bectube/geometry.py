"""Waveguide geometry: arc-length curves, parallel frames, embedding maps and
the curvature-induced potentials.

A waveguide is built from three ingredients: a unit-speed space curve, an
orthonormal frame transported along it without tangential rotation, and a
twist angle that rotates the cross-section relative to that frame.  This
module computes all scalar fields derived from the geometry that the
effective 1D dynamics needs: the curvature components and their derivatives,
the metric factor rho, the auxiliary factor s, the bending potential and the
combined geometric potential.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline


class GeometryError(ValueError):
    pass


# ---------------------------------------------------------------------------
# curves


@dataclass(frozen=True)
class CurveSpec:
    """A parametrized space curve with exact first and second derivatives.

    Evaluators accept scalar or array arguments and return arrays of shape
    (..., 3).  ``arclength`` marks curves known to be unit speed.
    """

    kind: str
    x_min: float
    x_max: float
    c: Callable[[np.ndarray], np.ndarray]
    dc: Callable[[np.ndarray], np.ndarray]
    ddc: Callable[[np.ndarray], np.ndarray]
    arclength: bool = False

    def speed(self, x):
        return np.linalg.norm(self.dc(x), axis=-1)


def _vec(fx, fy, fz):
    def ev(x):
        x = np.asarray(x, dtype=float)
        return np.stack([fx(x), fy(x), fz(x)], axis=-1)

    return ev


def line(x_min=-10.0, x_max=10.0) -> CurveSpec:
    """Straight line (t, 0, 0); already unit speed."""
    z = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return CurveSpec(
        "line", x_min, x_max,
        c=_vec(lambda x: x, z, z),
        dc=_vec(lambda x: np.ones_like(np.asarray(x, dtype=float)), z, z),
        ddc=_vec(z, z, z),
        arclength=True,
    )


def circle(radius: float, t_min=0.0, t_max=2.0 * np.pi) -> CurveSpec:
    """Circle of given radius in the z=0 plane, angle parametrization."""
    R = float(radius)
    z = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return CurveSpec(
        "circle", t_min, t_max,
        c=_vec(lambda t: R * np.cos(t), lambda t: R * np.sin(t), z),
        dc=_vec(lambda t: -R * np.sin(t), lambda t: R * np.cos(t), z),
        ddc=_vec(lambda t: -R * np.cos(t), lambda t: -R * np.sin(t), z),
    )


def helix(radius: float, pitch: float, t_min=0.0, t_max=4.0 * np.pi) -> CurveSpec:
    """Helix (R cos t, R sin t, h t); constant speed sqrt(R^2 + h^2)."""
    R, h = float(radius), float(pitch)
    return CurveSpec(
        "helix", t_min, t_max,
        c=_vec(lambda t: R * np.cos(t), lambda t: R * np.sin(t), lambda t: h * t),
        dc=_vec(lambda t: -R * np.sin(t), lambda t: R * np.cos(t),
                lambda t: h * np.ones_like(np.asarray(t, dtype=float))),
        ddc=_vec(lambda t: -R * np.cos(t), lambda t: -R * np.sin(t),
                 lambda t: np.zeros_like(np.asarray(t, dtype=float))),
    )


def bump_line(amplitude=0.2, width=1.0, x_min=-8.0, x_max=8.0) -> CurveSpec:
    """Straight line with a localized Gaussian bump in the y-direction."""
    A, s = float(amplitude), float(width)
    g = lambda t: A * np.exp(-(t / s) ** 2)
    dg = lambda t: -2.0 * t / s**2 * g(t)
    ddg = lambda t: (-2.0 / s**2 + 4.0 * t**2 / s**4) * g(t)
    z = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return CurveSpec(
        "bump_line", x_min, x_max,
        c=_vec(lambda t: t, g, z),
        dc=_vec(lambda t: np.ones_like(np.asarray(t, dtype=float)), dg, z),
        ddc=_vec(z, ddg, z),
    )


def sampled_curve(t: np.ndarray, points: np.ndarray) -> CurveSpec:
    """Curve from sampled points; cubic-spline interpolated before differentiation."""
    t = np.asarray(t, dtype=float)
    points = np.asarray(points, dtype=float)
    sp = CubicSpline(t, points, axis=0)
    d1 = sp.derivative(1)
    d2 = sp.derivative(2)
    return CurveSpec("sampled", float(t[0]), float(t[-1]), c=sp, dc=d1, ddc=d2)


def reparameterize_arclength(curve: CurveSpec, tol: float = 1e-9,
                             n_check: int = 2048) -> CurveSpec:
    """Return the same curve parametrized by arc length.

    Constant-speed curves are rescaled exactly; otherwise the arc-length
    function is inverted numerically on a fine grid.  Raises GeometryError if
    the curve is not regular.
    """
    tt = np.linspace(curve.x_min, curve.x_max, n_check)
    v = curve.speed(tt)
    if np.min(v) < tol:
        i = int(np.argmin(v))
        raise GeometryError(
            f"curve not regular: speed {v[i]:.3e} at parameter {tt[i]:.6g}")
    vbar = float(np.mean(v))
    if np.max(np.abs(v - vbar)) <= tol * max(1.0, vbar):
        if abs(vbar - 1.0) <= tol:
            return curve if curve.arclength else CurveSpec(
                curve.kind, curve.x_min, curve.x_max,
                curve.c, curve.dc, curve.ddc, arclength=True)
        # exact rescale t = x / v
        c0, dc0, ddc0 = curve.c, curve.dc, curve.ddc
        return CurveSpec(
            curve.kind, curve.x_min * vbar, curve.x_max * vbar,
            c=lambda x: c0(np.asarray(x) / vbar),
            dc=lambda x: dc0(np.asarray(x) / vbar) / vbar,
            ddc=lambda x: ddc0(np.asarray(x) / vbar) / vbar**2,
            arclength=True,
        )
    # general case: invert s(t) numerically
    tfine = np.linspace(curve.x_min, curve.x_max, 16 * n_check)
    vfine = curve.speed(tfine)
    s = np.concatenate([[0.0], np.cumsum(
        0.5 * (vfine[1:] + vfine[:-1]) * np.diff(tfine))])
    t_of_s = CubicSpline(s, tfine)

    c0, dc0, ddc0 = curve.c, curve.dc, curve.ddc

    def c_new(x):
        return c0(t_of_s(np.asarray(x, dtype=float)))

    def dc_new(x):
        t = t_of_s(np.asarray(x, dtype=float))
        v = np.linalg.norm(dc0(t), axis=-1)
        return dc0(t) / v[..., None]

    def ddc_new(x):
        # chain rule with t'(s) = 1/v and t''(s) = -<c',c''>/v^4
        t = t_of_s(np.asarray(x, dtype=float))
        d1, d2 = dc0(t), ddc0(t)
        v = np.linalg.norm(d1, axis=-1)
        dv = np.einsum("...i,...i->...", d1, d2) / v
        return d2 / v[..., None] ** 2 - d1 * (dv / v**3)[..., None]

    return CurveSpec(curve.kind, 0.0, float(s[-1]), c_new, dc_new, ddc_new,
                     arclength=True)


# ---------------------------------------------------------------------------
# twist


@dataclass(frozen=True)
class TwistSpec:
    """Twist angle of the cross-section relative to the parallel frame."""

    theta: Callable[[np.ndarray], np.ndarray]
    dtheta: Callable[[np.ndarray], np.ndarray]

    def rotation(self, x: float) -> np.ndarray:
        th = float(self.theta(x))
        c, s = np.cos(th), np.sin(th)
        return np.array([[c, -s], [s, c]])


def no_twist() -> TwistSpec:
    z = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return TwistSpec(theta=z, dtheta=z)


def linear_twist(rate: float) -> TwistSpec:
    r = float(rate)
    return TwistSpec(
        theta=lambda x: r * np.asarray(x, dtype=float),
        dtheta=lambda x: r * np.ones_like(np.asarray(x, dtype=float)),
    )


# ---------------------------------------------------------------------------
# parallel frame


@dataclass
class FrameField:
    """Parallel-transport frame sampled on a uniform grid, with curvature
    components and their finite-difference derivatives."""

    x: np.ndarray
    tau: np.ndarray        # (n, 3)
    e1: np.ndarray
    e2: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    curve: CurveSpec
    _splines: dict = field(default_factory=dict, repr=False)

    @property
    def h_x(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def kappa(self) -> np.ndarray:
        return np.hypot(self.kappa1, self.kappa2)

    @property
    def kappa_d1(self) -> np.ndarray:
        """First derivative of (kappa1, kappa2), shape (n, 2)."""
        return np.stack([_fd_derivative(self.kappa1, self.h_x, 1),
                         _fd_derivative(self.kappa2, self.h_x, 1)], axis=-1)

    @property
    def kappa_d2(self) -> np.ndarray:
        """Second derivative of (kappa1, kappa2), shape (n, 2)."""
        return np.stack([_fd_derivative(self.kappa1, self.h_x, 2),
                         _fd_derivative(self.kappa2, self.h_x, 2)], axis=-1)

    def orthonormality_defect(self) -> float:
        B = np.stack([self.tau, self.e1, self.e2], axis=1)  # (n, 3, 3)
        G = np.einsum("nij,nkj->nik", B, B)
        return float(np.max(np.abs(G - np.eye(3))))

    def _spline(self, name: str, data: np.ndarray) -> CubicSpline:
        if name not in self._splines:
            self._splines[name] = CubicSpline(self.x, data, axis=0)
        return self._splines[name]

    def frame_at(self, x):
        """Interpolated (e1, e2) at arbitrary x."""
        return self._spline("e1", self.e1)(x), self._spline("e2", self.e2)(x)

    def kappa_vec_at(self, x):
        """Interpolated curvature vector (kappa1, kappa2) at x."""
        k = np.stack([self.kappa1, self.kappa2], axis=-1)
        return self._spline("kv", k)(x)

    def kappa_d1_at(self, x):
        return self._spline("kd1", self.kappa_d1)(x)

    def kappa_d2_at(self, x):
        return self._spline("kd2", self.kappa_d2)(x)

    def to_csv(self, path) -> None:
        header = ("x,tau1,tau2,tau3,e11,e12,e13,e21,e22,e23,"
                  "kappa1,kappa2,kappa")
        data = np.column_stack([self.x, self.tau, self.e1, self.e2,
                                self.kappa1, self.kappa2, self.kappa])
        np.savetxt(path, data, delimiter=",", header=header, comments="",
                   fmt="%.17g")


def _fd_derivative(y: np.ndarray, h: float, order: int) -> np.ndarray:
    """4th-order central finite differences, one-sided at the boundary."""
    n = len(y)
    out = np.empty(n)
    if order == 1:
        c = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * h)
        one = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
    elif order == 2:
        c = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h**2)
        one = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / (12.0 * h**2)
    else:
        raise ValueError(order)
    m = len(one)
    for i in range(n):
        if 2 <= i <= n - 3:
            out[i] = c @ y[i - 2:i + 3]
        elif i < 2:
            out[i] = one @ y[i:i + m]
        else:
            sgn = -1.0 if order == 1 else 1.0
            out[i] = sgn * (one @ y[i - m + 1:i + 1][::-1])
    return out


def bishop_frame(curve: CurveSpec, n_nodes: int = 1024,
                 defect_tol: float = 1e-6) -> FrameField:
    """Integrate the parallel-transport frame along a unit-speed curve.

    Classical RK4 on the normal vectors with e_j' = -<c'', e_j> c', the
    tangent taken exactly from c', and Gram-Schmidt re-orthonormalization
    after every step.  Refines the step once if the frame defect exceeds
    ``defect_tol``.
    """
    if not curve.arclength:
        raise GeometryError("bishop_frame requires an arc-length curve; "
                            "call reparameterize_arclength first")

    def integrate(n):
        x = np.linspace(curve.x_min, curve.x_max, n)
        h = x[1] - x[0]
        tau = curve.dc(x)
        ddc = curve.ddc(x)
        ddc_half = curve.ddc(0.5 * (x[:-1] + x[1:]))
        dc_half = curve.dc(0.5 * (x[:-1] + x[1:]))
        e1 = np.empty_like(tau)
        e2 = np.empty_like(tau)
        t0 = tau[0]
        # initial normal: any unit vector orthogonal to tau(0)
        trial = np.array([0.0, 1.0, 0.0])
        if abs(np.dot(trial, t0)) > 0.9:
            trial = np.array([0.0, 0.0, 1.0])
        v = trial - np.dot(trial, t0) * t0
        e1[0] = v / np.linalg.norm(v)
        e2[0] = np.cross(t0, e1[0])

        def rhs(cpp, cp, e):
            return -np.dot(cpp, e) * cp

        for i in range(n - 1):
            for e in (e1, e2):
                k1 = rhs(ddc[i], tau[i], e[i])
                k2 = rhs(ddc_half[i], dc_half[i], e[i] + 0.5 * h * k1)
                k3 = rhs(ddc_half[i], dc_half[i], e[i] + 0.5 * h * k2)
                k4 = rhs(ddc[i + 1], tau[i + 1], e[i] + h * k3)
                e[i + 1] = e[i] + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            # re-orthonormalize against the exact tangent
            t = tau[i + 1]
            u1 = e1[i + 1] - np.dot(e1[i + 1], t) * t
            u1 /= np.linalg.norm(u1)
            u2 = e2[i + 1] - np.dot(e2[i + 1], t) * t - np.dot(e2[i + 1], u1) * u1
            u2 /= np.linalg.norm(u2)
            e1[i + 1], e2[i + 1] = u1, u2

        k1c = np.einsum("ni,ni->n", ddc, e1)
        k2c = np.einsum("ni,ni->n", ddc, e2)
        return FrameField(x=x, tau=tau, e1=e1, e2=e2, kappa1=k1c, kappa2=k2c,
                          curve=curve)

    frame = integrate(n_nodes)
    if frame.orthonormality_defect() > defect_tol:
        frame = integrate(2 * n_nodes - 1)
        if frame.orthonormality_defect() > defect_tol:
            raise GeometryError(
                f"frame orthonormality defect {frame.orthonormality_defect():.3e} "
                f"exceeds {defect_tol:.1e} even after refinement")
    return frame


# ---------------------------------------------------------------------------
# overlap margin (heuristic, sampled proxy for the global non-overlap condition)


def overlap_margin(curve: CurveSpec, n_samples: int = 512):
    """Largest sampled constants (c1, c2) with
    ||c(x1) - c(x2)|| >= min(c1 |x1 - x2|, c2) over all sampled pairs.

    This is a sampled heuristic: distances are evaluated on a finite grid with
    pairs closer than 3 grid spacings excluded.  Returns (c1, c2, feasible).
    """
    x = np.linspace(curve.x_min, curve.x_max, n_samples)
    h = x[1] - x[0]
    pts = curve.c(x)
    dx = np.abs(x[:, None] - x[None, :])
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    sel = dx > 3.0 * h
    dxs, dists = dx[sel], dist[sel]
    if len(dxs) == 0:
        return 1.0, float(np.ptp(x)), True
    best = (0.0, 0.0)
    for ell in np.quantile(dxs, [0.05, 0.1, 0.25, 0.5, 0.75, 1.0]):
        near = dxs <= ell
        c1 = float(np.min(dists[near] / dxs[near])) if near.any() else 1.0
        far_min = float(np.min(dists[~near])) if (~near).any() else np.inf
        c2 = min(c1 * ell, far_min)
        if min(c1, c2) > min(best) or (min(c1, c2) == min(best) and c2 > best[1]):
            best = (c1, min(c2, float(np.max(dists))))
    c1, c2 = best
    feasible = c1 > 1e-12 and c2 > 1e-12
    return c1, c2, feasible


# ---------------------------------------------------------------------------
# embedding and metric factors


def _twisted_y(r, frame: FrameField, twist: TwistSpec):
    x, y = float(r[0]), np.asarray(r[1:], dtype=float)
    return x, twist.rotation(x) @ y


def embed(r, eps: float, frame: FrameField, twist: TwistSpec) -> np.ndarray:
    """Embedding map: scale the cross-section by eps, twist it, and attach it
    to the curve along the parallel frame."""
    x, ty = _twisted_y(r, frame, twist)
    rho, _ = metric_factors(r, eps, frame, twist)
    if rho <= 0.0:
        raise GeometryError(f"metric factor rho = {rho:.3e} <= 0 at x = {x:.4g}; "
                            "eps too large for this curvature")
    e1, e2 = frame.frame_at(x)
    return frame.curve.c(x) + eps * ty[0] * e1 + eps * ty[1] * e2


def embed_jacobian_det(r, eps: float, frame: FrameField, twist: TwistSpec,
                       h: float = 1e-5) -> float:
    """Central finite-difference Jacobian determinant of the embedding."""
    r = np.asarray(r, dtype=float)
    J = np.empty((3, 3))
    for j in range(3):
        dp = r.copy()
        dm = r.copy()
        dp[j] += h
        dm[j] -= h
        J[:, j] = (embed(dp, eps, frame, twist) - embed(dm, eps, frame, twist)) / (2 * h)
    return float(np.linalg.det(J))


def metric_factors(r, eps: float, frame: FrameField, twist: TwistSpec):
    """Metric factor rho = 1 - eps (T_theta y . kappa) and
    s = (rho^2 - 1) / (eps rho^2), with the eps -> 0 limit -2 (T_theta y . kappa)."""
    x, ty = _twisted_y(r, frame, twist)
    u = float(ty @ frame.kappa_vec_at(x))
    rho = 1.0 - eps * u
    if rho <= 0.0:
        raise GeometryError(f"rho = {rho:.3e} <= 0 at x = {x:.4g}")
    if eps == 0.0:
        return 1.0, -2.0 * u
    s = (rho**2 - 1.0) / (eps * rho**2)
    return rho, s


def bending_potential(r, eps: float, frame: FrameField, twist: TwistSpec) -> float:
    """Attractive potential induced by curvature of the guide axis."""
    x, ty = _twisted_y(r, frame, twist)
    kv = frame.kappa_vec_at(x)
    k2 = float(kv @ kv)
    rho, _ = metric_factors(r, eps, frame, twist)
    yk2 = float(ty @ frame.kappa_d2_at(x))
    yk1 = float(ty @ frame.kappa_d1_at(x))
    return (-k2 / (4.0 * rho**2)
            - eps * yk2 / (2.0 * rho**3)
            - eps**2 * 5.0 * yk1**2 / (4.0 * rho**4))


def geometric_potential(frame: FrameField, twist: TwistSpec,
                        lchi2: float) -> np.ndarray:
    """Static 1D potential -kappa^2/4 + theta'^2 ||L chi||^2 on the frame grid."""
    if lchi2 < 0:
        raise GeometryError("lchi2 must be nonnegative")
    return -frame.kappa**2 / 4.0 + np.asarray(twist.dtheta(frame.x))**2 * lchi2
