"""Dirichlet eigenmodes of the waveguide cross-section.

Solves -Lap + Vperp on a bounded 2D region with a 5-point finite-difference
discretization (Dirichlet boundary by mask exclusion) and computes the scalar
quantities the effective 1D equation needs: ground-state energy, spectral
gap, the quartic integral of the ground mode, the angular-momentum norm, and
the mode-overlap tensor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigs, eigsh


class CrossSectionError(ValueError):
    pass


@dataclass(frozen=True)
class CrossSection:
    """Bounded open cross-section on a uniform grid.

    ``mask`` marks interior nodes; everything outside is Dirichlet boundary.
    ``y1``/``y2`` are the node coordinates along the two axes.  ``levelset``
    (negative inside, when available) locates the true boundary between grid
    nodes so curved shapes get boundary-fitted stencils instead of the
    staircase approximation.
    """

    shape: str
    y1: np.ndarray
    y2: np.ndarray
    mask: np.ndarray         # (n1, n2) bool
    vperp: np.ndarray        # (n1, n2) float
    levelset: Callable = None

    @property
    def h(self) -> float:
        return float(self.y1[1] - self.y1[0])

    @property
    def area(self) -> float:
        return float(self.mask.sum()) * self.h**2

    def centroid(self):
        Y1, Y2 = np.meshgrid(self.y1, self.y2, indexing="ij")
        n = self.mask.sum()
        return float(Y1[self.mask].sum() / n), float(Y2[self.mask].sum() / n)


def _grid(extent1, extent2, n):
    # interior nodes only: h = L/(n+1), nodes at h, 2h, ..., n h
    a0, a1 = extent1
    b0, b1 = extent2
    n1 = n
    h = (a1 - a0) / (n + 1)
    n2 = int(round((b1 - b0) / h)) - 1
    y1 = a0 + h * np.arange(1, n1 + 1)
    y2 = b0 + h * np.arange(1, n2 + 1)
    return y1, y2


def rectangle(a: float, b: float, n: int = 128, vperp=None) -> CrossSection:
    """Rectangle (0, a) x (0, b); n interior nodes along the first axis."""
    y1, y2 = _grid((0.0, a), (0.0, b), n)
    mask = np.ones((len(y1), len(y2)), dtype=bool)
    return CrossSection("rectangle", y1, y2, mask, _sample_vperp(vperp, y1, y2))


def disk(radius: float = 1.0, n: int = 128, vperp=None) -> CrossSection:
    """Disk of given radius centered at the origin."""
    R = float(radius)
    y1, y2 = _grid((-R, R), (-R, R), n)
    Y1, Y2 = np.meshgrid(y1, y2, indexing="ij")
    mask = Y1**2 + Y2**2 < R**2
    return CrossSection("disk", y1, y2, mask, _sample_vperp(vperp, y1, y2),
                        levelset=lambda p1, p2: p1**2 + p2**2 - R**2)


def ellipse(a: float, b: float, n: int = 128, vperp=None) -> CrossSection:
    """Ellipse with semi-axes a, b centered at the origin."""
    y1, y2 = _grid((-a, a), (-b, b), n)
    Y1, Y2 = np.meshgrid(y1, y2, indexing="ij")
    mask = (Y1 / a) ** 2 + (Y2 / b) ** 2 < 1.0
    return CrossSection("ellipse", y1, y2, mask, _sample_vperp(vperp, y1, y2),
                        levelset=lambda p1, p2: (p1 / a) ** 2 + (p2 / b) ** 2 - 1.0)


def masked(y1, y2, mask, vperp=None) -> CrossSection:
    mask = np.asarray(mask, dtype=bool)
    return CrossSection("mask", np.asarray(y1, float), np.asarray(y2, float),
                        mask, _sample_vperp(vperp, y1, y2))


def _sample_vperp(vperp, y1, y2):
    if vperp is None:
        return np.zeros((len(y1), len(y2)))
    if callable(vperp):
        Y1, Y2 = np.meshgrid(y1, y2, indexing="ij")
        return np.asarray(vperp(Y1, Y2), dtype=float)
    v = np.asarray(vperp, dtype=float)
    if v.ndim == 0:
        return np.full((len(y1), len(y2)), float(v))
    return v


@dataclass
class TransverseModes:
    """Lowest Dirichlet eigenpairs of -Lap + Vperp with derived scalars."""

    cs: CrossSection
    energies: np.ndarray      # (m,)
    chi: np.ndarray           # (m, n1, n2), zero outside the mask
    origin: tuple = None      # origin for the angular-momentum operator
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def e0(self) -> float:
        return float(self.energies[0])

    @property
    def gap(self) -> float:
        if len(self.energies) < 2:
            raise CrossSectionError("need m >= 2 modes for the spectral gap")
        return float(self.energies[1] - self.energies[0])

    @property
    def q4(self) -> float:
        return chi_quartic(self)

    @property
    def lchi2(self) -> float:
        return angular_momentum_norm(self)

    def summary(self) -> dict:
        out = {"E0": self.e0, "q4": self.q4, "lchi2": self.lchi2}
        if len(self.energies) >= 2:
            out["gap"] = self.gap
        return out


def _boundary_fractions(cs: CrossSection) -> dict:
    """Fractional distance (in units of h) from each interior node to the
    Dirichlet boundary in each grid direction.

    Equals 1.0 toward an interior neighbor.  With a levelset the true zero
    crossing is located by bisection; without one the boundary is taken to sit
    exactly one spacing outside the mask.
    """
    n1, n2 = cs.mask.shape
    h = cs.h
    out = {}
    Y1, Y2 = np.meshgrid(cs.y1, cs.y2, indexing="ij")
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        t = np.ones((n1, n2))
        if cs.levelset is not None:
            ii, jj = np.nonzero(cs.mask)
            i2, j2 = ii + di, jj + dj
            inside = (i2 >= 0) & (i2 < n1) & (j2 >= 0) & (j2 < n2)
            inside[inside] = cs.mask[i2[inside], j2[inside]]
            bi, bj = ii[~inside], jj[~inside]
            if len(bi):
                p1, p2 = Y1[bi, bj], Y2[bi, bj]
                lo = np.zeros(len(bi))
                hi = np.ones(len(bi))
                crosses = cs.levelset(p1 + h * di, p2 + h * dj) >= 0
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    f = cs.levelset(p1 + mid * h * di, p2 + mid * h * dj)
                    hi = np.where(f >= 0, mid, hi)
                    lo = np.where(f >= 0, lo, mid)
                frac = np.where(crosses, np.maximum(hi, 1e-6), 1.0)
                t[bi, bj] = frac
        out[(di, dj)] = t
    return out


def _laplacian(cs: CrossSection) -> sp.csr_matrix:
    """Negative Laplacian plus Vperp on the interior nodes.

    Standard 5-point stencil on the mask; with a levelset the stencil arms
    that cross the boundary are shortened to the true crossing distance
    (Shortley-Weller), which makes the matrix mildly nonsymmetric.
    """
    n1, n2 = cs.mask.shape
    h = cs.h
    idx = -np.ones((n1, n2), dtype=np.int64)
    idx[cs.mask] = np.arange(cs.mask.sum())
    ii, jj = np.nonzero(cs.mask)
    frac = _boundary_fractions(cs)
    t_pairs = {(1, 0): (-1, 0), (0, 1): (0, -1)}
    rows, cols, vals = [], [], []
    diag = cs.vperp[ii, jj].astype(float).copy()
    for (dp, dq), (dm, dn) in t_pairs.items():
        tp = frac[(dp, dq)][ii, jj]
        tm = frac[(dm, dn)][ii, jj]
        diag += 2.0 / (tp * tm) / h**2
        for di, dj, tn, tf in ((dp, dq, tp, tm), (dm, dn, tm, tp)):
            i2, j2 = ii + di, jj + dj
            ok = (i2 >= 0) & (i2 < n1) & (j2 >= 0) & (j2 < n2)
            ok[ok] = cs.mask[i2[ok], j2[ok]]
            rows.append(idx[ii[ok], jj[ok]])
            cols.append(idx[i2[ok], j2[ok]])
            vals.append(-2.0 / (tn[ok] * (tn[ok] + tf[ok])) / h**2)
    rows.append(idx[ii, jj])
    cols.append(idx[ii, jj])
    vals.append(diag)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))))


def dirichlet_modes(cs: CrossSection, m: int = 1, tol: float = 1e-9,
                    origin=None) -> TransverseModes:
    """Compute the m lowest eigenpairs.

    Shift-invert Lanczos with a deterministic start vector.  The ground state
    must be simple and nodeless; both are checked.
    """
    if m < 1:
        raise CrossSectionError("m must be >= 1")
    if cs.mask.sum() <= 100:
        raise CrossSectionError("grid too coarse: need > 100 interior nodes")
    A = _laplacian(cs)
    sigma = float(cs.vperp.min()) - 1.0
    v0 = np.ones(A.shape[0])
    if cs.levelset is None:
        vals, vecs = eigsh(A, k=m + 1, sigma=sigma, which="LM", v0=v0, tol=tol)
    else:
        # boundary-fitted stencil: mildly nonsymmetric, real spectrum
        vals, vecs = eigs(A, k=m + 1, sigma=sigma, which="LM", v0=v0, tol=tol)
        if np.max(np.abs(vals.imag)) > 1e-8 * np.max(np.abs(vals.real)):
            raise CrossSectionError("eigensolver returned complex eigenvalues")
        vals = vals.real
        # strip the arbitrary complex phase of each eigenvector
        lead = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])]
        vecs = (vecs * (np.abs(lead) / lead)).real
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    scale = max(1.0, abs(vals[0]))
    if vals[1] - vals[0] < 1e-8 * scale:
        raise CrossSectionError(
            f"degenerate ground state: E0 = {vals[0]:.8g}, E1 = {vals[1]:.8g}")
    vals, vecs = vals[:m], vecs[:, :m]

    h = cs.h
    chi = np.zeros((m,) + cs.mask.shape)
    for j in range(m):
        v = vecs[:, j] / (h * np.linalg.norm(vecs[:, j]))
        chi[j][cs.mask] = v
    # sign convention: ground state positive in the interior
    for j in range(m):
        if chi[j][cs.mask].sum() < 0:
            chi[j] = -chi[j]
    interior = chi[0][cs.mask]
    if interior.min() < -1e-8 * interior.max():
        raise CrossSectionError("ground mode changes sign in the interior")
    if origin is None:
        origin = cs.centroid()
    return TransverseModes(cs=cs, energies=vals, chi=chi, origin=origin)


def chi_quartic(modes: TransverseModes) -> float:
    """Integral of |chi_0|^4 over the cross-section."""
    h = modes.cs.h
    return float(h**2 * np.sum(modes.chi[0] ** 4))


def _apply_L(chi2d: np.ndarray, cs: CrossSection, origin) -> np.ndarray:
    """Angular momentum L = y1 d/dy2 - y2 d/dy1 about ``origin``.

    Three-point differences where the wave vanishes at the true boundary
    location from the levelset; without one the boundary is taken one spacing
    outside the mask, which reduces to centered differences with zero
    extension.
    """
    h = cs.h
    frac = _boundary_fractions(cs)
    pad = np.pad(chi2d, 1)

    def deriv(uL, uR, tL, tR):
        A, B = tL * h, tR * h
        return (-B / (A * (A + B)) * uL + (B - A) / (A * B) * chi2d
                + A / (B * (A + B)) * uR)

    d1 = deriv(pad[:-2, 1:-1], pad[2:, 1:-1], frac[(-1, 0)], frac[(1, 0)])
    d2 = deriv(pad[1:-1, :-2], pad[1:-1, 2:], frac[(0, -1)], frac[(0, 1)])
    Y1, Y2 = np.meshgrid(cs.y1 - origin[0], cs.y2 - origin[1], indexing="ij")
    out = Y1 * d2 - Y2 * d1
    out[~cs.mask] = 0.0
    return out

def angular_momentum_norm(modes: TransverseModes) -> float:
    """||L chi_0||^2 about the configured origin (default: mask centroid)."""
    cs = modes.cs
    L0 = _apply_L(modes.chi[0], cs, modes.origin)
    return float(cs.h**2 * np.sum(L0**2))


def overlap_tensor(modes: TransverseModes) -> np.ndarray:
    """O[a,b,c,d] = integral of chi_a chi_b chi_c chi_d; symmetric in all
    index permutations, O[0,0,0,0] equals the quartic integral."""
    m = len(modes.energies)
    h = modes.cs.h
    flat = modes.chi.reshape(m, -1)
    return h**2 * np.einsum("ax,bx,cx,dx->abcd", flat, flat, flat, flat)


def gap_scaling(modes: TransverseModes, eps: float) -> float:
    """Physical transverse gap (E1 - E0)/eps^2 after confinement scaling."""
    if eps <= 0:
        raise CrossSectionError("eps must be positive")
    return modes.gap / eps**2


def rayleigh_residual(modes: TransverseModes) -> float:
    """Max residual ||(A - E_j) chi_j|| over the returned modes."""
    A = _laplacian(modes.cs)
    res = 0.0
    for j, E in enumerate(modes.energies):
        v = modes.chi[j][modes.cs.mask]
        v = v / np.linalg.norm(v)
        res = max(res, float(np.linalg.norm(A @ v - E * v)))
    return res
