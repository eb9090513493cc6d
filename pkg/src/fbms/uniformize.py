"""
Conformal modulus and uniformizing map of a metric annulus [0,1] x S^1.

The harmonic function u (0 on s = 0, 1 on s = 1) is computed with a
finite-volume discretisation of div(A grad u) = 0, where

    A = sqrt(det g) g^{-1}

is the conformally invariant conductivity (det A = 1).  A is formed at the
nodes and averaged to cell faces, so a pointwise rescaling e^{2 lambda} g
leaves the linear system unchanged.  The period of the conjugate
differential *du around the core gives kappa, the modulus is
t = exp(2 pi / kappa), and psi = exp((2 pi / kappa)(u + i v)) maps the
annulus onto 1 <= |z| <= t.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import cumulative_trapezoid
from scipy.sparse.linalg import spsolve


class DegenerateMetricError(ValueError):
    """The metric is not positive definite or the linear system is singular."""


@dataclass(frozen=True)
class MetricAnnulus:
    """Metric components sampled at s_i = i/(n_s-1), theta_j = 2 pi j/n_theta; arrays (n_s, n_theta)."""

    g11: np.ndarray
    g12: np.ndarray
    g22: np.ndarray

    def __post_init__(self):
        arrs = [np.array(x, dtype=float) for x in (self.g11, self.g12, self.g22)]
        if any(a.ndim != 2 or a.shape != arrs[0].shape for a in arrs):
            raise ValueError("g11, g12, g22 must be 2-D arrays of one shape")
        if arrs[0].shape[0] < 3 or arrs[0].shape[1] < 3:
            raise ValueError("need at least 3 x 3 nodes")
        det = arrs[0] * arrs[2] - arrs[1] ** 2
        bad = (arrs[0] <= 0) | (det <= 0) | ~np.isfinite(det)
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            raise DegenerateMetricError(f"metric not positive definite at node (s={i}, theta={j})")
        for name, a in zip(("g11", "g12", "g22"), arrs):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def shape(self) -> tuple[int, int]:
        return self.g11.shape

    @property
    def s(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.shape[0])

    @property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.shape[1]) / self.shape[1]

    def conductivity(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(A11, A12, A22) of sqrt(det g) g^{-1} at the nodes."""
        root = np.sqrt(self.g11 * self.g22 - self.g12 ** 2)
        return self.g22 / root, -self.g12 / root, self.g11 / root

    def rescaled(self, lam) -> "MetricAnnulus":
        """e^{2 lam} g, with lam an array on the nodes or a callable lam(s, theta)."""
        if callable(lam):
            S, T = np.meshgrid(self.s, self.theta, indexing="ij")
            lam = lam(S, T)
        w = np.exp(2 * np.asarray(lam, dtype=float))
        return MetricAnnulus(w * self.g11, w * self.g12, w * self.g22)

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_function(cls, metric, n_s: int, n_theta: int) -> "MetricAnnulus":
        """``metric(s, theta) -> (g11, g12, g22)`` evaluated on the node grid."""
        S, T = np.meshgrid(np.linspace(0.0, 1.0, n_s), 2 * np.pi * np.arange(n_theta) / n_theta, indexing="ij")
        g11, g12, g22 = metric(S, T)
        return cls(np.broadcast_to(g11, S.shape), np.broadcast_to(g12, S.shape), np.broadcast_to(g22, S.shape))

    @classmethod
    def product(cls, n_s: int, n_theta: int) -> "MetricAnnulus":
        """ds^2 + dtheta^2."""
        return cls.from_function(lambda s, th: (np.ones_like(s), np.zeros_like(s), np.ones_like(s)), n_s, n_theta)

    @classmethod
    def flat_pullback(cls, modulus: float, n_s: int, n_theta: int, chart: str = "linear",
                      twist=None) -> "MetricAnnulus":
        """Euclidean metric of 1 <= |z| <= modulus pulled back to [0,1] x S^1.

        chart="log":    r = modulus^s (the discrete solution is then exact);
        chart="linear": r = 1 + s (modulus - 1).
        ``twist`` is an optional phi(s, theta) giving the chart
        theta -> theta + phi(s, theta) (needs 1 + d phi/d theta > 0); its
        derivatives are taken by central differences of width 1e-6.
        """
        if modulus <= 1:
            raise ValueError("modulus must exceed 1")
        L = np.log(modulus)

        def metric(s, th):
            if chart == "log":
                r, dr = np.exp(L * s), L * np.exp(L * s)
            elif chart == "linear":
                r, dr = 1 + s * (modulus - 1), np.full_like(s, modulus - 1)
            else:
                raise ValueError(f"unknown chart {chart!r}")
            if twist is None:
                ps, pt = np.zeros_like(s), np.zeros_like(s)
            else:
                ps = (twist(s + 1e-6, th) - twist(s - 1e-6, th)) / 2e-6
                pt = (twist(s, th + 1e-6) - twist(s, th - 1e-6)) / 2e-6
            # z = r e^{i(theta + phi)}: dz/z = (dr/r + i phi_s) ds + i (1 + phi_theta) dtheta
            return dr ** 2 + (r * ps) ** 2, r * r * ps * (1 + pt), (r * (1 + pt)) ** 2

        return cls.from_function(metric, n_s, n_theta)

    # -- I/O -------------------------------------------------------------

    def to_json(self) -> dict:
        n_s, n_t = self.shape
        return {"n_s": n_s, "n_theta": n_t, "g11": self.g11.ravel().tolist(),
                "g12": self.g12.ravel().tolist(), "g22": self.g22.ravel().tolist()}

    @classmethod
    def from_json(cls, obj) -> "MetricAnnulus":
        if isinstance(obj, str):
            obj = json.loads(obj)
        shape = (int(obj["n_s"]), int(obj["n_theta"]))
        return cls(*(np.asarray(obj[k], dtype=float).reshape(shape) for k in ("g11", "g12", "g22")))

    def to_csv(self, path) -> None:
        """Rows ``i, j, g11, g12, g22`` in row-major order."""
        n_s, n_t = self.shape
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "g11", "g12", "g22"])
            for i in range(n_s):
                for j in range(n_t):
                    w.writerow([i, j, repr(float(self.g11[i, j])), repr(float(self.g12[i, j])), repr(float(self.g22[i, j]))])

    @classmethod
    def from_csv(cls, path) -> "MetricAnnulus":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"{path}: no metric rows")
        ii = np.array([int(r["i"]) for r in rows])
        jj = np.array([int(r["j"]) for r in rows])
        shape = (ii.max() + 1, jj.max() + 1)
        if len(rows) != shape[0] * shape[1]:
            raise ValueError(f"{path}: expected {shape[0] * shape[1]} rows, found {len(rows)}")
        out = [np.zeros(shape) for _ in range(3)]
        for k, name in enumerate(("g11", "g12", "g22")):
            out[k][ii, jj] = [float(r[name]) for r in rows]
        return cls(*out)


# ----------------------------------------------------------------------
# harmonic function
# ----------------------------------------------------------------------

def _face_coefficients(M: MetricAnnulus):
    A11, A12, A22 = M.conductivity()
    # s-faces (i + 1/2, j), i = 0..n_s-2
    fs11 = 0.5 * (A11[1:] + A11[:-1])
    fs12 = 0.5 * (A12[1:] + A12[:-1])
    # theta-faces (i, j + 1/2)
    ft12 = 0.5 * (A12 + np.roll(A12, -1, axis=1))
    ft22 = 0.5 * (A22 + np.roll(A22, -1, axis=1))
    return fs11, fs12, ft12, ft22


def solve_harmonic_u(M: MetricAnnulus) -> np.ndarray:
    """Nodal values of the harmonic function with u = 0 at s = 0 and u = 1 at s = 1."""
    n_s, n_t = M.shape
    hs, ht = 1.0 / (n_s - 1), 2 * np.pi / n_t
    fs11, fs12, ft12, ft22 = _face_coefficients(M)
    I, J = np.meshgrid(np.arange(1, n_s - 1), np.arange(n_t), indexing="ij")
    I, J = I.ravel(), J.ravel()
    Jm = (J - 1) % n_t
    c = 1.0 / (4 * hs * ht)
    terms = []   # (coefficient, di, dj)

    def add(coef, di, dj):
        terms.append((coef, di, dj))

    # + F_s(i+1/2, j) / hs
    a, b = fs11[I, J] / hs ** 2, fs12[I, J] * c
    add(a, 1, 0); add(-a, 0, 0)
    add(b, 0, 1); add(-b, 0, -1); add(b, 1, 1); add(-b, 1, -1)
    # - F_s(i-1/2, j) / hs
    a, b = fs11[I - 1, J] / hs ** 2, fs12[I - 1, J] * c
    add(-a, 0, 0); add(a, -1, 0)
    add(-b, -1, 1); add(b, -1, -1); add(-b, 0, 1); add(b, 0, -1)
    # + F_theta(i, j+1/2) / ht
    a, b = ft22[I, J] / ht ** 2, ft12[I, J] * c
    add(a, 0, 1); add(-a, 0, 0)
    add(b, 1, 0); add(-b, -1, 0); add(b, 1, 1); add(-b, -1, 1)
    # - F_theta(i, j-1/2) / ht
    a, b = ft22[I, Jm] / ht ** 2, ft12[I, Jm] * c
    add(-a, 0, 0); add(a, 0, -1)
    add(-b, 1, -1); add(b, -1, -1); add(-b, 1, 0); add(b, -1, 0)

    n_int = (n_s - 2) * n_t
    row = np.arange(n_int)
    rows, cols, vals = [], [], []
    rhs = np.zeros(n_int)
    for coef, di, dj in terms:
        ii, jj = I + di, (J + dj) % n_t
        inner = (ii >= 1) & (ii <= n_s - 2)
        rows.append(row[inner])
        cols.append((ii[inner] - 1) * n_t + jj[inner])
        vals.append(-coef[inner])
        # Dirichlet data: u = 0 at i = 0 contributes nothing; u = 1 at i = n_s - 1
        top = ii == n_s - 1
        np.add.at(rhs, row[top], coef[top])
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n_int, n_int))
    with np.errstate(all="raise"):
        try:
            x = spsolve(A.tocsc(), rhs)
        except (RuntimeError, FloatingPointError) as exc:
            raise DegenerateMetricError(f"singular Laplace-Beltrami system: {exc}") from None
    if not np.all(np.isfinite(x)):
        raise DegenerateMetricError("singular Laplace-Beltrami system")
    u = np.zeros((n_s, n_t))
    u[1:-1] = x.reshape(n_s - 2, n_t)
    u[-1] = 1.0
    return u


def face_fluxes(M: MetricAnnulus, u: np.ndarray) -> np.ndarray:
    """(A11 u_s + A12 u_theta) on the s-faces, shape (n_s - 1, n_theta)."""
    n_s, n_t = M.shape
    hs, ht = 1.0 / (n_s - 1), 2 * np.pi / n_t
    fs11, fs12, _, _ = _face_coefficients(M)
    us = (u[1:] - u[:-1]) / hs
    ut_node = (np.roll(u, -1, axis=1) - np.roll(u, 1, axis=1)) / (2 * ht)
    ut = 0.5 * (ut_node[1:] + ut_node[:-1])
    return fs11 * us + fs12 * ut


def period_kappa(M: MetricAnnulus, u: np.ndarray, level: float | None = None) -> float:
    """int *du around a constant-s loop; the loop sits on the s-face nearest ``level``.

    The scheme is conservative, so every level gives the same value up to
    the linear-solver residual.  Without ``level`` the mean over all faces
    is returned.
    """
    ht = 2 * np.pi / M.shape[1]
    per_face = np.sum(face_fluxes(M, u), axis=1) * ht
    if level is None:
        kappa = float(np.mean(per_face))
    else:
        mids = 0.5 * (M.s[1:] + M.s[:-1])
        kappa = float(per_face[int(np.argmin(np.abs(mids - level)))])
    if not kappa > 0:
        raise RuntimeError(f"non-positive period kappa = {kappa}: orientation or solver failure")
    return kappa


@dataclass
class Uniformization:
    u: np.ndarray
    v: np.ndarray
    kappa: float
    t: float
    level_spread: float            # max - min of kappa over all s-faces
    closure_defect: float          # max relative mismatch of the nodal loop integrals against kappa
    u_range: tuple
    loops: np.ndarray = field(repr=False, default=None)
    flagged: bool = False

    def to_json(self) -> dict:
        return {"kappa": self.kappa, "t": self.t, "level_spread": self.level_spread,
                "closure_defect": self.closure_defect, "u_min": self.u_range[0],
                "u_max": self.u_range[1], "flagged": self.flagged}


def _nodal_star_du(M: MetricAnnulus, u: np.ndarray):
    """P = A11 u_s + A12 u_theta and Q = A21 u_s + A22 u_theta at the nodes."""
    n_s, n_t = M.shape
    hs, ht = 1.0 / (n_s - 1), 2 * np.pi / n_t
    A11, A12, A22 = M.conductivity()
    us = np.gradient(u, hs, axis=0, edge_order=2)
    ut = (np.roll(u, -1, axis=1) - np.roll(u, 1, axis=1)) / (2 * ht)
    return A11 * us + A12 * ut, A12 * us + A22 * ut


def uniformize(M: MetricAnnulus, closure_tol: float = 1e-2) -> Uniformization:
    """Solve for u, kappa, t and the conjugate function v on the nodes.

    v integrates *du = -Q ds + P dtheta from (0, 0), first along theta = 0
    then around each constant-s circle (trapezoid rule).  v is multivalued
    with period kappa; the loop integrals are kept to evaluate psi.
    """
    u = solve_harmonic_u(M)
    ht = 2 * np.pi / M.shape[1]
    per_face = np.sum(face_fluxes(M, u), axis=1) * ht
    kappa = float(np.mean(per_face))
    if not kappa > 0:
        raise RuntimeError(f"non-positive period kappa = {kappa}")
    P, Q = _nodal_star_du(M, u)
    v0 = -cumulative_trapezoid(Q[:, 0], M.s, initial=0.0)
    Pc = np.concatenate([P, P[:, :1]], axis=1)
    th_c = np.append(M.theta, 2 * np.pi)
    v_full = v0[:, None] + cumulative_trapezoid(Pc, th_c, axis=1, initial=0.0)
    loops = v_full[:, -1] - v_full[:, 0]
    closure = float(np.max(np.abs(loops - kappa)) / kappa)
    return Uniformization(u=u, v=v_full[:, :-1], kappa=kappa, t=float(np.exp(2 * np.pi / kappa)),
                          level_spread=float(per_face.max() - per_face.min()), closure_defect=closure,
                          u_range=(float(u.min()), float(u.max())), loops=loops,
                          flagged=closure > closure_tol)


def modulus(M: MetricAnnulus) -> float:
    """t = exp(2 pi / kappa)."""
    u = solve_harmonic_u(M)
    return float(np.exp(2 * np.pi / period_kappa(M, u)))


def uniformizing_map_eval(M: MetricAnnulus, s, theta, result: Uniformization | None = None) -> np.ndarray:
    """psi(s, theta) = exp((2 pi/kappa)(u + i v)) by bilinear interpolation of the nodal u, v.

    The multivalued v is continued across theta = 2 pi with the loop integral
    of its row and then rescaled so each loop contributes exactly kappa, which
    makes psi single valued.
    """
    res = result or uniformize(M)
    n_s, n_t = M.shape
    s = np.asarray(s, dtype=float)
    theta = np.mod(np.asarray(theta, dtype=float), 2 * np.pi)
    # rescale the theta-increments of v so every loop closes to kappa
    vq = res.v - res.v[:, :1]
    vq = vq * (res.kappa / res.loops)[:, None]
    vq = vq + res.v[:, :1]
    u_c = np.concatenate([res.u, res.u[:, :1]], axis=1)
    v_c = np.concatenate([vq, vq[:, :1] + res.kappa], axis=1)
    x = np.clip(s, 0.0, 1.0) * (n_s - 1)
    y = theta / (2 * np.pi) * n_t
    i0 = np.clip(np.floor(x).astype(int), 0, n_s - 2)
    j0 = np.clip(np.floor(y).astype(int), 0, n_t - 1)
    fx, fy = x - i0, y - j0

    def interp(F):
        return ((1 - fx) * (1 - fy) * F[i0, j0] + fx * (1 - fy) * F[i0 + 1, j0]
                + (1 - fx) * fy * F[i0, j0 + 1] + fx * fy * F[i0 + 1, j0 + 1])

    return np.exp((2 * np.pi / res.kappa) * (interp(u_c) + 1j * interp(v_c)))


# ----------------------------------------------------------------------
# refinement study
# ----------------------------------------------------------------------

def refinement_study(make_metric, sizes=(32, 64, 128, 256), exact: float | None = None) -> dict:
    """Modulus on a sequence of n x n grids and the observed convergence order.

    With ``exact`` the order uses errors against it; otherwise successive
    differences of three levels.
    """
    ts = [modulus(make_metric(n)) for n in sizes]
    out = {"sizes": list(sizes), "t": ts}
    if exact is not None:
        err = [abs(t - exact) / exact for t in ts]
        out["rel_error"] = err
        out["order"] = [float(np.log2(err[k] / err[k + 1])) if err[k + 1] > 0 else float("inf")
                        for k in range(len(err) - 1)]
    else:
        d = np.abs(np.diff(ts))
        out["order"] = [float(np.log2(d[k] / d[k + 1])) if d[k + 1] > 0 else float("inf")
                        for k in range(len(d) - 1)]
    return out


def uniformize_report(M: MetricAnnulus, make_metric=None, sizes=(32, 64, 128), exact=None) -> dict:
    """JSON-ready {kappa, t, refinement_diagnostics}."""
    res = uniformize(M)
    out = {"kappa": res.kappa, "t": res.t}
    diag = {"level_spread": res.level_spread, "closure_defect": res.closure_defect,
            "u_min": res.u_range[0], "u_max": res.u_range[1], "flagged": res.flagged}
    if make_metric is not None:
        diag.update(refinement_study(make_metric, sizes, exact))
    out["refinement_diagnostics"] = diag
    return out
