"""Closed embedded hypersurfaces N in R^m: spheres and ellipsoids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circle import ManifoldDomainError

__all__ = ["Sphere", "Ellipsoid", "manifold_from_config", "ManifoldDomainError"]


class _Hypersurface:
    """Shared projector logic for hypersurfaces ``{F = 1}``."""

    tube_radius: float
    dim: int

    def normal(self, xi: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def nearest_point(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def level(self, x: np.ndarray) -> np.ndarray:
        """Convex defining function, equal to 1 on N and < 1 inside."""
        raise NotImplementedError

    def membership_residual(self, xi: np.ndarray) -> np.ndarray:
        return np.abs(self.level(xi) - 1.0)

    def _check_on(self, xi: np.ndarray, tol: float = 1e-8) -> None:
        res = np.atleast_1d(self.membership_residual(xi))
        if np.any(res > tol):
            k = int(np.argmax(res))
            raise ManifoldDomainError(f"point {k} is off the manifold (residual {res[k]:.3e})")

    def tangent_projector(self, xi: np.ndarray, check: bool = True) -> np.ndarray:
        """P^T(xi) = I - n n^T; accepts (m,) or (K, m), returns (m, m) or (K, m, m)."""
        xi = np.asarray(xi, dtype=float)
        if check:
            self._check_on(xi)
        n = self.normal(xi)
        eye = np.eye(self.dim)
        return eye - n[..., :, None] * n[..., None, :]

    def normal_projector(self, xi: np.ndarray, check: bool = True) -> np.ndarray:
        n = self.normal(np.asarray(xi, dtype=float))
        if check:
            self._check_on(xi)
        return n[..., :, None] * n[..., None, :]

    def project_tangent(self, xi: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Row-wise P^T(xi_k) v_k without forming the matrices."""
        n = self.normal(xi)
        return v - np.sum(v * n, axis=-1, keepdims=True) * n

    def project_normal(self, xi: np.ndarray, v: np.ndarray) -> np.ndarray:
        n = self.normal(xi)
        return np.sum(v * n, axis=-1, keepdims=True) * n


@dataclass(frozen=True)
class Sphere(_Hypersurface):
    """Round sphere of radius ``radius`` in R^dim."""

    radius: float = 1.0
    dim: int = 3
    tube_radius: float | None = None

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.tube_radius is None:
            object.__setattr__(self, "tube_radius", self.radius / 2)

    def level(self, x):
        x = np.asarray(x, dtype=float)
        return np.sum(x * x, axis=-1) / self.radius ** 2

    def normal(self, xi):
        xi = np.asarray(xi, dtype=float)
        return xi / np.linalg.norm(xi, axis=-1, keepdims=True)

    def nearest_point(self, x):
        x = np.asarray(x, dtype=float)
        norm = np.linalg.norm(x, axis=-1, keepdims=True)
        # outside the ball the projection is always unique; inside, only away from the centre
        depth = np.atleast_1d(self.radius - norm[..., 0])
        if np.any(depth >= self.tube_radius):
            k = int(np.argmax(depth))
            raise ManifoldDomainError(
                f"sample {k} lies {depth[k]:.3e} inside the sphere, beyond the projection tube "
                f"({self.tube_radius})")
        return self.radius * x / norm

    def to_config(self) -> dict:
        return {"kind": "sphere", "radius": self.radius, "dim": self.dim}


@dataclass(frozen=True)
class Ellipsoid(_Hypersurface):
    """Ellipsoid sum x_i^2 / axes_i^2 = 1."""

    axes: tuple = (2.0, 1.0)
    tube_radius: float | None = None
    max_iter: int = 64
    tol: float = 1e-12

    def __post_init__(self):
        axes = tuple(float(a) for a in self.axes)
        if any(a <= 0 for a in axes):
            raise ValueError("semi-axes must be positive")
        object.__setattr__(self, "axes", axes)
        if self.tube_radius is None:
            object.__setattr__(self, "tube_radius", min(axes) / 2)

    @property
    def dim(self) -> int:
        return len(self.axes)

    def level(self, x):
        x = np.asarray(x, dtype=float)
        return np.sum((x / np.asarray(self.axes)) ** 2, axis=-1)

    def normal(self, xi):
        g = np.asarray(xi, dtype=float) / np.asarray(self.axes) ** 2
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def _project_one(self, x: np.ndarray) -> np.ndarray:
        a2 = np.asarray(self.axes) ** 2
        # start left of the root of f(mu) = sum a^2 x^2/(a^2+mu)^2 - 1 (convex, decreasing)
        mu = np.max(np.sqrt(a2) * np.abs(x) - a2)
        mu = max(mu, -a2.min() * (1 - 1e-12))
        for _ in range(self.max_iter):
            d = a2 + mu
            f = np.sum(a2 * x ** 2 / d ** 2) - 1.0
            if abs(f) < self.tol:
                break
            df = -2.0 * np.sum(a2 * x ** 2 / d ** 3)
            if df == 0.0:
                break
            mu -= f / df
        xi = a2 * x / (a2 + mu)
        return xi / np.sqrt(self.level(xi))  # removes the last ulp of drift

    def nearest_point(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, self.dim)
        if np.any(np.linalg.norm(flat, axis=1) == 0):
            raise ManifoldDomainError("nearest point undefined at the origin")
        out = np.array([self._project_one(p) for p in flat])
        # projection onto the convex body is unique outside; inside, only within the tube
        depth = np.where(self.level(flat) < 1.0, np.linalg.norm(out - flat, axis=1), 0.0)
        if np.any(depth >= self.tube_radius):
            k = int(np.argmax(depth))
            raise ManifoldDomainError(
                f"sample {k} lies {depth[k]:.3e} inside the ellipsoid, beyond the projection tube "
                f"({self.tube_radius})")
        return out.reshape(x.shape)

    def to_config(self) -> dict:
        return {"kind": "ellipsoid", "axes": list(self.axes)}


def manifold_from_config(cfg: dict):
    """Build a manifold from ``{"kind": "sphere", "radius": r}`` or ``{"kind": "ellipsoid", "axes": [...]}``."""
    kind = cfg.get("kind")
    if kind == "sphere":
        return Sphere(radius=float(cfg.get("radius", 1.0)), dim=int(cfg.get("dim", 3)),
                      tube_radius=cfg.get("tube_radius"))
    if kind == "ellipsoid":
        return Ellipsoid(axes=tuple(cfg["axes"]), tube_radius=cfg.get("tube_radius"))
    raise ValueError(f"unknown manifold kind {kind!r}")
