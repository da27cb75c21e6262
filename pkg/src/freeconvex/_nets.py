"""Deterministic direction nets on spheres, with certified covering meshes.

The mesh value returned with a net is a proven upper bound on the Euclidean
distance from any unit vector to its nearest net point, which is what the
Lipschitz corrections in geometry certificates consume.
"""

from __future__ import annotations

import numpy as np


def circle_net(n: int) -> tuple[np.ndarray, float]:
    ts = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    pts = np.stack([np.cos(ts), np.sin(ts)], axis=1)
    return pts, float(np.pi / n)


def sphere_grid(dim: int, steps: int) -> tuple[np.ndarray, float]:
    """Hyperspherical product grid.

    Coordinates x1 = cos t1, x2 = sin t1 cos t2, ...; the chart is 1-Lipschitz
    in every angle, so rounding each angle to its grid gives mesh
    sum_i (step_i / 2).
    """
    if dim == 1:
        return np.array([[1.0], [-1.0]]), 0.0
    if dim == 2:
        return circle_net(max(steps * 2, 8))
    polar = [np.linspace(0.0, np.pi, steps + 1) for _ in range(dim - 2)]
    azim = np.linspace(0.0, 2 * np.pi, 2 * steps, endpoint=False)
    grids = np.meshgrid(*polar, azim, indexing="ij")
    angles = np.stack([g.ravel() for g in grids], axis=1)
    pts = np.empty((angles.shape[0], dim))
    sin_acc = np.ones(angles.shape[0])
    for i in range(dim - 1):
        pts[:, i] = sin_acc * np.cos(angles[:, i])
        sin_acc = sin_acc * np.sin(angles[:, i])
    pts[:, dim - 1] = sin_acc
    pts = np.unique(np.round(pts, 12), axis=0)
    mesh = 0.5 * ((dim - 2) * (np.pi / steps) + (2 * np.pi / (2 * steps)))
    return pts, float(mesh)


def coordinate_directions(dim: int) -> np.ndarray:
    eye = np.eye(dim)
    return np.concatenate([eye, -eye], axis=0)


def direction_net(dim: int, target: int = 720, max_size: int = 20000):
    """Net of roughly ``target`` directions plus coordinate directions.

    Returns (points, mesh).  mesh == inf marks a net too coarse to certify
    (the guard for high dimensions); the points remain usable for sweeps and
    outer polytopes, which stay sound at any density.
    """
    if dim == 1:
        return np.array([[1.0], [-1.0]]), 0.0
    if dim == 2:
        pts, mesh = circle_net(max(8, target))
    else:
        steps = max(4, int(round(target ** (1.0 / (dim - 1)))))
        while True:
            est = (steps + 1) ** (dim - 2) * 2 * steps
            if est <= max_size or steps <= 4:
                break
            steps -= 1
        pts, mesh = sphere_grid(dim, steps)
        if len(pts) > max_size:
            mesh = float("inf")
    pts = np.concatenate([coordinate_directions(dim), pts], axis=0)
    return pts, mesh


def halton_directions(dim: int, n: int) -> np.ndarray:
    """Low-discrepancy sphere points (deterministic, no mesh claim)."""
    from scipy.stats import qmc, norm

    h = qmc.Halton(d=dim, scramble=False)
    u = h.random(n + 1)[1:]  # skip the origin sample
    g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-30)
    return g
