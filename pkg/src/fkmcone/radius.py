"""Normal radii of the cone over ``Sigma``.

The normal geodesic of ``S^{2n+1}(sqrt 2)`` leaving ``(x, y)`` in the
direction ``cos(alpha) (x, -y) + sin(alpha) c1 Y`` is

    gamma(theta) = cos(theta) (x, y) + sin(theta) cos(alpha) (x, -y)
                   + c1 sin(theta) sin(alpha) Y,

with ``Y = (sum_q b_q A_q^T y - c x, sum_q b_q A_q x - c y)`` (``A_0 = I``)
and ``c1 = 1 / sqrt(c (1 - c))``. Along ``alpha = +-pi/2`` the level value
is ``sin^2(phi_0 +- 2 theta)`` with ``sin^2(phi_0) = c``, so the two signs
return to ``Sigma`` at ``arctan sqrt((1-c)/c)`` and ``arctan sqrt(c/(1-c))``.
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
from pydantic import BaseModel
from scipy.optimize import brentq

from .clifford import CliffordSystem
from .config import Settings, settings
from .foliation import FoliationParams, LevelPoint, eval_F, foliation_params
from .utils import InvalidParameterError

__all__ = [
    "NormalRadiusResult",
    "ScanResult",
    "normal_radius",
    "geodesic_scan",
    "first_return",
    "numeric_normal_radius",
    "product_normal_radius",
]

logger = logging.getLogger("fkmcone")


class NormalRadiusResult(BaseModel):
    """Closed-form normal radius and the arctan branch attaining it."""

    m: int
    n: int
    c: float
    N_rad: float
    N_deg: float
    branch: str


class ScanResult(BaseModel):
    """First return of a normal geodesic to ``Sigma``."""

    alpha: float
    theta_first: float | None
    residuals: dict[str, float] | None = None


def normal_radius(m: int, n: int) -> NormalRadiusResult:
    """Closed-form normal radius ``min(arctan sqrt(c/(1-c)), arctan sqrt((1-c)/c))``.

    Parameters
    ----------
    m : int
        Generator count plus one, ``m >= 2``.
    n : int
        Sphere dimension, ``n >= m + 1``.

    Returns
    -------
    NormalRadiusResult
        Radius in radians and degrees; ``branch`` names the attaining form,
        ``"equal"`` when ``c = 1/2``.

    """
    c_exact = FoliationParams(m=m, k=1, n=n).c_exact
    c = float(c_exact)
    low = float(np.arctan(np.sqrt(c / (1.0 - c))))
    high = float(np.arctan(np.sqrt((1.0 - c) / c)))
    if c_exact * 2 == 1:
        branch = "equal"
    elif c_exact * 2 < 1:
        branch = "sqrt(c/(1-c))"
    else:
        branch = "sqrt((1-c)/c)"
    radius = min(low, high)
    return NormalRadiusResult(
        m=m, n=n, c=c, N_rad=radius, N_deg=float(np.degrees(radius)), branch=branch
    )


def _geodesic_data(
    system: CliffordSystem, p: LevelPoint, c: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bases ``(x, c1 Y_x)``, ``(y, c1 Y_y)`` and their pairings under each ``A_q``."""
    x, y = p.x, p.y
    mx = system.stack @ x
    mty = system.stack_t @ y
    b = mx @ y
    c1 = 1.0 / np.sqrt(c * (1.0 - c))
    u = c1 * (b @ mty - c * x)
    v = c1 * (b @ mx - c * y)
    xs = np.stack([x, u])
    ys = np.stack([y, v])
    # kernel[q, i, j] = <A_q xs_i, ys_j>
    kernel = np.einsum("qab,ib,ja->qij", system.stack, xs, ys)
    return xs, ys, kernel


def _residuals(
    theta: np.ndarray,
    alpha: float,
    c: float,
    xs: np.ndarray,
    ys: np.ndarray,
    kernel: np.ndarray,
) -> dict[str, np.ndarray]:
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    px = np.stack([ct + st * ca, st * sa], axis=-1)
    py = np.stack([ct - st * ca, st * sa], axis=-1)
    gx, gy = xs @ xs.T, ys @ ys.T
    vals = np.einsum("ti,qij,tj->tq", px, kernel, py)
    return {
        "norm_x": np.einsum("ti,ij,tj->t", px, gx, px) - 1.0,
        "norm_y": np.einsum("ti,ij,tj->t", py, gy, py) - 1.0,
        "level": np.sum(vals * vals, axis=1) - c,
    }


def geodesic_scan(
    system: CliffordSystem,
    p: LevelPoint,
    alpha: float,
    theta_max: float = 0.75 * np.pi,
    config: Settings | None = None,
) -> ScanResult:
    """Find the first ``theta`` at which the normal geodesic re-enters ``Sigma``.

    The membership residuals ``|x|^2 - 1``, ``|y|^2 - 1`` and ``F - c`` are
    evaluated on a uniform grid of ``(theta_min, theta_max]``; sign changes
    of each residual are refined with Brent's method and kept when all
    residuals vanish there.

    Raises
    ------
    InvalidParameterError
        If ``p`` is not on the minimal level.

    """
    config = config or settings
    c = foliation_params(system).c
    value = eval_F(system, p.x, p.y)
    if abs(value - c) > config.LEVEL_TOL:
        raise InvalidParameterError(f"point is on level {value!r}, not on c = {c!r}")
    if not config.SCAN_THETA_MIN < theta_max:
        raise InvalidParameterError(f"theta_max must exceed {config.SCAN_THETA_MIN}")

    xs, ys, kernel = _geodesic_data(system, p, c)

    def residuals(theta: np.ndarray | float) -> dict[str, np.ndarray]:
        return _residuals(np.atleast_1d(theta), alpha, c, xs, ys, kernel)

    grid = np.linspace(config.SCAN_THETA_MIN, theta_max, config.SCAN_POINTS)
    values = residuals(grid)
    candidates: list[float] = []
    for name, r in values.items():
        if np.max(np.abs(r)) <= 1e-12:
            # identically satisfied along this direction
            continue
        exact = np.flatnonzero(r == 0.0)
        candidates.extend(grid[exact])
        for j in np.flatnonzero(r[:-1] * r[1:] < 0):
            root = brentq(
                lambda t, name=name: float(residuals(t)[name][0]),
                grid[j],
                grid[j + 1],
                xtol=config.SCAN_XTOL,
            )
            candidates.append(root)

    for theta in sorted(candidates):
        at = {k: float(v[0]) for k, v in residuals(theta).items()}
        if max(abs(v) for v in at.values()) <= config.SCAN_RESIDUAL_TOL:
            t = np.sin(theta) * np.sin(alpha) / np.sqrt(c * (1.0 - c))
            r = np.cos(theta) + np.sin(theta) * np.cos(alpha) - c * t
            at["quadratic"] = float(r * r + t * t * c + 2.0 * r * t * c - 1.0)
            logger.debug("geodesic alpha=%.6f re-enters at theta=%.12f", alpha, theta)
            return ScanResult(alpha=alpha, theta_first=float(theta), residuals=at)
    return ScanResult(alpha=alpha, theta_first=None)


def first_return(
    system: CliffordSystem, p: LevelPoint, config: Settings | None = None
) -> ScanResult:
    """The scan along ``+-Y`` that re-enters ``Sigma`` first."""
    scans = [
        geodesic_scan(system, p, sign * np.pi / 2, config=config) for sign in (1, -1)
    ]
    hits = [s for s in scans if s.theta_first is not None]
    if not hits:
        raise InvalidParameterError("no re-intersection found along +-Y")
    return min(hits, key=lambda s: s.theta_first)


def numeric_normal_radius(
    system: CliffordSystem, p: LevelPoint, config: Settings | None = None
) -> float:
    """Shortest re-entry over the two normal directions ``+-Y`` of ``Sigma``."""
    theta = first_return(system, p, config).theta_first
    assert theta is not None
    return theta


def product_normal_radius(dims: Sequence[int], radii: Sequence[float]) -> float:
    """Normal radius of a minimal product cone.

    ``dim Sigma (1 - cos N) = min_i dim Sigma_i (1 - cos N_i)`` with
    ``dim Sigma = sum_i dim Sigma_i``.
    """
    if len(dims) != len(radii) or not dims:
        raise InvalidParameterError(
            "dims and radii must be non-empty and of equal length"
        )
    if any(d < 1 for d in dims):
        raise InvalidParameterError(f"factor dimensions must be >= 1, got {list(dims)}")
    if any(not 0.0 < r <= np.pi for r in radii):
        raise InvalidParameterError(
            f"factor radii must lie in (0, pi], got {list(radii)}"
        )
    worst = min(d * (1.0 - np.cos(r)) for d, r in zip(dims, radii))
    arg = 1.0 - worst / sum(dims)
    if not -1.0 <= arg <= 1.0:
        raise InvalidParameterError(f"arccos argument {arg} outside [-1, 1]")
    return float(np.arccos(arg))
