"""Canonical frames and shape operators of the minimal link.

At a point ``(x, y)`` of ``Sigma = {F = c}`` the frame consists of the
position ``X / sqrt(2)``, the normals ``nu_1 = (x, -y)/sqrt(2)`` and
``N = (e_0 + e_0')/sqrt(2)``, and the tangent vectors ``T``, ``e_i``,
``e_i'``. Shape operators are those of ``Sigma / sqrt(2)`` in the unit
sphere, expressed in the tangent basis ``(e_1 .. e_{n-1}, e_1' .. e_{n-1}', T)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from pydantic import BaseModel
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize_scalar

from .clifford import CliffordSystem
from .config import Settings, settings
from .foliation import (
    FoliationParams,
    LevelPoint,
    derivatives,
    eval_F,
    foliation_params,
    sample_level_point,
)
from .utils import FocalPointError, InvalidParameterError

__all__ = [
    "FrameBundle",
    "AlphaEstimate",
    "DetProfile",
    "NumericProfile",
    "build_frame",
    "shape_operators",
    "shape_operator",
    "alpha_sq",
    "det_profile",
    "numeric_profile",
    "slice_blocks",
    "slice_curvatures",
]

logger = logging.getLogger("fkmcone")


@dataclass(frozen=True, eq=False)
class FrameBundle:
    """Canonical frame of ``Sigma`` at ``(x, y)``.

    ``eps`` and ``eps_p`` hold the slice tangent vectors as columns of
    ``R^{n+1}``; ``e_i = (eps_i, 0)`` and ``e_i' = (0, eps_p_i)``.
    """

    x: np.ndarray
    y: np.ndarray
    e0: np.ndarray
    e0_p: np.ndarray
    eps: np.ndarray
    eps_p: np.ndarray
    grad_norm: float

    @property
    def dim(self) -> int:
        return self.x.size

    @property
    def position(self) -> np.ndarray:
        return np.concatenate([self.x, self.y]) / np.sqrt(2.0)

    @property
    def nu1(self) -> np.ndarray:
        return np.concatenate([self.x, -self.y]) / np.sqrt(2.0)

    @property
    def normal(self) -> np.ndarray:
        """``N = (e_0 + e_0') / sqrt(2)``, unit normal of ``Sigma`` in the product."""
        return np.concatenate([self.e0, self.e0_p]) / np.sqrt(2.0)

    @property
    def tangent(self) -> np.ndarray:
        """``T = (e_0 - e_0') / sqrt(2)``."""
        return np.concatenate([self.e0, -self.e0_p]) / np.sqrt(2.0)

    @property
    def tangent_basis(self) -> np.ndarray:
        """``(2(n+1), 2n-1)`` columns ``e_1 .. e_{n-1}, e_1' .. e_{n-1}', T``."""
        d, r = self.dim, self.eps.shape[1]
        out = np.zeros((2 * d, 2 * r + 1))
        out[:d, :r] = self.eps
        out[d:, r : 2 * r] = self.eps_p
        out[:, -1] = self.tangent
        return out

    def vectors(self) -> np.ndarray:
        """All ``2n + 2`` frame vectors as columns.

        Ordered ``X/sqrt2, nu_1, N, T, e_i, e_i'``.
        """
        basis = self.tangent_basis
        head = [self.position, self.nu1, self.normal, basis[:, -1]]
        return np.column_stack([*head, basis[:, :-1]])


def _complete(*vectors: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of ``vectors`` (orthonormal inputs).

    Columns are chosen by pivoted QR of the complementary projector, i.e.
    largest remaining norm first, so the result is a deterministic function
    of the inputs.
    """
    d = vectors[0].size
    proj = np.eye(d)
    for v in vectors:
        proj -= np.outer(v, v)
    q, _, _ = scipy.linalg.qr(proj, pivoting=True)
    return q[:, : d - len(vectors)]


def build_frame(
    system: CliffordSystem, p: LevelPoint, config: Settings | None = None
) -> FrameBundle:
    """Build the canonical frame of ``Sigma`` at ``p``.

    Raises
    ------
    InvalidParameterError
        If ``p`` is not on the minimal level ``c`` within ``LEVEL_TOL``.
    FocalPointError
        If a slice gradient vanishes.

    """
    config = config or settings
    c = foliation_params(system).c
    value = eval_F(system, p.x, p.y)
    if abs(value - c) > config.LEVEL_TOL:
        raise InvalidParameterError(f"point is on level {value!r}, not on c = {c!r}")
    d = derivatives(system, p.x, p.y, config)
    n1, n2 = d.normal_x, d.normal_y
    len1, len2 = np.linalg.norm(n1), np.linalg.norm(n2)
    if min(len1, len2) <= 1e-12:
        raise FocalPointError("slice gradient vanishes at the requested point")
    e0, e0_p = n1 / len1, n2 / len2
    return FrameBundle(
        x=d.x,
        y=d.y,
        e0=e0,
        e0_p=e0_p,
        eps=_complete(d.x, e0),
        eps_p=_complete(d.y, e0_p),
        grad_norm=float(np.linalg.norm(d.grad)),
    )


def shape_operators(
    system: CliffordSystem, frame: FrameBundle, config: Settings | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Rescaled shape operators in the directions ``nu_1`` and ``nu_2 = N``.

    For ``Sigma`` cut out by ``|x|^2 = 1``, ``|y|^2 = 1`` and ``F = c``, the
    second fundamental form along ``sum_a lam_a grad f_a`` is
    ``-sum_a lam_a Hess f_a``. Both matrices are multiplied by ``sqrt 2`` for
    the unit-sphere link.
    """
    basis = frame.tangent_basis
    d = frame.dim
    bx, by = basis[:d], basis[d:]
    a1 = -(bx.T @ bx - by.T @ by)
    der = derivatives(system, frame.x, frame.y, config)
    a2 = -np.sqrt(2.0) * der.tangent_hessian(basis) / frame.grad_norm
    return 0.5 * (a1 + a1.T), a2


def shape_operator(
    system: CliffordSystem,
    frame: FrameBundle,
    beta: float,
    config: Settings | None = None,
) -> np.ndarray:
    """Shape operator in the normal direction ``cos(beta) nu_1 + sin(beta) nu_2``."""
    a1, a2 = shape_operators(system, frame, config)
    return np.cos(beta) * a1 + np.sin(beta) * a2


class AlphaEstimate(BaseModel):
    """Sup of ``||A_nu||^2`` over sampled points and normal angles.

    ``alpha_sq`` and ``closed_form`` are in the unit-sphere scaling;
    ``nu1_norm_sq`` and ``nu2_norm_sq`` are reported for ``Sigma`` in
    ``S^{2n+1}(sqrt 2)`` (half the rescaled values).
    """

    alpha_sq: float
    closed_form: float
    nu1_norm_sq: float
    nu2_norm_sq: float
    cross_trace: float
    beta_max: float
    points: int


def _refine_max(
    f, grid: np.ndarray, values: np.ndarray, xatol: float
) -> tuple[float, float]:
    j = int(np.argmax(values))
    step = grid[1] - grid[0]
    res = minimize_scalar(
        lambda b: -f(b),
        bounds=(grid[j] - step, grid[j] + step),
        method="bounded",
        options={"xatol": xatol},
    )
    if -res.fun > values[j]:
        return float(res.x), float(-res.fun)
    return float(grid[j]), float(values[j])


def _beta_grid(resolution: int) -> np.ndarray:
    if resolution < 64:
        raise InvalidParameterError(
            f"beta grid resolution must be >= 64, got {resolution}"
        )
    return np.linspace(0.0, 2.0 * np.pi, resolution, endpoint=False)


def alpha_sq(
    system: CliffordSystem,
    samples: Sequence[LevelPoint] | int,
    resolution: int | None = None,
    seed: int = 0,
    config: Settings | None = None,
) -> AlphaEstimate:
    """Estimate ``alpha^2 = sup_nu ||A_nu||^2`` over points of ``Sigma``.

    Parameters
    ----------
    system : CliffordSystem
        Clifford system defining ``F``.
    samples : sequence of LevelPoint or int
        Points on the minimal level, or a count of points to draw with ``seed``.
    resolution : int, optional
        Size of the ``beta`` grid (>= 64); defaults to ``BETA_GRID``.
    seed : int
        Seed used when ``samples`` is a count.
    config : Settings, optional
        Tolerances; defaults to the global ``settings``.

    Returns
    -------
    AlphaEstimate
        Estimate next to the closed form ``6 (n - 1)``.

    """
    config = config or settings
    grid = _beta_grid(resolution or config.BETA_GRID)
    params = foliation_params(system)
    if isinstance(samples, int):
        points = [
            sample_level_point(system, params.c, seed, index=i) for i in range(samples)
        ]
    else:
        points = list(samples)
    if not points:
        raise InvalidParameterError("alpha_sq needs at least one sample point")

    best, beta_best = -np.inf, 0.0
    nu1 = nu2 = cross = 0.0
    for p in points:
        a1, a2 = shape_operators(system, build_frame(system, p, config), config)
        n11, n22, n12 = np.sum(a1 * a1), np.sum(a2 * a2), np.sum(a1 * a2)

        def frob(beta, n11=n11, n22=n22, n12=n12):
            cb, sb = np.cos(beta), np.sin(beta)
            return cb * cb * n11 + sb * sb * n22 + 2.0 * cb * sb * n12

        beta, value = _refine_max(frob, grid, frob(grid), config.BETA_XTOL)
        if value > best:
            best, beta_best = value, beta
        nu1, nu2, cross = max(nu1, n11 / 2), max(nu2, n22 / 2), max(cross, abs(n12))

    logger.debug(
        "alpha^2 over %d points: %.12g at beta=%.6f", len(points), best, beta_best
    )
    return AlphaEstimate(
        alpha_sq=best,
        closed_form=6.0 * (params.n - 1),
        nu1_norm_sq=nu1,
        nu2_norm_sq=nu2,
        cross_trace=cross,
        beta_max=beta_best % (2 * np.pi),
        points=len(points),
    )


@dataclass(frozen=True, eq=False)
class DetProfile:
    """``p(t) = inf_beta det(I - t A_beta)`` on a grid of ``t``.

    ``beta``, ``frob_sq`` and ``trace`` describe the minimizing direction.
    """

    t: np.ndarray
    p: np.ndarray
    beta: np.ndarray
    frob_sq: np.ndarray
    trace: np.ndarray


def det_profile(
    system: CliffordSystem,
    frame: FrameBundle,
    t_grid: Sequence[float] | np.ndarray,
    resolution: int | None = None,
    config: Settings | None = None,
) -> DetProfile:
    """Minimize ``det(I - t A_nu)`` over unit normals ``nu`` for each ``t``."""
    config = config or settings
    t_arr = np.asarray(t_grid, dtype=float)
    if t_arr.ndim != 1 or (t_arr < 0).any():
        raise InvalidParameterError("t grid must be a 1-D array of non-negative values")
    grid = _beta_grid(resolution or config.BETA_GRID)
    a1, a2 = shape_operators(system, frame, config)
    eye = np.eye(a1.shape[0])
    family = np.cos(grid)[:, None, None] * a1 + np.sin(grid)[:, None, None] * a2

    def operator(beta: float) -> np.ndarray:
        return np.cos(beta) * a1 + np.sin(beta) * a2

    p_out, b_out, f_out, tr_out = [], [], [], []
    for t in t_arr:
        dets = np.linalg.det(eye - t * family)

        def neg_det(beta: float, t: float = t) -> float:
            return -float(np.linalg.det(eye - t * operator(beta)))

        # minimizing det is maximizing its negative
        beta, neg = _refine_max(neg_det, grid, -dets, config.BETA_XTOL)
        a = operator(beta)
        p_out.append(-neg)
        b_out.append(beta % (2 * np.pi))
        f_out.append(float(np.sum(a * a)))
        tr_out.append(float(np.trace(a)))

    return DetProfile(
        t=t_arr,
        p=np.array(p_out),
        beta=np.array(b_out),
        frob_sq=np.array(f_out),
        trace=np.array(tr_out),
    )


class NumericProfile:
    """Monotone interpolant of :func:`det_profile` for the Lawlor solver.

    Tabulated on ``[0, t_max]``; larger ``t`` are evaluated directly.
    """

    def __init__(
        self,
        system: CliffordSystem,
        frame: FrameBundle,
        t_max: float,
        points: int = 200,
        config: Settings | None = None,
    ) -> None:
        self._system = system
        self._frame = frame
        self._config = config
        self.t_max = t_max
        t_grid = np.linspace(0.0, t_max, points)
        table = det_profile(system, frame, t_grid, config=config)
        self._interp = PchipInterpolator(table.t, table.p, extrapolate=False)
        a1, a2 = shape_operators(system, frame, config)
        n11, n22, n12 = np.sum(a1 * a1), np.sum(a2 * a2), np.sum(a1 * a2)
        # sup over beta of cos^2 n11 + sin^2 n22 + 2 sin cos n12
        self.alpha_sq = float(0.5 * (n11 + n22) + np.hypot(0.5 * (n11 - n22), n12))

    def __call__(self, t: float) -> float:
        if t <= self.t_max:
            return float(self._interp(t))
        exact = det_profile(self._system, self._frame, [t], config=self._config)
        return float(exact.p[0])


def numeric_profile(
    system: CliffordSystem,
    frame: FrameBundle,
    t_max: float | None = None,
    points: int = 200,
    config: Settings | None = None,
) -> NumericProfile:
    """Tabulate the exact curvature profile for ``profile="numeric"`` solves.

    ``t_max`` defaults to twice the first zero of the ``alpha``-bound with
    ``alpha^2 = 6 (n - 1)``.
    """
    if t_max is None:
        n = foliation_params(system).n
        d = 2 * n - 2
        alpha = np.sqrt(6.0 * (n - 1))
        t_max = 2.0 / (alpha * np.sqrt((d - 1) / d))
    return NumericProfile(system, frame, t_max, points, config)


def slice_blocks(a2: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """The ``e``- and ``e'``-blocks of the rescaled ``nu_2`` shape operator.

    They are the second fundamental forms of the two slices through the point.
    """
    r = n - 1
    return a2[:r, :r], a2[r : 2 * r, r : 2 * r]


def slice_curvatures(m: int, n: int) -> np.ndarray:
    """Sorted principal curvatures of the minimal slice.

    The slice is ``S^{m-1}(sqrt c) x S^{n-m}(sqrt(1-c))`` in ``S^n``.
    """
    c = FoliationParams(m=m, k=1, n=n).c
    return np.sort(
        np.concatenate(
            [
                np.full(m - 1, -np.sqrt((1.0 - c) / c)),
                np.full(n - m, np.sqrt(c / (1.0 - c))),
            ]
        )
    )
