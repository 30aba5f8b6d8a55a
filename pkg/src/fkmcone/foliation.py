"""The splitting form ``F(x, y) = <x, y>^2 + sum_q <A_q x, y>^2`` on S^n x S^n.

With ``A_0 = I`` and ``b_q = <A_q x, y>`` the form is ``F = sum_q b_q^2``, so
every derivative is a short contraction of the stacks ``A_q x`` and
``A_q^T y``. All quantities here are closed forms; finite differences only
appear in :func:`identity_report` as an independent check.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg
from pydantic import BaseModel
from tqdm.contrib.concurrent import thread_map

from .clifford import CliffordSystem, symmetric_system
from .config import Settings, settings
from .utils import FocalPointError, InvalidParameterError, point_rng, random_unit

__all__ = [
    "FoliationParams",
    "LevelPoint",
    "Derivatives",
    "IdentityReport",
    "VerifySummary",
    "foliation_params",
    "eval_F",
    "renormalized_F",
    "cartan_muenzner",
    "derivatives",
    "sample_level_point",
    "identity_report",
    "mean_curvature",
    "mean_curvature_closed_form",
    "second_form_norm",
    "second_form_closed_form",
    "hessian_second_form_norm",
    "sphere_mean_curvature",
    "verify_samples",
]

logger = logging.getLogger("fkmcone")


@dataclass(frozen=True)
class FoliationParams:
    """Integers ``(m, k, n)`` and the minimal level ``c = (m - 1)/(n - 1)``."""

    m: int
    k: int
    n: int

    def __post_init__(self) -> None:
        if self.m < 2 or self.n < self.m + 1:
            raise InvalidParameterError(
                f"need m >= 2 and n >= m + 1, got m={self.m}, n={self.n}"
            )

    @property
    def c_exact(self) -> Fraction:
        return Fraction(self.m - 1, self.n - 1)

    @property
    def c(self) -> float:
        return (self.m - 1) / (self.n - 1)


def foliation_params(system: CliffordSystem) -> FoliationParams:
    """Return the foliation parameters of ``system``."""
    return FoliationParams(m=system.m, k=system.k, n=system.n)


@dataclass(frozen=True, eq=False)
class LevelPoint:
    """A point ``(x, y)`` of S^n x S^n with level value ``s = F(x, y)``."""

    x: np.ndarray
    y: np.ndarray
    s: float

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=float)
        y = np.array(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise InvalidParameterError(
                f"x and y must be equal-length vectors, got {x.shape}, {y.shape}"
            )
        if not 0.0 <= self.s <= 1.0:
            raise InvalidParameterError(f"level value must lie in [0, 1], got {self.s}")
        _check_unit(x, y, settings.UNIT_TOL)
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "s", float(self.s))

    @property
    def point(self) -> np.ndarray:
        """The concatenated vector ``(x, y)`` in ``R^{2(n+1)}``."""
        return np.concatenate([self.x, self.y])


def _check_dims(system: CliffordSystem, x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != (system.dim,) or y.shape != (system.dim,):
        raise InvalidParameterError(
            f"expected vectors of length {system.dim}, got {x.shape} and {y.shape}"
        )


def _check_unit(x: np.ndarray, y: np.ndarray, tol: float) -> None:
    for name, v in (("x", x), ("y", y)):
        if abs(v @ v - 1.0) > tol:
            raise InvalidParameterError(
                f"{name} is not a unit vector: |{name}|^2 = {v @ v!r}"
            )


def _contractions(
    system: CliffordSystem, x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # rows: A_q x, A_q^T y, and b_q = <A_q x, y>
    mx = system.stack @ x
    mty = system.stack_t @ y
    return mx, mty, mx @ y


def eval_F(system: CliffordSystem, x: np.ndarray, y: np.ndarray) -> float:
    """Evaluate ``F(x, y) = <x, y>^2 + sum_q <A_q x, y>^2``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_dims(system, x, y)
    b = (system.stack @ x) @ y
    return float(b @ b)


def renormalized_F(system: CliffordSystem, x: np.ndarray, y: np.ndarray) -> float:
    """Return ``2 F(x, y) - |x|^2 |y|^2``, which lies in [-1, 1] on S^n x S^n."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 2.0 * eval_F(system, x, y) - float((x @ x) * (y @ y))


def cartan_muenzner(system: CliffordSystem, x: np.ndarray, y: np.ndarray) -> float:
    """Ambient FKM polynomial ``|z|^4 - 2 sum_i <P_i z, z>^2`` at ``z = (x, y)``.

    On the product this equals
    ``(|x|^2 + |y|^2)^2 - 2 (|x|^2 - |y|^2)^2 - 8 F(x, y)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_dims(system, x, y)
    z = np.concatenate([x, y])
    quad = np.array([z @ (p @ z) for p in symmetric_system(system)], dtype=float)
    return float((z @ z) ** 2 - 2.0 * quad @ quad)


@dataclass(frozen=True, eq=False)
class Derivatives:
    """Analytic derivatives of ``F`` at a point of S^n x S^n.

    Attributes
    ----------
    x, y : np.ndarray
        Base point.
    value : float
        ``F(x, y)``.
    dfdx, dfdy : np.ndarray
        Ambient partial gradients.
    grad : np.ndarray
        Tangential gradient on S^n x S^n, length ``2 (n + 1)``.
    lap_euclid : float
        Euclidean Laplacian ``2 m (|x|^2 + |y|^2)``.
    lap_bar : float
        Laplacian on S^n x S^n.
    jac : np.ndarray
        ``(2(n+1), m)`` matrix whose columns are the gradients of ``b_q``.
    mixed : np.ndarray
        ``sum_q b_q A_q^T``, the (x, y) block of the second-order part.

    """

    x: np.ndarray
    y: np.ndarray
    value: float
    dfdx: np.ndarray
    dfdy: np.ndarray
    grad: np.ndarray
    lap_euclid: float
    lap_bar: float
    jac: np.ndarray
    mixed: np.ndarray

    @property
    def dim(self) -> int:
        return self.x.size

    @property
    def dfd(self) -> np.ndarray:
        return np.concatenate([self.dfdx, self.dfdy])

    @property
    def normal_x(self) -> np.ndarray:
        """``N_1``: slice gradient ``dF/dx - <dF/dx, x> x``."""
        return self.grad[: self.dim]

    @property
    def normal_y(self) -> np.ndarray:
        """``N_2``: slice gradient ``dF/dy - <dF/dy, y> y``."""
        return self.grad[self.dim :]

    def hessian_vector(self, v: np.ndarray) -> np.ndarray:
        """Ambient Hessian applied to ``v`` (a vector or a column matrix)."""
        d = self.dim
        out = 2.0 * self.jac @ (self.jac.T @ v)
        out[:d] += 2.0 * self.mixed @ v[d:]
        out[d:] += 2.0 * self.mixed.T @ v[:d]
        return out

    def hessian(self) -> np.ndarray:
        """Full ambient Hessian, ``(2(n+1), 2(n+1))``."""
        return self.hessian_vector(np.eye(2 * self.dim))

    def tangent_hessian(self, basis: np.ndarray) -> np.ndarray:
        """Hessian of ``F`` on S^n x S^n in the tangent columns of ``basis``."""
        d = self.dim
        lam_x = self.dfdx @ self.x
        lam_y = self.dfdy @ self.y
        shifted = basis.copy()
        shifted[:d] *= lam_x
        shifted[d:] *= lam_y
        h = basis.T @ (self.hessian_vector(basis) - shifted)
        return 0.5 * (h + h.T)


def derivatives(
    system: CliffordSystem,
    x: np.ndarray,
    y: np.ndarray,
    config: Settings | None = None,
) -> Derivatives:
    """Compute the analytic derivative bundle of ``F`` at a unit point.

    Parameters
    ----------
    system : CliffordSystem
        Clifford system defining ``F``.
    x, y : np.ndarray
        Unit vectors of length ``system.dim``.
    config : Settings, optional
        Tolerances; defaults to the global ``settings``.

    Returns
    -------
    Derivatives
        Gradients, Hessian operators and Laplacians.

    """
    config = config or settings
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_dims(system, x, y)
    _check_unit(x, y, config.UNIT_TOL)

    mx, mty, b = _contractions(system, x, y)
    dfdx = 2.0 * b @ mty
    dfdy = 2.0 * b @ mx
    lam_x = dfdx @ x
    lam_y = dfdy @ y
    grad = np.concatenate([dfdx - lam_x * x, dfdy - lam_y * y])

    lap_euclid = 2.0 * float(np.sum(mty * mty) + np.sum(mx * mx))
    # normal second derivatives of each sphere factor
    xhx = 2.0 * float(np.sum((mty @ x) ** 2))
    yhy = 2.0 * float(np.sum((mx @ y) ** 2))
    n = system.n
    lap_bar = lap_euclid - xhx - yhy - n * (lam_x + lam_y)

    return Derivatives(
        x=x,
        y=y,
        value=float(b @ b),
        dfdx=dfdx,
        dfdy=dfdy,
        grad=grad,
        lap_euclid=lap_euclid,
        lap_bar=lap_bar,
        jac=np.vstack([mty.T, mx.T]),
        mixed=np.tensordot(b, system.stack_t, axes=1),
    )


def sample_level_point(
    system: CliffordSystem,
    s: float,
    seed: int | np.random.Generator,
    index: int = 0,
) -> LevelPoint:
    """Draw a point of the level set ``F = s``.

    ``x`` is uniform on the sphere; ``y = sqrt(s) u + sqrt(1 - s) w`` with
    ``u`` a unit vector of ``span{x, A_q x}`` and ``w`` a unit vector of its
    orthogonal complement.

    Parameters
    ----------
    system : CliffordSystem
        Clifford system defining ``F``.
    s : float
        Target level in [0, 1].
    seed : int or np.random.Generator
        Run seed (combined with ``index``) or an explicit generator.
    index : int
        Sample counter used when ``seed`` is an integer.

    Returns
    -------
    LevelPoint
        Point with ``|F(x, y) - s| <= 1e-12``.

    """
    if not 0.0 <= s <= 1.0:
        raise InvalidParameterError(f"level value must lie in [0, 1], got {s}")
    rng = seed if isinstance(seed, np.random.Generator) else point_rng(seed, index)
    d = system.dim

    x = random_unit(rng, d)
    span = system.stack @ x
    u = random_unit(rng, system.m) @ span
    w = rng.standard_normal(d)
    for _ in range(2):
        w -= span.T @ (span @ w)
    w /= np.linalg.norm(w)

    y = np.sqrt(s) * u + np.sqrt(1.0 - s) * w
    y /= np.linalg.norm(y)
    return LevelPoint(x=x, y=y, s=s)


class IdentityReport(BaseModel):
    """Residuals of the isoparametric and isonormal identities at one point."""

    level: float
    grad_identity: float
    laplacian_identity: float
    c_value: float
    c_numerator: float
    czero_x: float
    czero_y: float
    fd_delta: float
    fd_richardson: float
    max_abs: float

    def within(self, config: Settings | None = None) -> bool:
        """Return ``True`` if every residual is inside its tolerance."""
        config = config or settings
        return (
            self.grad_identity <= config.IDENTITY_TOL
            and self.laplacian_identity <= config.IDENTITY_TOL
            and self.c_value <= config.C_TOL
            and max(self.czero_x, self.czero_y) <= config.CZERO_TOL
            and self.fd_delta <= config.FD_TOL
        )


def _regular(d: Derivatives) -> float:
    s = d.value
    b = 8.0 * s - 8.0 * s * s
    if not 0.0 < s < 1.0 or b <= 1e-14:
        raise FocalPointError(f"level {s!r} is focal: the tangential gradient vanishes")
    return float(d.grad @ d.grad)


def _retract(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _fd_gradient(
    system: CliffordSystem, p: LevelPoint, d: Derivatives, config: Settings
) -> tuple[float, float]:
    """Tangential central differences with a (h, h/2) Richardson pair."""
    dim = system.dim
    rng = np.random.default_rng(0)
    h = config.FD_STEP
    worst = 0.0
    spread = 0.0
    for _ in range(config.FD_DIRECTIONS):
        v = rng.standard_normal(2 * dim)
        v[:dim] -= (v[:dim] @ p.x) * p.x
        v[dim:] -= (v[dim:] @ p.y) * p.y
        v /= np.linalg.norm(v)

        def central(step: float, v: np.ndarray = v) -> float:
            vx, vy = step * v[:dim], step * v[dim:]
            plus = eval_F(system, _retract(p.x + vx), _retract(p.y + vy))
            minus = eval_F(system, _retract(p.x - vx), _retract(p.y - vy))
            return (plus - minus) / (2.0 * step)

        coarse, fine = central(h), central(h / 2)
        estimate = (4.0 * fine - coarse) / 3.0
        analytic = float(d.grad @ v)
        worst = max(worst, abs(estimate - analytic) / (1.0 + abs(analytic)))
        spread = max(spread, abs(fine - coarse))
    return worst, spread


def identity_report(
    system: CliffordSystem, p: LevelPoint, config: Settings | None = None
) -> IdentityReport:
    """Evaluate the identities of the FKM splitting form at a regular point.

    Raises
    ------
    FocalPointError
        If the level of ``p`` is 0 or 1.

    """
    config = config or settings
    d = derivatives(system, p.x, p.y, config)
    grad_sq = _regular(d)
    s = d.value
    m, n = system.m, system.n

    grad_identity = abs(grad_sq - (8.0 * s - 8.0 * s * s))
    laplacian_identity = abs(d.lap_bar - (4.0 * m - 4.0 * (n + 1) * s))
    n1, n2 = d.normal_x, d.normal_y
    c_numerator = float(n1 @ n1 - n2 @ n2)
    czero_x = abs(float(d.dfdx @ d.dfdx) - 4.0 * s * float(p.y @ p.y))
    czero_y = abs(float(d.dfdy @ d.dfdy) - 4.0 * s * float(p.x @ p.x))
    fd_delta, fd_richardson = _fd_gradient(system, p, d, config)

    report = IdentityReport(
        level=s,
        grad_identity=grad_identity,
        laplacian_identity=laplacian_identity,
        c_value=abs(c_numerator) / grad_sq,
        c_numerator=c_numerator,
        czero_x=czero_x,
        czero_y=czero_y,
        fd_delta=fd_delta,
        fd_richardson=fd_richardson,
        max_abs=max(grad_identity, laplacian_identity, czero_x, czero_y),
    )
    logger.debug("identity report at s=%.6f: %s", s, report)
    return report


def mean_curvature_closed_form(m: int, n: int, s: float) -> float:
    """Return ``4 (1 - m + (n - 1) s) / sqrt(8 s - 8 s^2)``."""
    if not 0.0 < s < 1.0:
        raise FocalPointError(f"level {s!r} is focal")
    return 4.0 * (1.0 - m + (n - 1) * s) / np.sqrt(8.0 * s - 8.0 * s * s)


def mean_curvature(
    system: CliffordSystem, p: LevelPoint, config: Settings | None = None
) -> float:
    """Mean curvature of the level hypersurface through ``p``.

    Computed as ``<grad |grad F|^2, grad F> / (2 |grad F|^3) - lap F / |grad F|``
    with the unit normal ``grad F / |grad F|``; the first term uses
    ``grad |grad F|^2 = 2 Hess F (grad F)``.
    """
    d = derivatives(system, p.x, p.y, config)
    grad_sq = _regular(d)
    g = d.grad
    dim = system.dim
    hg = d.hessian_vector(g)
    gx, gy = g[:dim], g[dim:]
    g_hess_g = float(
        g @ hg - (d.dfdx @ p.x) * (gx @ gx) - (d.dfdy @ p.y) * (gy @ gy)
    )
    norm = np.sqrt(grad_sq)
    return g_hess_g / norm**3 - d.lap_bar / norm


def second_form_closed_form(m: int, n: int, s: float) -> float:
    """Squared norm of the second fundamental form of the level ``F = s``.

    Assembled from ``b = 8 s - 8 s^2`` (``|grad F|^2``) and
    ``a = 4 m - 4 (n + 1) s`` (``lap F``) term by term:
    Bochner, gradient of the Laplacian, Ricci, and the two normal corrections.
    """
    if not 0.0 < s < 1.0:
        raise FocalPointError(f"level {s!r} is focal")
    b = 8.0 * s - 8.0 * s * s
    db, ddb = 8.0 - 16.0 * s, -16.0
    a, da = 4.0 * m - 4.0 * (n + 1) * s, -4.0 * (n + 1)
    bochner = 0.5 * (ddb * b + db * a)
    lap_gradient = -da * b
    ricci = -(n - 1) * b
    normal_grad = -(db * db * b) / (2.0 * b)
    normal_normal = (db * b) ** 2 / (4.0 * b * b)
    return (bochner + lap_gradient + ricci + normal_grad + normal_normal) / b


def second_form_norm(system: CliffordSystem, p: LevelPoint) -> float:
    """``||B||^2`` of the level hypersurface through ``p`` from the closed form."""
    s = eval_F(system, p.x, p.y)
    return second_form_closed_form(system.m, system.n, s)


def hessian_second_form_norm(
    system: CliffordSystem, p: LevelPoint, config: Settings | None = None
) -> float:
    """``||B||^2`` from the Hessian projected onto the level set's tangent space."""
    d = derivatives(system, p.x, p.y, config)
    grad_sq = _regular(d)
    dim = system.dim
    constraints = np.zeros((3, 2 * dim))
    constraints[0, :dim] = p.x
    constraints[1, dim:] = p.y
    constraints[2] = d.grad
    basis = scipy.linalg.null_space(constraints)
    hess = d.tangent_hessian(basis)
    return float(np.sum(hess * hess) / grad_sq)


def sphere_mean_curvature(
    system: CliffordSystem, p: LevelPoint, config: Settings | None = None
) -> float:
    """Length of the mean curvature vector of the level set inside S^{2n+1}(sqrt 2).

    The vector is ``H nu + (C / 2) (x, -y)`` with ``C`` the isonormal defect.
    """
    d = derivatives(system, p.x, p.y, config)
    grad_sq = _regular(d)
    n1, n2 = d.normal_x, d.normal_y
    c_defect = float(n1 @ n1 - n2 @ n2) / grad_sq
    h = mean_curvature(system, p, config)
    return float(np.hypot(h, c_defect / np.sqrt(2.0)))


class VerifySummary(BaseModel):
    """Worst residuals of the identity suite over a seeded sample."""

    m: int
    k: int
    n: int
    samples: int
    seed: int
    grad_identity: float
    laplacian_identity: float
    c_value: float
    czero: float
    fd_delta: float
    max_abs: float
    minimal_mean_curvature: float
    second_form_residual: float
    hessian_second_form_residual: float
    passed: bool
    tolerances: dict[str, float]


def verify_samples(
    system: CliffordSystem,
    samples: int,
    seed: int,
    level: float | None = None,
    config: Settings | None = None,
    workers: int = 1,
) -> VerifySummary:
    """Run :func:`identity_report` over ``samples`` seeded points.

    Sample ``i`` draws its level uniformly from [0.05, 0.95] (unless
    ``level`` is given) and its point from ``point_rng(seed, i)``. At the
    minimal level ``c`` the mean curvature and both ``||B||^2`` routes are
    compared with ``0`` and ``3 (n - 1)``.
    """
    config = config or settings
    if samples < 1:
        raise InvalidParameterError(f"need at least one sample, got {samples}")

    def one(i: int) -> IdentityReport:
        rng = point_rng(seed, i)
        s = level if level is not None else float(rng.uniform(0.05, 0.95))
        return identity_report(system, sample_level_point(system, s, rng), config)

    if workers > 1:
        reports = thread_map(one, range(samples), max_workers=workers, disable=True)
    else:
        reports = [one(i) for i in range(samples)]

    params = foliation_params(system)
    minimal = sample_level_point(system, params.c, seed, index=samples)
    h_min = abs(mean_curvature(system, minimal, config))
    target = 3.0 * (params.n - 1)
    second_residual = abs(second_form_norm(system, minimal) - target)
    hessian_residual = abs(hessian_second_form_norm(system, minimal, config) - target)

    summary = VerifySummary(
        m=system.m,
        k=system.k,
        n=system.n,
        samples=samples,
        seed=seed,
        grad_identity=max(r.grad_identity for r in reports),
        laplacian_identity=max(r.laplacian_identity for r in reports),
        c_value=max(r.c_value for r in reports),
        czero=max(max(r.czero_x, r.czero_y) for r in reports),
        fd_delta=max(r.fd_delta for r in reports),
        max_abs=max(r.max_abs for r in reports),
        minimal_mean_curvature=h_min,
        second_form_residual=second_residual,
        hessian_second_form_residual=hessian_residual,
        passed=all(r.within(config) for r in reports)
        and h_min <= config.MEAN_CURVATURE_TOL
        and max(second_residual, hessian_residual) <= config.SECOND_FORM_TOL,
        tolerances=config.tolerances(),
    )
    logger.info("verified %d points of (m=%d, k=%d)", samples, system.m, system.k)
    return summary
