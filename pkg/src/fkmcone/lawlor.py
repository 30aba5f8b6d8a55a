"""Lawlor's vanishing angle in the ``g(t)`` formulation.

With ``t = tan(theta)`` and ``g = (r cos theta)^{-k}`` the retraction curve
satisfies

    (g - (t/k) g')^2 + (g'/k)^2 = p(t)^2,

where ``p`` is a lower bound for ``inf_nu det(I - t A_nu)``. Solving for the
descending branch gives

    g' = k (t g - sqrt(p^2 (1 + t^2) - g^2)) / (1 + t^2).

The vanishing angle exists when ``g`` reaches zero, at ``theta = arctan t``,
and fails to exist when the radicand turns negative first.

Near ``t = 0`` the solution is ``g = 1 - a t^2 + ...`` where ``a`` solves
``a^2 - (k/2)(k-2) a + (k^2/4) alpha^2 = 0``. The larger root is the
attracting branch; integration starts on it at ``t = ODE_T_START``.

The ``table-12`` profile reads the curvature bound the way Lawlor's printed
table does: ``alpha`` is rounded up to the next multiple of
``TABLE_ALPHA_STEP`` and the row is solved with the limit form at dimension
12 (the bound ``F`` below it). This is the bound :func:`scaled_bound` feeds
through, so an ``alpha`` between two rows inherits the worse row.
"""

from __future__ import annotations

import logging
from enum import Enum
from functools import cache
from typing import Callable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.integrate import solve_ivp

from .config import Settings, settings
from .utils import InvalidParameterError, SolverFailureError

__all__ = [
    "Profile",
    "VanishingAngleQuery",
    "VanishingAngleResult",
    "ScaledBound",
    "bound_F",
    "limit_form",
    "table_alpha",
    "start_coefficient",
    "vanishing_angle",
    "scaled_bound",
    "existence_threshold",
    "angle_table",
]

logger = logging.getLogger("fkmcone")


class Profile(str, Enum):
    """Lower bound used for ``inf_nu det(I - t A_nu)``."""

    BOUND = "bound-F"
    LIMIT = "limit-form"
    NUMERIC = "numeric"
    TABLE = "table-12"


def bound_F(alpha: float, t: float | np.ndarray, d: int) -> float | np.ndarray:
    """Lower bound of ``det(I - t A)`` over trace-free ``A`` with ``|A| <= alpha``.

    Parameters
    ----------
    alpha : float
        Frobenius bound.
    t : float or np.ndarray
        ``tan(theta) >= 0``.
    d : int
        Matrix size (the link dimension ``k - 1``), ``d >= 2``.

    Returns
    -------
    float or np.ndarray
        ``(1 - t alpha sqrt((d-1)/d)) (1 + t alpha / sqrt(d (d-1)))^(d-1)``.

    """
    if d < 2:
        raise InvalidParameterError(f"bound_F needs d >= 2, got {d}")
    t = np.asarray(t, dtype=float)
    lead = 1.0 - t * alpha * np.sqrt((d - 1) / d)
    tail = 1.0 + t * alpha / np.sqrt(d * (d - 1))
    out = lead * tail ** (d - 1)
    return float(out) if out.ndim == 0 else out


def limit_form(alpha: float, t: float | np.ndarray) -> float | np.ndarray:
    """The ``d -> infinity`` limit ``(1 - alpha t) exp(alpha t)`` of :func:`bound_F`."""
    t = np.asarray(t, dtype=float)
    out = (1.0 - alpha * t) * np.exp(alpha * t)
    return float(out) if out.ndim == 0 else out


def table_alpha(alpha: float, step: float) -> float:
    """Round ``alpha`` up to the next multiple of ``step``."""
    if step <= 0:
        raise InvalidParameterError(f"table step must be positive, got {step}")
    return max(0.0, float(step * np.ceil(alpha / step - 1e-9)))


class VanishingAngleQuery(BaseModel):
    """Cone dimension, curvature bound and profile of a vanishing-angle solve.

    For ``profile="numeric"`` the caller supplies ``profile_fn`` (for example
    :func:`fkmcone.frames.numeric_profile`) and ``alpha`` must be the sup of
    ``||A_nu||`` it was built from. ``profile="table-12"`` is limited to the
    dimensions of the printed table, ``dim <= 12``.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dim: int = Field(ge=3)
    alpha: float = Field(ge=0.0)
    profile: Profile = Profile.BOUND
    profile_fn: Callable[[float], float] | None = Field(default=None, exclude=True)

    @field_validator("alpha")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not np.isfinite(v):
            raise ValueError(f"alpha must be finite, got {v}")
        return v

    def model_post_init(self, __context) -> None:  # noqa: D102
        super().model_post_init(__context)
        if self.profile is Profile.NUMERIC and self.profile_fn is None:
            raise InvalidParameterError("profile 'numeric' needs a profile_fn")
        if self.profile is Profile.TABLE and self.dim > 12:
            raise InvalidParameterError(
                f"profile 'table-12' covers dim <= 12, got {self.dim}"
            )

    def table_row(self, step: float) -> VanishingAngleQuery:
        """The closed-form query a ``table-12`` lookup solves."""
        return VanishingAngleQuery(
            dim=self.dim,
            alpha=table_alpha(self.alpha, step),
            profile=Profile.LIMIT if self.dim == 12 else Profile.BOUND,
        )

    def p(self, t: float) -> float:
        """Evaluate the profile at ``t``."""
        if self.profile is Profile.BOUND:
            return bound_F(self.alpha, t, self.dim - 1)  # type: ignore[return-value]
        if self.profile is Profile.LIMIT:
            return limit_form(self.alpha, t)  # type: ignore[return-value]
        if self.profile is Profile.TABLE:
            raise InvalidParameterError("solve 'table-12' queries through table_row")
        assert self.profile_fn is not None
        return self.profile_fn(t)


class VanishingAngleResult(BaseModel):
    """Outcome of a vanishing-angle solve.

    ``reason`` is ``"hit-zero"`` when the angle exists, otherwise one of
    ``"start-infeasible"``, ``"radical-negative"`` or ``"horizon"``. For
    ``table-12`` results ``row_alpha_sq`` is the squared table row solved.
    """

    dim: int
    alpha_sq: float
    profile: Profile
    exists: bool
    theta_rad: float | None = None
    theta_deg: float | None = None
    tan_theta: float | None = None
    t_terminal: float
    steps: int
    max_residual: float
    reason: str
    row_alpha_sq: float | None = None


def start_coefficient(dim: int, alpha_sq: float) -> float | None:
    """Attracting quadratic coefficient ``a`` of ``g = 1 - a t^2``, or None."""
    disc = (dim - 2) ** 2 - 4.0 * alpha_sq
    if disc < 0:
        return None
    return dim / 4.0 * ((dim - 2) + np.sqrt(disc))


def _solve(query: VanishingAngleQuery, config: Settings) -> VanishingAngleResult:
    k = query.dim
    alpha_sq = query.alpha**2
    a = start_coefficient(k, alpha_sq)
    t0 = config.ODE_T_START
    if a is None:
        logger.debug("no start branch for dim=%d alpha^2=%.6g", k, alpha_sq)
        return VanishingAngleResult(
            dim=k,
            alpha_sq=alpha_sq,
            profile=query.profile,
            exists=False,
            t_terminal=0.0,
            steps=0,
            max_residual=0.0,
            reason="start-infeasible",
        )

    def radicand(t: float, g: float) -> float:
        p = max(query.p(t), 0.0)
        return p * p * (1.0 + t * t) - g * g

    def rhs(t: float, y: np.ndarray) -> list[float]:
        g = y[0]
        root = np.sqrt(max(radicand(t, g), 0.0))
        return [k * (t * g - root) / (1.0 + t * t)]

    def hit_zero(t: float, y: np.ndarray) -> float:
        return y[0]

    def radical(t: float, y: np.ndarray) -> float:
        return radicand(t, y[0]) + config.RADICAL_TOL

    hit_zero.terminal = True  # type: ignore[attr-defined]
    hit_zero.direction = -1  # type: ignore[attr-defined]
    radical.terminal = True  # type: ignore[attr-defined]
    radical.direction = -1  # type: ignore[attr-defined]

    horizon = np.tan(np.pi / 2 - config.HORIZON_GAP)
    sol = solve_ivp(
        rhs,
        (t0, horizon),
        [1.0 - a * t0 * t0],
        method="RK45",
        rtol=config.ODE_RTOL,
        atol=config.ODE_ATOL,
        events=[hit_zero, radical],
    )
    if sol.status == -1:
        raise SolverFailureError(
            f"integration failed at t={sol.t[-1]:.6g} after {sol.t.size - 1} "
            f"steps: {sol.message}"
        )

    # equality residual of the retraction ODE on the accepted steps
    residual = 0.0
    for t, g in zip(sol.t, sol.y[0]):
        if radicand(t, g) < 0:
            continue
        dg = rhs(t, np.array([g]))[0]
        p = max(query.p(t), 0.0)
        residual = max(residual, abs((g - t * dg / k) ** 2 + (dg / k) ** 2 - p * p))

    common = dict(
        dim=k,
        alpha_sq=alpha_sq,
        profile=query.profile,
        steps=sol.t.size - 1,
        max_residual=residual,
    )
    if sol.t_events[0].size:
        t_star = float(sol.t_events[0][0])
        theta = float(np.arctan(t_star))
        return VanishingAngleResult(
            exists=True,
            theta_rad=theta,
            theta_deg=float(np.degrees(theta)),
            tan_theta=t_star,
            t_terminal=t_star,
            reason="hit-zero",
            **common,
        )
    if sol.t_events[1].size:
        return VanishingAngleResult(
            exists=False,
            t_terminal=float(sol.t_events[1][0]),
            reason="radical-negative",
            **common,
        )
    return VanishingAngleResult(
        exists=False, t_terminal=float(sol.t[-1]), reason="horizon", **common
    )


@cache
def _cached(
    dim: int, alpha: float, profile: Profile, config_json: str
) -> VanishingAngleResult:
    config = Settings.model_validate_json(config_json)
    return _solve(VanishingAngleQuery(dim=dim, alpha=alpha, profile=profile), config)


def vanishing_angle(
    query: VanishingAngleQuery, config: Settings | None = None
) -> VanishingAngleResult:
    """Solve the retraction ODE for ``query``.

    Parameters
    ----------
    query : VanishingAngleQuery
        Cone dimension, curvature bound and profile.
    config : Settings, optional
        Solver tolerances; defaults to the global ``settings``.

    Returns
    -------
    VanishingAngleResult
        Existence flag, angle and solver diagnostics.

    Raises
    ------
    SolverFailureError
        If the integrator cannot continue (step size underflow).

    """
    config = config or settings
    if query.profile is Profile.NUMERIC:
        return _solve(query, config)
    if query.profile is Profile.TABLE:
        row = query.table_row(config.TABLE_ALPHA_STEP)
        solved = vanishing_angle(row, config)
        return solved.model_copy(
            update={
                "alpha_sq": query.alpha**2,
                "profile": Profile.TABLE,
                "row_alpha_sq": row.alpha**2,
            }
        )
    result = _cached(query.dim, query.alpha, query.profile, config.model_dump_json())
    logger.debug(
        "vanishing angle dim=%d alpha^2=%.6g: %s", query.dim, query.alpha**2, result
    )
    return result


class ScaledBound(BaseModel):
    """Scaling bound ``tan theta(k, alpha) < (12/k) tan theta(12, 12 alpha/k)``."""

    dim: int
    alpha_sq: float
    inner_alpha_sq: float
    exists: bool
    tan_bound: float | None = None
    theta_rad: float | None = None
    inner: VanishingAngleResult


def scaled_bound(
    dim: int,
    alpha: float,
    profile: Profile = Profile.TABLE,
    config: Settings | None = None,
) -> ScaledBound:
    """Bound the vanishing angle of a ``dim > 12`` cone by a dimension-12 solve.

    The default ``table-12`` profile reads the inner angle off the tabulated
    dimension-12 rows; ``limit-form`` solves at the exact inner ``alpha``.
    """
    if dim <= 12:
        raise InvalidParameterError(f"scaled_bound needs dim > 12, got {dim}")
    inner_alpha = 12.0 * alpha / dim
    query = VanishingAngleQuery(dim=12, alpha=inner_alpha, profile=profile)
    inner = vanishing_angle(query, config)
    if not inner.exists:
        return ScaledBound(
            dim=dim,
            alpha_sq=alpha**2,
            inner_alpha_sq=inner_alpha**2,
            exists=False,
            inner=inner,
        )
    assert inner.tan_theta is not None
    tan_bound = 12.0 / dim * inner.tan_theta
    return ScaledBound(
        dim=dim,
        alpha_sq=alpha**2,
        inner_alpha_sq=inner_alpha**2,
        exists=True,
        tan_bound=tan_bound,
        theta_rad=float(np.arctan(tan_bound)),
        inner=inner,
    )


def existence_threshold(
    dim: int,
    profile: Profile = Profile.LIMIT,
    lo: float = 0.0,
    hi: float | None = None,
    tol: float = 1e-3,
    config: Settings | None = None,
) -> tuple[float, float]:
    """Bracket the largest ``alpha^2`` for which the vanishing angle exists.

    Returns ``(lo, hi)`` with existence at ``lo``, non-existence at ``hi``
    and ``hi - lo <= tol``. ``hi`` defaults to ``(dim - 2)^2 / 4``, beyond
    which no start branch exists.
    """

    def exists(alpha_sq: float) -> bool:
        q = VanishingAngleQuery(dim=dim, alpha=np.sqrt(alpha_sq), profile=profile)
        return vanishing_angle(q, config).exists

    if hi is None:
        hi = (dim - 2) ** 2 / 4.0 + tol
    if not exists(lo):
        raise InvalidParameterError(f"no vanishing angle at the lower end alpha^2={lo}")
    if exists(hi):
        raise InvalidParameterError(
            f"vanishing angle still exists at the upper end alpha^2={hi}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if exists(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def angle_table(
    dims: Sequence[int],
    alphas: Sequence[float],
    profile: Profile = Profile.BOUND,
    config: Settings | None = None,
) -> list[VanishingAngleResult]:
    """Vanishing angles for every ``(dim, alpha)`` pair, dimension-major."""
    return [
        vanishing_angle(VanishingAngleQuery(dim=d, alpha=a, profile=profile), config)
        for d in dims
        for a in alphas
    ]
