"""Area-minimization certificates for FKM cones and minimal product cones.

A cone is certified when a vanishing angle ``theta`` exists and
``2 theta < N``, with ``N`` the normal radius of its link. Certificates are
sufficient only: a failed comparison is reported as ``inconclusive``.
"""

from __future__ import annotations

import logging
from enum import Enum
from typing import Any, Sequence

import numpy as np
from pydantic import BaseModel
from tqdm.contrib.concurrent import thread_map

from .clifford import delta
from .config import Settings, settings
from .lawlor import Profile, VanishingAngleQuery, scaled_bound, vanishing_angle
from .radius import normal_radius, product_normal_radius
from .utils import InvalidParameterError

__all__ = [
    "Verdict",
    "ThetaSource",
    "Certificate",
    "FKM_COLUMNS",
    "PRODUCT_COLUMNS",
    "certify_fkm",
    "certify_product",
    "sweep",
    "sweep_products",
    "product_lists",
    "PRODUCT_THRESHOLD",
    "irreducible_inequality",
    "reducible_inequality",
    "product_chain",
]

logger = logging.getLogger("fkmcone")

FKM_COLUMNS = [
    "m",
    "k",
    "n",
    "alpha_sq",
    "theta_rad",
    "theta_src",
    "N_rad",
    "margin",
    "verdict",
]
PRODUCT_COLUMNS = [
    "factors",
    "dim",
    "alpha_sq",
    "theta_rad",
    "theta_src",
    "N_rad",
    "margin",
    "verdict",
]

# inner alpha^2 below which the tabulated dimension-12 angle exists
PRODUCT_THRESHOLD = 19.0


class Verdict(str, Enum):
    """Outcome of the ``2 theta < N`` comparison."""

    CERTIFIED = "certified"
    INCONCLUSIVE = "inconclusive"
    INVALID = "invalid"


class ThetaSource(str, Enum):
    """Where a vanishing-angle bound came from."""

    TABLE_12 = "table-12"
    SCALED = "scaled"
    DIRECT = "direct-ODE"


class Certificate(BaseModel):
    """Everything needed to re-check a verdict from the record alone."""

    m: int | None = None
    k: int | None = None
    n: int | None = None
    factors: list[int] | None = None
    dim_cone: int | None = None
    alpha_sq: float | None = None
    theta_rad: float | None = None
    theta_deg: float | None = None
    theta_src: ThetaSource | None = None
    normal_radius: float | None = None
    N_deg: float | None = None
    N_branch: str | None = None
    margin: float | None = None
    verdict: Verdict
    reason: str | None = None
    simplified_theta_rad: float | None = None
    simplified_theta_src: ThetaSource | None = None
    corroboration: dict[str, float | None] = {}
    diagnostics: dict[str, Any] = {}
    tolerances: dict[str, float] = {}

    @property
    def certified(self) -> bool:
        return self.verdict is Verdict.CERTIFIED

    def csv_row(self) -> dict[str, Any]:
        """Flatten to the CSV columns of an FKM or a product table."""
        common = {
            "alpha_sq": self.alpha_sq,
            "theta_rad": self.theta_rad,
            "theta_src": self.theta_src.value if self.theta_src else None,
            "N_rad": self.normal_radius,
            "margin": self.margin,
            "verdict": self.verdict.value,
        }
        if self.factors is not None:
            factors = ";".join(map(str, self.factors))
            return {"factors": factors, "dim": self.dim_cone, **common}
        return {"m": self.m, "k": self.k, "n": self.n, **common}


def irreducible_inequality(n: int | np.ndarray) -> float | np.ndarray:
    """``n^2 - 1.44 - 2.4 n sqrt((n - 10)/9)``, ``nan`` for ``n < 10``."""
    n = np.asarray(n, dtype=float)
    root = np.sqrt(np.clip(n - 10.0, 0.0, None) / 9.0)
    out = np.where(n >= 10, n**2 - 1.44 - 2.4 * n * root, np.nan)
    return out if out.ndim else float(out)


def reducible_inequality(n: int | np.ndarray) -> float | np.ndarray:
    """``n^2 - 1.44 - 2.4 n sqrt(n - 2)``, ``nan`` for ``n < 2``."""
    n = np.asarray(n, dtype=float)
    root = np.sqrt(np.clip(n - 2.0, 0.0, None))
    out = np.where(n >= 2, n**2 - 1.44 - 2.4 * n * root, np.nan)
    return out if out.ndim else float(out)


def product_chain(k: int) -> tuple[float, float]:
    """Simplified product bounds ``(2 arctan(5/(2k)), arccos(1 - 1/(k-1)))``.

    The first entry bounds twice the vanishing angle, the second is a lower
    bound for the normal radius; the cone is certified when first < second.
    """
    if k < 3:
        raise InvalidParameterError(f"product_chain needs k >= 3, got {k}")
    theta = 2.0 * np.arctan(5.0 / (2.0 * k))
    return float(theta), float(np.arccos(1.0 - 1.0 / (k - 1)))


def _theta_bound(
    dim: int, alpha_sq: float, config: Settings
) -> tuple[float | None, ThetaSource, dict[str, Any]]:
    """Scaled table bound above dimension 12, a direct ODE solve otherwise."""
    alpha = float(np.sqrt(alpha_sq))
    if dim > 12:
        bound = scaled_bound(dim, alpha, Profile.TABLE, config)
        diagnostics = {
            "inner_alpha_sq": bound.inner_alpha_sq,
            "inner_row_alpha_sq": bound.inner.row_alpha_sq,
            "inner_exists": bound.inner.exists,
            "inner_theta_deg": bound.inner.theta_deg,
            "inner_reason": bound.inner.reason,
            "steps": bound.inner.steps,
        }
        return bound.theta_rad, ThetaSource.SCALED, diagnostics
    query = VanishingAngleQuery(dim=dim, alpha=alpha, profile=Profile.BOUND)
    result = vanishing_angle(query, config)
    diagnostics = {
        "reason": result.reason,
        "steps": result.steps,
        "max_residual": result.max_residual,
    }
    return result.theta_rad, ThetaSource.DIRECT, diagnostics


def _verdict(
    theta: float | None, radius: float
) -> tuple[Verdict, float | None, str | None]:
    if theta is None:
        return Verdict.INCONCLUSIVE, None, "no vanishing angle"
    margin = radius - 2.0 * theta
    if margin > 0:
        return Verdict.CERTIFIED, margin, None
    return Verdict.INCONCLUSIVE, margin, "2 theta >= N"


def certify_fkm(m: int, k: int, config: Settings | None = None) -> Certificate:
    """Certify the cone over the minimal FKM hypersurface of ``S^n x S^n``.

    Parameters
    ----------
    m : int
        Generator count plus one, ``m >= 2``.
    k : int
        Multiplicity, ``k >= 1``; ``n = k delta(m) - 1``.
    config : Settings, optional
        Tolerances; defaults to the module-level settings.

    Returns
    -------
    Certificate
        ``invalid`` when ``n - m < 1``; otherwise ``certified`` iff the
        vanishing angle of the ``2n``-dimensional cone with
        ``alpha^2 = 6 (n - 1)`` exists and twice it is below ``N(m, n)``.

    """
    config = config or settings
    if m < 2 or k < 1:
        raise InvalidParameterError(f"need m >= 2 and k >= 1, got m={m}, k={k}")
    n = k * delta(m) - 1
    base: dict[str, Any] = {
        "m": m,
        "k": k,
        "n": n,
        "tolerances": config.tolerances(),
    }
    if n - m < 1:
        reason = f"n - m = {n - m} < 1 (n = {n})"
        return Certificate(**base, verdict=Verdict.INVALID, reason=reason)

    dim = 2 * n
    alpha_sq = 6.0 * (n - 1)
    theta, source, diagnostics = _theta_bound(dim, alpha_sq, config)
    radius = normal_radius(m, n)
    verdict, margin, reason = _verdict(theta, radius.N_rad)
    cert = Certificate(
        **base,
        dim_cone=dim,
        alpha_sq=alpha_sq,
        theta_rad=theta,
        theta_deg=None if theta is None else float(np.degrees(theta)),
        theta_src=source,
        normal_radius=radius.N_rad,
        N_deg=radius.N_deg,
        N_branch=radius.branch,
        margin=margin,
        verdict=verdict,
        reason=reason,
        simplified_theta_rad=float(np.arctan(1.2 / n)) if n >= 11 else None,
        simplified_theta_src=ThetaSource.TABLE_12 if n >= 11 else None,
        corroboration={
            "irreducible": irreducible_inequality(n) if n >= 10 else None,
            "reducible": reducible_inequality(n),
        },
        diagnostics=diagnostics,
    )
    logger.debug("certified (m=%d, k=%d): %s", m, k, cert.verdict.value)
    return cert


def certify_product(
    factors: Sequence[int], config: Settings | None = None
) -> Certificate:
    """Certify the minimal product cone over FKM links in ``S^{n_i} x S^{n_i}``.

    Each factor link has dimension ``k_i = 2 n_i - 1`` and the cone has
    dimension ``k = sum k_i + 1``. The curvature bound is
    ``3 (k - 1)(1 - 1/max k_i)`` and each factor radius is bounded below by
    ``arctan sqrt(1/(n_i - 2))``. An FKM factor has ``n_i + 1 = k delta(m)``
    with ``delta(m)`` even, so even ``n_i`` are rejected as invalid.
    """
    config = config or settings
    factors = [int(f) for f in factors]
    base: dict[str, Any] = {"factors": factors, "tolerances": config.tolerances()}
    if len(factors) < 2:
        reason = "need at least 2 factors"
        return Certificate(**base, verdict=Verdict.INVALID, reason=reason)
    if min(factors) < 3:
        reason = "every n_i must be >= 3"
        return Certificate(**base, verdict=Verdict.INVALID, reason=reason)
    if any(f % 2 == 0 for f in factors):
        reason = "every n_i must be odd (n_i + 1 = k delta(m))"
        return Certificate(**base, verdict=Verdict.INVALID, reason=reason)

    dims = [2 * f - 1 for f in factors]
    dim = sum(dims) + 1
    alpha_sq = 3.0 * (dim - 1) * (1.0 - 1.0 / max(dims))
    theta, source, diagnostics = _theta_bound(dim, alpha_sq, config)
    radii = [normal_radius(2, f).N_rad for f in factors]
    radius = product_normal_radius(dims, radii)
    verdict, margin, reason = _verdict(theta, radius)
    chain = product_chain(dim)
    threshold = 144.0 * alpha_sq / dim**2
    return Certificate(
        **base,
        dim_cone=dim,
        alpha_sq=alpha_sq,
        theta_rad=theta,
        theta_deg=None if theta is None else float(np.degrees(theta)),
        theta_src=source,
        normal_radius=radius,
        N_deg=float(np.degrees(radius)),
        margin=margin,
        verdict=verdict,
        reason=reason,
        simplified_theta_rad=float(np.arctan(5.0 / (2.0 * dim))),
        corroboration={
            "chain_theta": chain[0],
            "chain_radius": chain[1],
            "threshold_alpha_sq": threshold,
            "threshold_margin": PRODUCT_THRESHOLD - threshold,
        },
        diagnostics={**diagnostics, "factor_radii": radii},
    )


def _map(func, items: list, workers: int, desc: str) -> list:
    if workers > 1:
        return thread_map(func, items, max_workers=workers, desc=desc, disable=True)
    return [func(item) for item in items]


def sweep(
    m_values: Sequence[int],
    k_values: Sequence[int],
    workers: int = 1,
    config: Settings | None = None,
) -> list[Certificate]:
    """Certificates for every ``(m, k)`` pair, ordered lexicographically."""
    pairs = sorted({(m, k) for m in m_values for k in k_values})
    return _map(lambda mk: certify_fkm(*mk, config=config), pairs, workers, "FKM sweep")


def sweep_products(
    dims: Sequence[int],
    workers: int = 1,
    config: Settings | None = None,
) -> list[Certificate]:
    """Product certificates for every cone dimension in ``dims``.

    Each dimension contributes the lists of :func:`product_lists`, ordered by
    dimension then by factors. A dimension with no odd factor list (22 is the
    only one above 20) gets a single ``invalid`` row.
    """
    config = config or settings
    jobs: list[tuple[int, list[int] | None]] = []
    for d in sorted(set(dims)):
        lists = product_lists(d)
        jobs.extend((d, fs) for fs in lists)
        if not lists:
            jobs.append((d, None))

    def one(job: tuple[int, list[int] | None]) -> Certificate:
        d, fs = job
        if fs is None:
            return Certificate(
                factors=[],
                dim_cone=d,
                verdict=Verdict.INVALID,
                reason=f"no product of odd n_i >= 3 has cone dimension {d}",
                tolerances=config.tolerances(),
            )
        return certify_product(fs, config=config)

    return _map(one, jobs, workers, "product sweep")


def product_lists(dim: int) -> list[list[int]]:
    """Factor lists ``n_i`` (odd, ``>= 3``, at least two) of cone dimension ``dim``.

    Returns every homogeneous list ``[n0] * j`` together with the list that
    has the largest factor next to copies of ``3``, which carries the largest
    curvature bound ``3 (k - 1)(1 - 1/max k_i)`` for this dimension.
    """
    total = dim - 1
    found: set[tuple[int, ...]] = set()
    for j in range(2, total // 5 + 1):
        # k_i = 2 n_i - 1 with n_i odd, i.e. k_i = 1 mod 4
        if total % j == 0 and (total // j) % 4 == 1:
            found.add(((total // j + 1) // 2,) * j)
    for j in range(2, total // 5 + 1):
        last = total - 5 * (j - 1)
        if last % 4 == 1:
            found.add((3,) * (j - 1) + ((last + 1) // 2,))
            break
    return [list(fs) for fs in sorted(found)]
