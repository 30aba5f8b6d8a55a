"""Skew-symmetric Clifford systems on R^{k delta(m)}.

A Clifford system with parameters ``(m, k)`` is a family of ``m - 1``
integer matrices ``A_1 .. A_{m-1}`` of size ``k * delta(m)`` with

    A_p^T = -A_p,    A_p A_q + A_q A_p = -2 delta_pq I.

Construction
------------
- ``m = 2``: the quarter-turn ``[[0, -1], [1, 0]]``.
- ``m = 3, 4``: left multiplications by the imaginary quaternion units.
- ``m = 5 .. 8``: left multiplications by the imaginary octonion units.
- ``m = 9``: ``C_1 = J (x) I_8`` and ``C_{1+i} = sigma (x) L_{e_i}`` on R^16.
- ``m >= 10``: ``C_i (x) I`` together with ``omega (x) A_j(m - 8)``, where
  ``omega = C_1 ... C_8`` is symmetric, squares to ``I`` and anticommutes
  with every ``C_i``.

Quaternion and octonion multiplication tables are generated by the
Cayley-Dickson doubling ``(a, b)(c, d) = (ac - d*b, da + bc*)``, so every
entry stays in {-1, 0, 1} and each relation can be checked exactly.

JSON schema::

    {"m": 3, "k": 3, "dim": 12, "generators": [[[0, -1, ...], ...], ...]}

"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cache, cached_property, reduce
from pathlib import Path
from typing import Any

import numpy as np
import scipy.sparse
from pydantic import BaseModel

from .utils import InvalidParameterError

__all__ = [
    "CliffordSystem",
    "RelationReport",
    "delta",
    "build_irreducible",
    "build_system",
    "verify_relations",
    "is_orthogonal",
    "symmetric_system",
    "verify_symmetric_relations",
    "load_system",
    "save_system",
]

_DELTA_BASE = (1, 2, 4, 4, 8, 8, 8, 8)


@dataclass(frozen=True, eq=False)
class CliffordSystem:
    """Generators ``A_1 .. A_{m-1}`` of a Clifford system.

    Attributes
    ----------
    m : int
        Number of generators plus one.
    k : int
        Multiplicity (number of irreducible blocks).
    dim : int
        Ambient dimension ``n + 1 = k * delta(m)``.
    generators : tuple[np.ndarray, ...]
        ``m - 1`` read-only ``(dim, dim)`` int8 matrices.

    """

    m: int
    k: int
    dim: int
    generators: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self) -> None:
        if self.m < 2 or self.k < 1:
            raise InvalidParameterError(
                f"need m >= 2 and k >= 1, got m={self.m}, k={self.k}"
            )
        if len(self.generators) != self.m - 1:
            raise InvalidParameterError(
                f"expected {self.m - 1} generators for m={self.m}, "
                f"got {len(self.generators)}"
            )
        frozen = []
        for i, g in enumerate(self.generators, start=1):
            arr = np.array(g, dtype=np.int8)
            if arr.shape != (self.dim, self.dim):
                raise InvalidParameterError(
                    f"generator {i} has shape {arr.shape}, "
                    f"expected {(self.dim, self.dim)}"
                )
            if not np.isin(arr, (-1, 0, 1)).all():
                raise InvalidParameterError(
                    f"generator {i} has entries outside {{-1, 0, 1}}"
                )
            arr.flags.writeable = False
            frozen.append(arr)
        object.__setattr__(self, "generators", tuple(frozen))

    @property
    def n(self) -> int:
        """Sphere dimension: ``S^n`` lives in ``R^dim``."""
        return self.dim - 1

    @cached_property
    def stack(self) -> np.ndarray:
        """Float stack ``(m, dim, dim)`` of ``I, A_1, ..., A_{m-1}``."""
        out = np.empty((self.m, self.dim, self.dim))
        out[0] = np.eye(self.dim)
        for q, g in enumerate(self.generators, start=1):
            out[q] = g
        out.flags.writeable = False
        return out

    @cached_property
    def stack_t(self) -> np.ndarray:
        """Transposes of :attr:`stack`."""
        out = np.ascontiguousarray(self.stack.transpose(0, 2, 1))
        out.flags.writeable = False
        return out

    def to_dict(self) -> dict[str, Any]:
        """Return the system as a dict suitable for JSON serialisation."""
        return {
            "m": self.m,
            "k": self.k,
            "dim": self.dim,
            "generators": [g.astype(int).tolist() for g in self.generators],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> CliffordSystem:
        """Rebuild a system written by :meth:`to_dict`."""
        try:
            m, k, dim = int(d["m"]), int(d["k"]), int(d["dim"])
            gens = tuple(np.asarray(g, dtype=np.int64) for g in d["generators"])
        except (KeyError, TypeError) as e:
            raise InvalidParameterError(f"malformed Clifford system record: {e}") from e
        if any(np.abs(g).max(initial=0) > 1 for g in gens):
            raise InvalidParameterError("generator entries must lie in {-1, 0, 1}")
        return cls(m=m, k=k, dim=dim, generators=gens)


class RelationReport(BaseModel):
    """Outcome of an exact relation check.

    ``p`` and ``q`` are 1-based generator indices of the first failure;
    ``relation`` is ``"skew"`` or ``"anticommute"``.
    """

    passed: bool
    p: int | None = None
    q: int | None = None
    relation: str | None = None


def delta(m: int) -> int:
    """Dimension of an irreducible module of the Clifford algebra ``Cl_{m-1}``.

    Parameters
    ----------
    m : int
        Generator count plus one, ``m >= 1``.

    Returns
    -------
    int
        ``delta(m)`` from ``1, 2, 4, 4, 8, 8, 8, 8`` and ``delta(m + 8) = 16 delta(m)``.

    """
    if m < 1:
        raise InvalidParameterError(f"delta(m) needs m >= 1, got {m}")
    q, r = divmod(m - 1, 8)
    return 16**q * _DELTA_BASE[r]


def _conj(v: np.ndarray) -> np.ndarray:
    out = -v
    out[0] = v[0]
    return out


def _cd_mult(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cayley-Dickson product of two coordinate vectors of length 2^j."""
    if a.size == 1:
        return a * b
    h = a.size // 2
    a1, a2 = a[:h], a[h:]
    b1, b2 = b[:h], b[h:]
    return np.concatenate(
        [
            _cd_mult(a1, b1) - _cd_mult(_conj(b2), a2),
            _cd_mult(b2, a1) + _cd_mult(a2, _conj(b1)),
        ]
    )


@cache
def _left_multiplications(size: int) -> tuple[np.ndarray, ...]:
    """Left multiplications by the imaginary units of the size-``size`` algebra."""
    basis = np.eye(size, dtype=np.int64)
    return tuple(
        np.column_stack([_cd_mult(basis[a], basis[j]) for j in range(size)])
        for a in range(1, size)
    )


@cache
def _irreducible(m: int) -> tuple[np.ndarray, ...]:
    if m <= 8:
        return _left_multiplications(delta(m))[: m - 1]
    if m == 9:
        quarter_turn = _left_multiplications(2)[0]
        sigma = np.diag([1, -1])
        octonion = _left_multiplications(8)
        return (np.kron(quarter_turn, np.eye(8, dtype=np.int64)),) + tuple(
            np.kron(sigma, L) for L in octonion
        )
    base = _irreducible(9)
    omega = reduce(np.matmul, base)
    inner = _irreducible(m - 8)
    eye = np.eye(inner[0].shape[0], dtype=np.int64)
    lifted = tuple(np.kron(c, eye) for c in base)
    return lifted + tuple(np.kron(omega, a) for a in inner)


def build_irreducible(m: int) -> CliffordSystem:
    """Build the irreducible system (``k = 1``) on ``R^{delta(m)}``."""
    if m < 2:
        raise InvalidParameterError(f"need m >= 2, got {m}")
    return CliffordSystem(m=m, k=1, dim=delta(m), generators=_irreducible(m))


def build_system(m: int, k: int) -> CliffordSystem:
    """Build the block-diagonal sum of ``k`` irreducible systems.

    Parameters
    ----------
    m : int
        Generator count plus one, ``m >= 2``.
    k : int
        Multiplicity, ``k >= 1``.

    Returns
    -------
    CliffordSystem
        System on ``R^{k delta(m)}``.

    Raises
    ------
    InvalidParameterError
        If ``k delta(m) < m + 2``, i.e. ``n - m < 1``.

    """
    if m < 2 or k < 1:
        raise InvalidParameterError(f"need m >= 2 and k >= 1, got m={m}, k={k}")
    dim = k * delta(m)
    n = dim - 1
    if n - m < 1:
        raise InvalidParameterError(
            f"multiplicity constraint k*delta(m) >= m + 2 fails for (m={m}, k={k}): "
            f"n = {n}, n - m = {n - m}"
        )
    eye = np.eye(k, dtype=np.int64)
    gens = tuple(np.kron(eye, g) for g in _irreducible(m))
    return CliffordSystem(m=m, k=k, dim=dim, generators=gens)


def verify_relations(system: CliffordSystem) -> RelationReport:
    """Check skew-symmetry and anticommutation in exact integer arithmetic."""
    sparse = [scipy.sparse.csr_array(g.astype(np.int64)) for g in system.generators]
    eye = np.eye(system.dim, dtype=np.int64)
    for p, gp in enumerate(sparse, start=1):
        if (gp + gp.T).count_nonzero():
            return RelationReport(passed=False, p=p, q=p, relation="skew")
        for q in range(p, len(sparse) + 1):
            gq = sparse[q - 1]
            anti = (gp @ gq + gq @ gp).toarray()
            if not np.array_equal(anti, -2 * eye if p == q else 0 * eye):
                return RelationReport(passed=False, p=p, q=q, relation="anticommute")
    return RelationReport(passed=True)


def is_orthogonal(system: CliffordSystem) -> bool:
    """Return ``True`` if every generator satisfies ``G^T G = I`` exactly."""
    eye = np.eye(system.dim, dtype=np.int64)
    for g in system.generators:
        gs = scipy.sparse.csr_array(g.astype(np.int64))
        if not np.array_equal((gs.T @ gs).toarray(), eye):
            return False
    return True


def symmetric_system(system: CliffordSystem) -> tuple[np.ndarray, ...]:
    """Symmetric Clifford system ``P_0 .. P_m`` on ``R^{2 dim}``.

    ``P_0 = diag(I, -I)``, ``P_1 = [[0, I], [I, 0]]`` and
    ``P_{1+q} = [[0, A_q], [-A_q, 0]]``; these define the ambient FKM
    polynomial whose restriction to ``S^n x S^n`` is the splitting form.
    """
    d = system.dim
    eye = np.eye(d, dtype=np.int64)
    zero = np.zeros((d, d), dtype=np.int64)
    out = [np.block([[eye, zero], [zero, -eye]]), np.block([[zero, eye], [eye, zero]])]
    for a in system.generators:
        a64 = a.astype(np.int64)
        out.append(np.block([[zero, a64], [-a64, zero]]))
    return tuple(out)


def verify_symmetric_relations(system: CliffordSystem) -> RelationReport:
    """Check ``P_i = P_i^T`` and ``P_i P_j + P_j P_i = 2 delta_ij I`` exactly.

    Indices in the report are 0-based, matching ``P_0 .. P_m``.
    """
    mats = [scipy.sparse.csr_array(p) for p in symmetric_system(system)]
    eye = np.eye(2 * system.dim, dtype=np.int64)
    for i, pi in enumerate(mats):
        if (pi - pi.T).count_nonzero():
            return RelationReport(passed=False, p=i, q=i, relation="symmetric")
        for j in range(i, len(mats)):
            pj = mats[j]
            anti = (pi @ pj + pj @ pi).toarray()
            if not np.array_equal(anti, 2 * eye if i == j else 0 * eye):
                return RelationReport(passed=False, p=i, q=j, relation="anticommute")
    return RelationReport(passed=True)


def load_system(path: str | Path) -> CliffordSystem:
    """Load a system from a JSON file written by :func:`save_system`."""
    p = Path(path)
    try:
        raw = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidParameterError(f"cannot read Clifford system from {p}: {e}") from e
    return CliffordSystem.from_dict(raw)


def save_system(system: CliffordSystem, path: str | Path) -> None:
    """Write ``system`` to ``path`` as JSON, overwriting any prior content."""
    Path(path).write_text(json.dumps(system.to_dict()) + "\n")
