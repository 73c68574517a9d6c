"""Discrete frequency-side model of locally square-integrable spectra.

Fields live on a uniform grid over the square ``[-J, J]^n`` of frequency
space (n = 1 or 2).  The nested Euclidean balls ``B[0, j]``, ``1 <= j <= J``,
carry the seminorm family: ``seminorm(u, j)`` is the weighted l2 norm of the
samples inside ball j, a midpoint quadrature of the integral of ``|u|^2``
over the ball.  The family is nondecreasing in j and induces the standard
series metric ``sum 2^-j q_j / (1 + q_j)`` (truncated at j = J; the omitted
tail is below ``2^-J``).

Ball membership is decided in exact integer arithmetic on the node indices,
so boundary nodes with ``|xi| = j`` are always included and restriction maps
copy samples bitwise.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass

import numpy as np

# Refuse grids whose node count would make dense complex storage unreasonable.
NODE_BUDGET = 1 << 22

# Magnitudes above exp(709) are saturated and flagged instead of overflowing.
OVERFLOW_EXPONENT = 709.0
OVERFLOW_LIMIT = float(np.exp(OVERFLOW_EXPONENT))


class GridError(ValueError):
    """Invalid grid parameters or incompatible grids."""


# Test hook: multiplies the quadrature weight used by `seminorm`.  Verify
# runs use it to prove the harness detects an injected fault.
_QUADRATURE_FAULT = 1.0


@contextlib.contextmanager
def quadrature_fault(factor: float):
    global _QUADRATURE_FAULT
    old = _QUADRATURE_FAULT
    _QUADRATURE_FAULT = float(factor)
    try:
        yield
    finally:
        _QUADRATURE_FAULT = old


class FrequencyGrid:
    """Uniform sampling of ``[-J, J]^n`` with spacing ``h = 1/inv_h``.

    Nodes are ``h * k`` for integer vectors k with ``|h k|_inf <= J``; in
    particular every node with Euclidean norm <= J is present.  Two grids
    are compatible for arithmetic iff (n, J, inv_h) coincide.
    """

    def __init__(self, n: int, J: int, inv_h: int):
        if n not in (1, 2):
            raise GridError(f"dimension must be 1 or 2, got {n}")
        if not (isinstance(J, (int, np.integer)) and J >= 1):
            raise GridError(f"ball radius J must be a positive integer, got {J!r}")
        if not (isinstance(inv_h, (int, np.integer)) and inv_h >= 1):
            raise GridError(f"1/h must be a positive integer, got {inv_h!r}")
        side = 2 * J * inv_h + 1
        if side**n > NODE_BUDGET:
            raise GridError(
                f"grid would hold {side**n} nodes, above the budget {NODE_BUDGET}"
            )
        self.n = int(n)
        self.J = int(J)
        self.inv_h = int(inv_h)
        self.axis_index = np.arange(-J * inv_h, J * inv_h + 1, dtype=np.int64)
        self.axis = self.axis_index / float(inv_h)
        if n == 1:
            self._radius2_index = self.axis_index**2
        else:
            self._radius2_index = (
                self.axis_index[:, None] ** 2 + self.axis_index[None, :] ** 2
            )
        self._ball_masks: dict[int, np.ndarray] = {}

    @property
    def h(self) -> float:
        return 1.0 / self.inv_h

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.axis_index.size,) * self.n

    @property
    def node_count(self) -> int:
        return self.axis_index.size**self.n

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FrequencyGrid)
            and (self.n, self.J, self.inv_h) == (other.n, other.J, other.inv_h)
        )

    def __hash__(self):
        return hash((self.n, self.J, self.inv_h))

    def __repr__(self):
        return f"FrequencyGrid(n={self.n}, J={self.J}, inv_h={self.inv_h})"

    def check_ball_index(self, j: int) -> int:
        if not (isinstance(j, (int, np.integer)) and 1 <= j <= self.J):
            raise GridError(f"ball index must satisfy 1 <= j <= {self.J}, got {j!r}")
        return int(j)

    def ball_mask(self, j: int) -> np.ndarray:
        """Boolean mask of nodes with Euclidean norm <= j (ties included)."""
        j = self.check_ball_index(j)
        mask = self._ball_masks.get(j)
        if mask is None:
            mask = self._radius2_index <= (j * self.inv_h) ** 2
            mask.setflags(write=False)
            self._ball_masks[j] = mask
        return mask

    def node_points(self) -> np.ndarray:
        """Node coordinates in row-major order, shape (node_count, n)."""
        if self.n == 1:
            return self.axis[:, None]
        g1, g2 = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.stack([g1.ravel(), g2.ravel()], axis=1)

    def index_arrays(self) -> tuple[np.ndarray, ...]:
        """Integer node index along each axis, broadcast to grid shape."""
        if self.n == 1:
            return (self.axis_index,)
        return (
            np.broadcast_to(self.axis_index[:, None], self.shape),
            np.broadcast_to(self.axis_index[None, :], self.shape),
        )

    def nearest_node(self, point) -> tuple[int, ...]:
        point = np.atleast_1d(np.asarray(point, dtype=float))
        if point.size != self.n:
            raise GridError(f"point has dimension {point.size}, grid has {self.n}")
        lim = self.J * self.inv_h
        idx = np.clip(np.rint(point * self.inv_h).astype(np.int64), -lim, lim)
        return tuple(int(k) + lim for k in idx)


def make_grid(n: int, J: int, h: float) -> FrequencyGrid:
    """Build the grid covering ``[-J, J]^n`` with spacing h (1/h integer)."""
    inv = 1.0 / float(h) if h > 0 else 0.0
    if not (h > 0 and abs(inv - round(inv)) <= 1e-9 * max(1.0, inv)):
        raise GridError(f"spacing h must satisfy 1/h integer, got h={h!r}")
    return FrequencyGrid(n, J, int(round(inv)))


class SpectralField:
    """Complex samples of a spectrum on a :class:`FrequencyGrid`.

    Values are immutable after construction.  ``overflow`` marks fields
    produced by a saturated evolution; only then may samples sit at the
    saturation magnitude.
    """

    __slots__ = ("grid", "values", "overflow")

    def __init__(self, grid: FrequencyGrid, values, overflow: bool = False):
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != grid.shape:
            raise GridError(
                f"values shape {values.shape} does not match grid shape {grid.shape}"
            )
        if not overflow and not np.all(np.isfinite(values)):
            raise ValueError("non-finite samples in an unflagged field")
        values = values.copy()
        values.setflags(write=False)
        self.grid = grid
        self.values = values
        self.overflow = bool(overflow)

    def _check_compatible(self, other: "SpectralField"):
        if self.grid != other.grid:
            raise GridError(f"incompatible grids: {self.grid} vs {other.grid}")

    def __add__(self, other):
        self._check_compatible(other)
        return SpectralField(
            self.grid, self.values + other.values, self.overflow or other.overflow
        )

    def __sub__(self, other):
        self._check_compatible(other)
        return SpectralField(
            self.grid, self.values - other.values, self.overflow or other.overflow
        )

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.values * complex(scalar), self.overflow)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.values, self.overflow)

    def __repr__(self):
        return f"SpectralField({self.grid!r}, overflow={self.overflow})"


def ones(grid: FrequencyGrid) -> SpectralField:
    return SpectralField(grid, np.ones(grid.shape, dtype=np.complex128))


def zero(grid: FrequencyGrid) -> SpectralField:
    return SpectralField(grid, np.zeros(grid.shape, dtype=np.complex128))


def gaussian_hat(grid: FrequencyGrid) -> SpectralField:
    if grid.n == 1:
        r2 = grid.axis**2
    else:
        r2 = grid.axis[:, None] ** 2 + grid.axis[None, :] ** 2
    return SpectralField(grid, np.exp(-r2).astype(np.complex128))


def delta(grid: FrequencyGrid, at=0.0) -> SpectralField:
    """Unit sample at the node nearest to ``at``, zero elsewhere."""
    values = np.zeros(grid.shape, dtype=np.complex128)
    values[grid.nearest_node(at)] = 1.0
    return SpectralField(grid, values)


def random_field(grid: FrequencyGrid, rng: np.random.Generator) -> SpectralField:
    re = rng.standard_normal(grid.shape)
    im = rng.standard_normal(grid.shape)
    return SpectralField(grid, re + 1j * im)


def seminorm(u: SpectralField, j: int) -> float:
    """Weighted l2 norm of the samples inside ball j.

    Midpoint quadrature: ``sqrt(h^n * sum_{|xi| <= j} |u(xi)|^2)``, boundary
    nodes included.  For the constant-one field in 1-D the square equals
    ``2 j + h``, so the quadrature gap to the exact integral is exactly h.
    """
    mask = u.grid.ball_mask(j)
    weight = u.grid.cell_volume * _QUADRATURE_FAULT
    magnitudes = np.abs(u.values[mask])
    peak = float(np.max(magnitudes)) if magnitudes.size else 0.0
    if peak == 0.0:
        return 0.0
    if not np.isfinite(peak):
        return math.inf
    # rescale by the peak so squares of near-saturation samples cannot
    # overflow; the seminorm of a saturated field may itself be inf
    total = np.sum((magnitudes / peak) ** 2)
    with np.errstate(over="ignore"):
        return float(peak * np.sqrt(weight * total))


def seminorm_profile(u: SpectralField) -> np.ndarray:
    """All ball seminorms ``(p_1, ..., p_J)``; nondecreasing in j."""
    return np.array([seminorm(u, j) for j in range(1, u.grid.J + 1)])


def metric(u: SpectralField, v: SpectralField) -> float:
    """Series metric ``sum_{j<=J} 2^-j q_j/(1+q_j)`` of the difference.

    The series is truncated at the grid radius J; the omitted tail is
    bounded by ``2^-J``.  Values lie in ``[0, 1 - 2^-J]``.
    """
    u._check_compatible(v)
    q = seminorm_profile(u - v)
    ratio = np.where(np.isinf(q), 1.0, q / (1.0 + q))
    weights = 0.5 ** np.arange(1, u.grid.J + 1)
    return float(np.sum(weights * ratio))


@dataclass(frozen=True)
class QuotientElement:
    """Restriction of a field to ball j, with its quotient norm.

    ``coords`` holds the integer node indices (units of h) in row-major
    order and ``values`` the corresponding samples; ``norm`` equals the
    ball-j quadrature of those samples.
    """

    n: int
    inv_h: int
    j: int
    coords: np.ndarray
    values: np.ndarray
    norm: float

    def __post_init__(self):
        self.coords.setflags(write=False)
        self.values.setflags(write=False)

    def points(self) -> np.ndarray:
        return self.coords / float(self.inv_h)


def project(u: SpectralField, j: int) -> QuotientElement:
    """Canonical projection onto the ball-j quotient (samples restricted)."""
    j = u.grid.check_ball_index(j)
    mask = u.grid.ball_mask(j)
    idx = u.grid.index_arrays()
    coords = np.stack([axis[mask] for axis in idx], axis=1)
    return QuotientElement(
        n=u.grid.n,
        inv_h=u.grid.inv_h,
        j=j,
        coords=coords,
        values=u.values[mask].copy(),
        norm=seminorm(u, j),
    )


def restrict(q: QuotientElement, j: int) -> QuotientElement:
    """Restriction map from the ball-``q.j`` quotient to ball j <= q.j.

    Samples are copied bitwise, so restriction composes exactly with
    projection: ``restrict(project(u, j+1), j) == project(u, j)``.
    """
    if not 1 <= j <= q.j:
        raise GridError(f"restriction needs 1 <= j <= {q.j}, got {j}")
    inside = np.sum(q.coords**2, axis=1) <= (j * q.inv_h) ** 2
    values = q.values[inside].copy()
    weight = (1.0 / q.inv_h) ** q.n * _QUADRATURE_FAULT
    norm = float(np.sqrt(weight * np.sum(np.abs(values) ** 2)))
    return QuotientElement(
        n=q.n, inv_h=q.inv_h, j=int(j), coords=q.coords[inside].copy(),
        values=values, norm=norm,
    )


def embed(q: QuotientElement, grid: FrequencyGrid) -> SpectralField:
    """Extend a quotient element by zero to a full-grid field."""
    if q.n != grid.n or q.inv_h != grid.inv_h or q.j > grid.J:
        raise GridError("quotient element does not fit the grid")
    values = np.zeros(grid.shape, dtype=np.complex128)
    lim = grid.J * grid.inv_h
    pos = tuple((q.coords[:, k] + lim) for k in range(grid.n))
    values[pos] = q.values
    return SpectralField(grid, values)


def mask_outside(u: SpectralField, j: int) -> SpectralField:
    """Zero the samples inside ball j; the result has ``seminorm(., j) == 0``."""
    mask = u.grid.ball_mask(j)
    return SpectralField(u.grid, np.where(mask, 0.0, u.values), u.overflow)


def saturated_product(log_magnitude, phase, u: SpectralField):
    """Multiply ``exp(log_magnitude) * phase`` onto a field, saturating.

    Wherever the factor and product magnitudes are both representable the
    plain product is used (so a factor of exactly one is the identity,
    bitwise).  Elsewhere the value is assembled in log-magnitude/phase form
    and its magnitude clamped at ``exp(709)``; such nodes flag the result.
    Because the clamped value depends only on the product's log magnitude
    and phase, any two evolution paths that agree on those agree exactly on
    saturated nodes.
    """
    u_magnitude = np.abs(u.values)
    with np.errstate(divide="ignore"):
        log_u = np.where(u_magnitude > 0.0, np.log(u_magnitude), -np.inf)
    total_log = log_magnitude + log_u
    direct_ok = (log_magnitude <= OVERFLOW_EXPONENT) & (total_log <= OVERFLOW_EXPONENT)
    # phase extraction via angle: robust down to subnormal samples
    u_phase = np.where(u_magnitude > 0.0, np.exp(1j * np.angle(u.values)), 0.0)
    values = np.exp(np.minimum(total_log, OVERFLOW_EXPONENT)) * phase * u_phase
    factor = np.exp(np.where(direct_ok, log_magnitude, 0.0)) * phase
    values[direct_ok] = (factor * u.values)[direct_ok]
    saturated = total_log > OVERFLOW_EXPONENT
    flagged = bool(np.any(saturated))
    return SpectralField(u.grid, values, u.overflow or flagged), flagged
