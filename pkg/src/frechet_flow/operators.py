"""Operators on spectral fields and their per-ball seminorm calculus.

A constant-coefficient operator acts on the Fourier side as pointwise
multiplication by its symbol.  For such a multiplier the ball-j operator
seminorm ``sup { p_j(Au) : p_j(u) = 1 }`` is exactly the node maximum of
``|a|`` over ball j (the weighted-l2 structure makes the sup attained by a
unit sample at the argmax node), which turns the abstract inequalities
``p_j(Au) <= p_j^X(A) p_j(u)`` and ``p_j^X(A^k) <= p_j^X(A)^k`` into
identities that can be checked exactly.

Operators that are not multipliers plug in through the same ``apply``
contract; their compatibility with the seminorm family is then audited on
samples rather than computed (see `check_strong_compatibility`).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .spectral import FrequencyGrid, GridError, SpectralField, mask_outside, seminorm
from .symbols import PolynomialSymbol, SymbolExpr, _eval_node, parse_symbol, to_polynomial


class MultiplierOperator:
    """Action of a symbol ``a`` as nodewise multiplication on fields.

    Symbol values are evaluated once per grid and cached; the operator is
    immutable afterwards.
    """

    def __init__(self, symbol, grid: FrequencyGrid, label: str | None = None):
        if isinstance(symbol, str):
            symbol = parse_symbol(symbol, grid.n)
        if isinstance(symbol, SymbolExpr):
            if symbol.n != grid.n:
                raise GridError(f"symbol dimension {symbol.n} != grid dimension {grid.n}")
            values = _expr_on_grid(symbol, grid)
            poly = None
            try:
                poly = to_polynomial(symbol)
            except Exception:
                pass
        elif isinstance(symbol, PolynomialSymbol):
            if symbol.n != grid.n:
                raise GridError(f"symbol dimension {symbol.n} != grid dimension {grid.n}")
            if grid.n == 1:
                values = symbol.eval_grid(grid.axis)
            else:
                values = symbol.eval_grid(grid.axis, grid.axis)
            poly = symbol
        else:
            raise TypeError(f"not a symbol: {symbol!r}")
        values = np.ascontiguousarray(values, dtype=np.complex128)
        values.setflags(write=False)
        self.grid = grid
        self.symbol = symbol
        self.polynomial: Optional[PolynomialSymbol] = poly
        self.values = values
        self.label = label
        self._seminorms: dict[int, float] = {}

    @classmethod
    def from_values(cls, grid: FrequencyGrid, values, label: str | None = None):
        op = cls.__new__(cls)
        values = np.ascontiguousarray(values, dtype=np.complex128)
        if values.shape != grid.shape:
            raise GridError("values shape does not match grid")
        values.setflags(write=False)
        op.grid = grid
        op.symbol = None
        op.polynomial = None
        op.values = values
        op.label = label
        op._seminorms = {}
        return op

    def apply(self, u: SpectralField) -> SpectralField:
        if u.grid != self.grid:
            raise GridError(f"field grid {u.grid} does not match operator grid {self.grid}")
        return SpectralField(self.grid, self.values * u.values, u.overflow)

    def seminorm(self, j: int) -> float:
        """Exact discrete operator seminorm: node maximum of |a| on ball j."""
        j = self.grid.check_ball_index(j)
        cached = self._seminorms.get(j)
        if cached is None:
            cached = float(np.max(np.abs(self.values[self.grid.ball_mask(j)])))
            self._seminorms[j] = cached
        return cached

    def seminorm_argmax(self, j: int) -> tuple[int, ...]:
        """Index of a node attaining the ball-j operator seminorm."""
        mask = self.grid.ball_mask(j)
        magnitudes = np.where(mask, np.abs(self.values), -1.0)
        return np.unravel_index(int(np.argmax(magnitudes)), self.grid.shape)

    def power(self, k: int) -> "MultiplierOperator":
        """The k-fold composition, computed by repeated nodewise products."""
        if k < 1:
            raise ValueError("power needs k >= 1")
        values = self.values.copy()
        for _ in range(k - 1):
            values = values * self.values
        return MultiplierOperator.from_values(self.grid, values, label=f"{self.label}^{k}")

    def __repr__(self):
        return f"MultiplierOperator({self.label or self.symbol!r}, {self.grid!r})"


def _expr_on_grid(expr: SymbolExpr, grid: FrequencyGrid) -> np.ndarray:
    if grid.n == 1:
        points = grid.axis.astype(complex)
        return np.asarray(_eval_node(expr.root, [points]), dtype=np.complex128)
    x1 = grid.axis[:, None].astype(complex)
    x2 = grid.axis[None, :].astype(complex)
    out = _eval_node(expr.root, [x1, x2])
    return np.broadcast_to(np.asarray(out, dtype=np.complex128), grid.shape).copy()


class ReflectionOperator:
    """Synthetic non-local operator ``(Ru)(xi) = u(scale * xi)``.

    With |scale| > 1 it pulls samples from outside a ball into it, so it
    violates kernel preservation and serves as the canonical failure case
    for the compatibility audit and the quotient-diagram checks.
    """

    def __init__(self, grid: FrequencyGrid, scale: int = -2):
        if scale == 0:
            raise ValueError("scale must be nonzero")
        self.grid = grid
        self.scale = int(scale)
        lim = grid.J * grid.inv_h
        source = grid.axis_index * self.scale
        in_range = np.abs(source) <= lim
        gather = np.clip(source + lim, 0, 2 * lim)
        self._gather = gather
        self._in_range = in_range
        self.label = f"reflection(scale={scale})"

    def apply(self, u: SpectralField) -> SpectralField:
        if u.grid != self.grid:
            raise GridError("field grid does not match operator grid")
        if self.grid.n == 1:
            values = np.where(self._in_range, u.values[self._gather], 0.0)
        else:
            values = np.where(
                self._in_range[:, None] & self._in_range[None, :],
                u.values[np.ix_(self._gather, self._gather)],
                0.0,
            )
        return SpectralField(self.grid, values, u.overflow)

    def __repr__(self):
        return f"ReflectionOperator({self.grid!r}, scale={self.scale})"


def identity_operator(grid: FrequencyGrid) -> MultiplierOperator:
    return MultiplierOperator.from_values(grid, np.ones(grid.shape), label="identity")


def apply_operator(op, u: SpectralField) -> SpectralField:
    return op.apply(u)


def operator_seminorm(op, j: int) -> float:
    """Ball-j operator seminorm; exact only for multiplier operators."""
    if isinstance(op, MultiplierOperator):
        return op.seminorm(j)
    raise TypeError(
        "operator seminorms are only computable for multipliers; "
        "audit generic operators with check_strong_compatibility"
    )


def operator_seminorm_profile(op: MultiplierOperator) -> np.ndarray:
    """All ball seminorms ``(p_1^X, ..., p_J^X)``; nondecreasing in j."""
    return np.array([operator_seminorm(op, j) for j in range(1, op.grid.J + 1)])


def continuum_seminorm_bound(symbol, j: int, samples: int = 4096) -> float:
    """The continuum bound ``sup_{|xi| <= j} |a(xi)|`` for a polynomial symbol.

    In one dimension the maximum of ``|a|^2`` is located by a critical-point
    search (roots of the derivative of a real polynomial); in two dimensions
    it is sampled on rings.  The discrete operator seminorm never exceeds it.
    """
    poly = to_polynomial(symbol) if not isinstance(symbol, PolynomialSymbol) else symbol
    if poly.n == 1:
        deg = max((a[0] for a in poly.coeffs), default=0)
        re = np.zeros(deg + 1)
        im = np.zeros(deg + 1)
        for (a,), c in poly.coeffs.items():
            re[a] = c.real
            im[a] = c.imag
        square = np.polynomial.polynomial.polymul(re, re)
        square = np.polynomial.polynomial.polyadd(
            square, np.polynomial.polynomial.polymul(im, im)
        )
        deriv = np.polynomial.polynomial.polyder(square)
        candidates = [-float(j), float(j), 0.0]
        if deriv.size > 1 or deriv[0] != 0:
            roots = np.polynomial.polynomial.polyroots(deriv)
            for r in roots:
                if abs(r.imag) < 1e-9 and abs(r.real) <= j:
                    candidates.append(float(r.real))
        return max(abs(poly.eval([x])) for x in candidates)
    radii = np.linspace(0.0, float(j), 64)
    angles = np.linspace(0.0, 2 * math.pi, samples // 64, endpoint=False)
    best = 0.0
    for r in radii:
        for th in angles:
            best = max(best, abs(poly.eval([r * math.cos(th), r * math.sin(th)])))
    return best


# ---------------------------------------------------------------------------
# Strong-compatibility audit


@dataclass(frozen=True)
class CompatibilityRow:
    j: int
    operator_seminorm: float
    seminorm_is_exact: bool
    kernel_preserved: bool
    bound_holds: bool
    witness: Optional[SpectralField]

    @property
    def passed(self) -> bool:
        return self.kernel_preserved and self.bound_holds


@dataclass(frozen=True)
class CompatibilityReport:
    rows: tuple

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def row(self, j: int) -> CompatibilityRow:
        return self.rows[j - 1]

    def to_csv(self, path):
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["j", "pjX", "pass_kernel", "pass_bound"])
            for row in self.rows:
                writer.writerow(
                    [
                        row.j,
                        f"{row.operator_seminorm:.17g}",
                        int(row.kernel_preserved),
                        int(row.bound_holds),
                    ]
                )


def compatibility_samples(
    grid: FrequencyGrid, rng: np.random.Generator, extra: int = 8
) -> list[SpectralField]:
    """Delta fields at every node plus a few random fields."""
    fields = []
    values = np.zeros(grid.shape, dtype=np.complex128)
    for index in np.ndindex(grid.shape):
        values[index] = 1.0
        fields.append(SpectralField(grid, values))
        values[index] = 0.0
    from .spectral import random_field

    fields.extend(random_field(grid, rng) for _ in range(extra))
    return fields


def check_strong_compatibility(
    op,
    samples: Sequence[SpectralField],
    relative_slack: float = 1e-12,
) -> CompatibilityReport:
    """Audit the two strong-compatibility requirements on a sample set.

    Per ball j the audit checks (i) kernel preservation: samples zeroed
    inside ball j map to fields with ball-j seminorm exactly zero, and
    (ii) the bound ``p_j(Au) <= p_j^X p_j(u)`` on every sample, where
    ``p_j^X`` is exact for multipliers and otherwise the sampled supremum
    of the ratio.  Failures carry a concrete witness field.
    """
    if not samples:
        raise ValueError("sample set must be nonempty")
    grid = samples[0].grid
    rows = []
    for j in range(1, grid.J + 1):
        witness = None
        kernel_ok = True
        for u in samples:
            outside = mask_outside(u, j)
            image = op.apply(outside)
            if seminorm(image, j) != 0.0:
                kernel_ok = False
                witness = outside
                break
        exact = isinstance(op, MultiplierOperator)
        if exact:
            pjx = op.seminorm(j)
        else:
            ratios = []
            for u in samples:
                pj_u = seminorm(u, j)
                if pj_u > 0:
                    ratios.append(seminorm(op.apply(u), j) / pj_u)
            pjx = max(ratios) if ratios else 0.0
        bound_ok = True
        for u in samples:
            lhs = seminorm(op.apply(u), j)
            rhs = pjx * seminorm(u, j)
            if lhs > rhs * (1.0 + relative_slack) + 1e-300:
                bound_ok = False
                if witness is None:
                    witness = u
                break
        rows.append(
            CompatibilityRow(
                j=j,
                operator_seminorm=pjx,
                seminorm_is_exact=exact,
                kernel_preserved=kernel_ok,
                bound_holds=bound_ok,
                witness=witness,
            )
        )
    return CompatibilityReport(rows=tuple(rows))


def verify_power_bound(op: MultiplierOperator, k: int, j: int) -> tuple[float, float]:
    """Return (p_j^X(A^k), p_j^X(A)^k); for multipliers the two coincide."""
    if k < 1:
        raise ValueError("power bound needs k >= 1")
    lhs = op.power(k).seminorm(j)
    rhs = op.seminorm(j) ** k
    return lhs, rhs


def sharpness_field(op: MultiplierOperator, j: int) -> SpectralField:
    """Unit sample attaining ``p_j(Au) = p_j^X(A) p_j(u)`` exactly."""
    values = np.zeros(op.grid.shape, dtype=np.complex128)
    values[op.seminorm_argmax(j)] = 1.0
    return SpectralField(op.grid, values)
