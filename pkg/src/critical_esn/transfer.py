"""Morphable transfer functions anchored on the tanh curve.

A morphable transfer function is a continuous, nondecreasing, Lipschitz-1
curve assembled from shifted tanh branches.  Each anchor abscissa (an
"epi-critical point", ECP) sits exactly on the underlying tanh curve and
carries slope exactly 1; everywhere else the slope stays strictly below 1.
Placing the ECPs at the linear responses a neuron expects makes the unit
contraction rate available exactly at the expected states while every
other state is contracted.

Around an ECP ``p`` the curve is the branch ``B_p(x) = tanh(x - p) +
tanh(p)``.  The point 0 is always a member of the ECP list (inserted if
missing), which makes plain tanh the single-anchor special case.  Between
two adjacent anchors the left branch overshoots the right anchor, so the
two branches have to be glued; two gluing variants are provided:

``plateau``
    Follow the left branch up to the mid level between the two anchor
    values, hold that level, and rejoin the right branch where it reaches
    the same level.  The flat part has slope exactly 0.

``bridge`` (default)
    Replace the flat part by a straight segment of strictly positive
    slope through the segment midpoint, so the slope is positive
    everywhere strictly between the extreme anchors.  The bridge slope is
    half the anchor-to-anchor chord slope, which keeps it in (0, 1/2) and
    leaves a nonempty unit-slope branch piece around every anchor.

Outside the extreme anchors the curve follows the outermost branch, so
the tails saturate at ``tanh(p_extreme) +- 1``.

Instances are immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "Variant",
    "MorphableTransfer",
    "TanhTransfer",
    "ValidationIssue",
    "ValidationReport",
    "MIN_ECP_SPACING",
]

#: Minimum spacing between adjacent ECPs; below this the junction solves
#: are ill-conditioned and the builder rejects the list.
MIN_ECP_SPACING = 1e-6

#: Junction equations are solved until the defining residual is below this.
_RESIDUAL_TOL = 1e-14

# Piece kinds of the compiled piecewise representation.
_BRANCH = 0  # tanh(x - p1) + p2
_LINE = 1    # p1 + p2 * (x - p3)
_CONST = 2   # p1


def _tanh(x: float) -> float:
    """Scalar tanh through numpy, bit-consistent with the array eval path.

    math.tanh and np.tanh can disagree by one ulp; mixing them in the
    builder would misclassify segments whose branch gap is exactly zero.
    """
    return float(np.tanh(x))


class Variant(str, Enum):
    """Gluing rule used between adjacent anchors."""

    PLATEAU = "plateau"
    BRIDGE = "bridge"


def _bisect_root(f, lo: float, hi: float) -> float:
    """Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign.

    Iterates until the bracket collapses to adjacent floats, so the
    returned abscissa is accurate to 1 ulp and the residual is far below
    the 1e-14 contract for the smooth junction equations solved here.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo < 0.0) == (fhi < 0.0):
        raise ValueError("root bracket does not change sign")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return 0.5 * (lo + hi)


def _normalize_ecps(points) -> np.ndarray:
    """Sort, insert 0 if absent, and enforce the ECP list invariants."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 1:
        raise ValueError("ECP list must be one-dimensional")
    if pts.size and not np.all(np.isfinite(pts)):
        raise ValueError("ECP values must be finite")
    if not np.any(pts == 0.0):
        pts = np.append(pts, 0.0)
    pts = np.sort(pts)
    gaps = np.diff(pts)
    if gaps.size and gaps.min() < MIN_ECP_SPACING:
        raise ValueError(
            f"adjacent ECP spacing {gaps.min():.3g} below the "
            f"{MIN_ECP_SPACING:.0e} floor (0 is auto-inserted)"
        )
    return pts


@dataclass(frozen=True)
class ValidationIssue:
    """One invariant violation found by :meth:`MorphableTransfer.validate`."""

    x: float
    check: str
    magnitude: float

    def __str__(self) -> str:
        return f"{self.check} at x={self.x:.9g} (magnitude {self.magnitude:.3g})"


@dataclass
class ValidationReport:
    """Outcome of a dense-grid invariant check."""

    grid_step: float
    points_checked: int
    issues: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def __str__(self) -> str:
        head = (
            f"validated {self.points_checked} grid points "
            f"(step {self.grid_step:g}): "
        )
        if self.ok:
            return head + "no violations"
        lines = [head + f"{len(self.issues)} violation(s)"]
        lines += [f"  - {issue}" for issue in self.issues[:20]]
        if len(self.issues) > 20:
            lines.append(f"  ... and {len(self.issues) - 20} more")
        return "\n".join(lines)


class MorphableTransfer:
    """Piecewise transfer function with exact unit-slope anchors.

    Parameters
    ----------
    ecps : sequence of float
        Anchor abscissae.  Sorted internally; 0 is inserted if absent.
        Adjacent anchors must be at least ``MIN_ECP_SPACING`` apart.
    variant : Variant or str
        Gluing rule between adjacent anchors (default ``bridge``).

    Notes
    -----
    At a kink abscissa :meth:`slope` returns the right-sided value, so
    validators see a deterministic answer.  Junction positions are solved
    at build time to residuals below 1e-14 and evaluation is a table
    lookup plus one tanh, so instances are cheap to call on arrays.
    """

    def __init__(self, ecps, variant: Variant | str = Variant.BRIDGE):
        self._ecps = _normalize_ecps(ecps)
        self._variant = Variant(variant)
        self._compile()

    # -- construction -----------------------------------------------------

    def _compile(self) -> None:
        pts = self._ecps
        anchors = np.tanh(pts)
        breaks: list[float] = []
        # Pieces as (kind, p1, p2, p3); piece j is active on
        # [breaks[j-1], breaks[j]) with the right piece owning the break.
        pieces: list[tuple[int, float, float, float]] = [
            (_BRANCH, float(pts[0]), float(anchors[0]), 0.0)
        ]

        for i in range(len(pts) - 1):
            left, right = float(pts[i]), float(pts[i + 1])
            h_lo, h_hi = float(anchors[i]), float(anchors[i + 1])
            width = right - left
            dh = h_hi - h_lo

            def branch_gap(x, _l=left, _r=right, _lo=h_lo, _hi=h_hi):
                return (_tanh(x - _l) + _lo) - (_tanh(x - _r) + _hi)

            # Segments adjacent to the anchor at 0 have a branch gap of
            # exactly zero at their endpoints; a one-ulp wobble must not
            # flip them into the crossing case, hence the small margin.
            if branch_gap(left) < -1e-12:
                # Branches cross strictly inside the segment; switch at the
                # crossing nearest the midpoint.  Unreachable once 0 is an
                # anchor (same-side segments keep the left branch on top),
                # kept for generality.
                mid = left + 0.5 * width
                gap_mid = branch_gap(mid)
                candidates = []
                if gap_mid == 0.0:
                    candidates.append(mid)
                else:
                    if (gap_mid < 0.0) != (branch_gap(left) < 0.0):
                        candidates.append(_bisect_root(branch_gap, left, mid))
                    if (branch_gap(right) < 0.0) != (gap_mid < 0.0):
                        candidates.append(_bisect_root(branch_gap, mid, right))
                if not candidates:
                    raise RuntimeError("crossing segment without a root")
                root = min(candidates, key=lambda r: abs(r - mid))
                breaks.append(root)
                pieces.append((_BRANCH, right, h_hi, 0.0))
                continue

            # Left branch rides above the right branch (touching at most at
            # the segment ends): glue per variant.
            level = 0.5 * (h_lo + h_hi)
            if self._variant is Variant.PLATEAU:
                # math.atanh is exact here: dh/2 <= tanh(width)/2 < 1/2.
                reach = math.atanh(0.5 * dh)
                depart, arrive = left + reach, right - reach
                middle = (_CONST, level, 0.0, 0.0)
            else:
                slope = dh / (2.0 * width)
                mid = left + 0.5 * width

                def junction(s, _m=slope, _w=width, _dh=dh):
                    return _tanh(s) + _m * (0.5 * _w - s) - 0.5 * _dh

                # junction(0) = -dh/4 < 0 and junction(w/2) > 0, so the
                # offset is strictly inside (0, w/2) and the branch piece
                # around each anchor keeps nonzero width.
                off = _bisect_root(junction, 0.0, 0.5 * width)
                depart, arrive = left + off, right - off
                middle = (_LINE, level, slope, mid)
            if not (left < depart < arrive < right):
                raise RuntimeError("glue junctions escaped their segment")
            breaks.append(depart)
            pieces.append(middle)
            breaks.append(arrive)
            pieces.append((_BRANCH, right, h_hi, 0.0))

        self._breaks = np.asarray(breaks)
        if self._breaks.size and np.any(np.diff(self._breaks) <= 0.0):
            raise RuntimeError("piece junctions out of order")
        self._kind = np.array([p[0] for p in pieces], dtype=np.int8)
        self._p1 = np.array([p[1] for p in pieces])
        self._p2 = np.array([p[2] for p in pieces])
        self._p3 = np.array([p[3] for p in pieces])
        self._single = len(pieces) == 1

        mismatch = self._junction_mismatch()
        if mismatch > _RESIDUAL_TOL:
            raise RuntimeError(f"junction residual {mismatch:.3g} above tolerance")

    def _piece_value(self, j: int, x: float) -> float:
        kind = self._kind[j]
        if kind == _BRANCH:
            return _tanh(x - self._p1[j]) + self._p2[j]
        if kind == _LINE:
            return self._p1[j] + self._p2[j] * (x - self._p3[j])
        return self._p1[j]

    def _junction_mismatch(self) -> float:
        worst = 0.0
        for j, b in enumerate(self._breaks):
            worst = max(worst, abs(self._piece_value(j, b) - self._piece_value(j + 1, b)))
        return worst

    # -- queries ----------------------------------------------------------

    @property
    def ecps(self) -> tuple[float, ...]:
        """Anchor abscissae after sorting and 0-insertion."""
        return tuple(self._ecps)

    @property
    def variant(self) -> Variant:
        return self._variant

    @property
    def kinks(self) -> tuple[float, ...]:
        """Abscissae where the slope jumps (piece junctions)."""
        return tuple(self._breaks)

    def eval(self, x):
        """Transfer value; arrays map elementwise, scalars return float."""
        arr = np.asarray(x, dtype=float)
        if self._single:
            out = np.tanh(arr - self._p1[0]) + self._p2[0]
        else:
            idx = np.searchsorted(self._breaks, arr, side="right")
            kind = self._kind[idx]
            out = np.empty_like(arr, dtype=float)
            m = kind == _BRANCH
            if m.any():
                out[m] = np.tanh(arr[m] - self._p1[idx[m]]) + self._p2[idx[m]]
            m = kind == _LINE
            if m.any():
                out[m] = self._p1[idx[m]] + self._p2[idx[m]] * (arr[m] - self._p3[idx[m]])
            m = kind == _CONST
            if m.any():
                out[m] = self._p1[idx[m]]
        return out if arr.ndim else float(out)

    __call__ = eval

    def slope(self, x):
        """Analytic slope of the active piece (right-sided at kinks)."""
        arr = np.asarray(x, dtype=float)
        if self._single:
            out = 1.0 - np.tanh(arr - self._p1[0]) ** 2
        else:
            idx = np.searchsorted(self._breaks, arr, side="right")
            kind = self._kind[idx]
            out = np.empty_like(arr, dtype=float)
            m = kind == _BRANCH
            if m.any():
                out[m] = 1.0 - np.tanh(arr[m] - self._p1[idx[m]]) ** 2
            m = kind == _LINE
            if m.any():
                out[m] = self._p2[idx[m]]
            m = kind == _CONST
            if m.any():
                out[m] = 0.0
        return out if arr.ndim else float(out)

    def sample(self, lo: float, hi: float, n: int) -> np.ndarray:
        """Evenly spaced table of (x, value, slope), endpoints included.

        Returns an (n, 3) array; used by the CLI curve dump.
        """
        if not (lo < hi):
            raise ValueError("sample range requires lo < hi")
        if n < 2:
            raise ValueError("sample needs at least two rows")
        xs = np.linspace(lo, hi, n)
        return np.column_stack([xs, self.eval(xs), self.slope(xs)])

    # -- validation -------------------------------------------------------

    def validate(self, grid_step: float) -> ValidationReport:
        """Dense-grid check of every invariant over the anchor span +- 5.

        Checks exact anchor values, the slope range, slope-1-only-at-ECPs,
        monotonicity with the Lipschitz-1 increment bound, the amplitude
        bound, junction continuity within 1e-12, agreement between the
        analytic slope and a central finite difference away from kinks,
        and (bridge variant) strictly positive slope between the extreme
        anchors.  Violations are reported, never raised.
        """
        if not (0.0 < grid_step <= 1e-2):
            raise ValueError("grid_step must be in (0, 1e-2]")
        issues: list[ValidationIssue] = []
        pts = self._ecps
        lo, hi = pts[0] - 5.0, pts[-1] + 5.0
        count = int(round((hi - lo) / grid_step)) + 1
        xs = np.linspace(lo, hi, count)

        for p, anchor in zip(pts, np.tanh(pts)):
            got = self.eval(float(p))
            if got != anchor:
                issues.append(ValidationIssue(float(p), "anchor value", abs(got - anchor)))
            if self.slope(float(p)) != 1.0:
                issues.append(ValidationIssue(float(p), "anchor slope", abs(self.slope(float(p)) - 1.0)))

        vals = self.eval(xs)
        slopes = self.slope(xs)

        bad = (slopes < 0.0) | (slopes > 1.0)
        for x, s in zip(xs[bad], slopes[bad]):
            issues.append(ValidationIssue(float(x), "slope range", float(max(-s, s - 1.0))))

        # Slope 1 is allowed only within one grid step of an anchor.
        at_one = slopes >= 1.0
        if at_one.any():
            dist = np.min(np.abs(xs[at_one, None] - pts[None, :]), axis=1)
            for x, d in zip(xs[at_one][dist > grid_step], dist[dist > grid_step]):
                issues.append(ValidationIssue(float(x), "unit slope off anchor", float(d)))

        dv = np.diff(vals)
        dx = np.diff(xs)
        for x, m in zip(xs[:-1][dv < 0.0], -dv[dv < 0.0]):
            issues.append(ValidationIssue(float(x), "monotonicity", float(m)))
        over = dv - dx
        for x, m in zip(xs[:-1][over > 0.0], over[over > 0.0]):
            issues.append(ValidationIssue(float(x), "Lipschitz-1 increment", float(m)))

        bound = 1.0 + max(abs(np.tanh(pts[0])), abs(np.tanh(pts[-1])))
        big = np.abs(vals) > bound
        for x, v in zip(xs[big], np.abs(vals[big]) - bound):
            issues.append(ValidationIssue(float(x), "amplitude bound", float(v)))

        if self._variant is Variant.BRIDGE and len(pts) > 1:
            inside = (xs > pts[0]) & (xs < pts[-1])
            flat = inside & (slopes <= 0.0)
            for x in xs[flat]:
                issues.append(ValidationIssue(float(x), "bridge slope positivity", 0.0))

        for j, b in enumerate(self._breaks):
            gap = abs(self._piece_value(j, float(b)) - self._piece_value(j + 1, float(b)))
            if gap > 1e-12:
                issues.append(ValidationIssue(float(b), "junction continuity", gap))

        # Central finite difference vs analytic slope, away from kinks.
        h = 1e-7
        if self._breaks.size:
            kink_dist = np.min(np.abs(xs[:, None] - self._breaks[None, :]), axis=1)
            smooth = kink_dist > 2.0 * h
        else:
            smooth = np.ones_like(xs, dtype=bool)
        fd = (self.eval(xs[smooth] + h) - self.eval(xs[smooth] - h)) / (2.0 * h)
        err = np.abs(fd - slopes[smooth])
        for x, e in zip(xs[smooth][err > 1e-6], err[err > 1e-6]):
            issues.append(ValidationIssue(float(x), "finite-difference slope", float(e)))

        return ValidationReport(grid_step=grid_step, points_checked=count, issues=issues)

    def __repr__(self) -> str:
        inner = ", ".join(f"{p:g}" for p in self._ecps)
        return f"MorphableTransfer([{inner}], variant={self._variant.value})"


class TanhTransfer:
    """Plain tanh with the same query interface as :class:`MorphableTransfer`.

    Used as the contrast baseline system; identical to a single-anchor
    morphable transfer but kept as its own type to make the baseline
    explicit in configurations.
    """

    ecps: tuple[float, ...] = (0.0,)
    variant = None
    kinks: tuple[float, ...] = ()

    def eval(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.tanh(arr)
        return out if arr.ndim else float(out)

    __call__ = eval

    def slope(self, x):
        arr = np.asarray(x, dtype=float)
        out = 1.0 - np.tanh(arr) ** 2
        return out if arr.ndim else float(out)

    def __repr__(self) -> str:
        return "TanhTransfer()"
