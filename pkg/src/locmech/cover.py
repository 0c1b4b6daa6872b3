"""Universal cover of the punctured plane, realized through the complex log.

The covering map is z = exp(w): a point w = u + iv projects to radius
exp(u) and angle v.  Lifting a trajectory is bookkeeping, u = log r and
v = the continuously unwrapped angle, but it turns the multivalued
angle into a single global coordinate, and the vortex energy T - v is
conserved on the cover with no chart hops at all.

Log germs make the same structure discrete: a germ is (anchor, sheet)
with value log|z| + i(Arg z + 2*pi*sheet), continued along paths by
angle unwrapping.  Values are always derived from the sheet integer,
never stored, so monodromy comes out exactly 2*pi*i per loop.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, SingularityError, ValidationError
from .fields import TAU, angle_change, principal_angle_diff

_SHEET_RESIDUAL_TOL = 1e-6
_ANCHOR_MATCH_TOL = 1e-9


@dataclass(frozen=True)
class LiftState:
    u: float
    v: float

    @property
    def z(self):
        return cmath.exp(complex(self.u, self.v))


def sheet_of(state):
    """Sheet index of a lift point: round((v - Arg(exp(u+iv)))/2pi)."""
    if isinstance(state, LiftState):
        v = state.v
    else:
        v = float(state[1])
    principal = math.atan2(math.sin(v), math.cos(v))
    raw = (v - principal) / TAU
    n = int(round(raw))
    if abs(raw - n) > _SHEET_RESIDUAL_TOL:
        raise NumericError(f"sheet index off-integer by {abs(raw - n):.3e}")
    return n


class LiftTrajectory:
    """Arrays (t, u, v) of a lifted run plus per-state sheet indices."""

    def __init__(self, t, u, v):
        self.t = t
        self.u = u
        self.v = v

    @property
    def n_states(self):
        return len(self.t)

    def state(self, k):
        return LiftState(float(self.u[k]), float(self.v[k]))

    def sheets(self):
        principal = np.arctan2(np.sin(self.v), np.cos(self.v))
        raw = (self.v - principal) / TAU
        n = np.rint(raw).astype(np.int64)
        if float(np.max(np.abs(raw - n))) > _SHEET_RESIDUAL_TOL:
            raise NumericError("sheet index off-integer in lift")
        return n

    def reprojected(self):
        r = np.exp(self.u)
        return np.column_stack([r * np.cos(self.v), r * np.sin(self.v)])


def lift_trajectory(tr):
    """Lift a planar trajectory through exp; it must avoid the origin.

    v starts at Arg(q0) and accumulates the logged angle steps, so the
    projection exp(u)(cos v, sin v) reproduces the positions.
    """
    r = np.hypot(tr.qx, tr.qy)
    if float(np.min(r)) <= 0.0:
        raise SingularityError("trajectory touches the origin; no lift")
    u = np.log(r)
    col = None
    for s_idx, s in enumerate(tr.field.singular_points):
        if s == (0.0, 0.0):
            col = s_idx
            break
    if col is not None:
        v = tr.theta[:, col].copy()
    else:
        raw = np.arctan2(tr.qy, tr.qx)
        steps = [
            principal_angle_diff(float(b), float(a))
            for a, b in zip(raw[:-1], raw[1:])
        ]
        v = np.concatenate([[raw[0]], raw[0] + np.cumsum(steps)])
    return LiftTrajectory(tr.t.copy(), u, v)


def lift_path(path):
    """Lift a plain path (no dynamics): arrays u, v and sheet indices
    along its sample points."""
    pts = path.sample()
    r = np.hypot(pts[:, 0], pts[:, 1])
    if float(np.min(r)) <= 0.0:
        raise SingularityError("path touches the origin; no lift")
    u = np.log(r)
    raw = np.arctan2(pts[:, 1], pts[:, 0])
    v = np.empty(len(pts))
    v[0] = raw[0]
    # reuse the refining accumulator per sampled step for safety on
    # coarse polylines
    if hasattr(path, "edges"):
        total = raw[0]
        out = [total]
        from .fields import _chord_sweep
        for a, b in path.edges():
            total += _chord_sweep(a, b, (0.0, 0.0), 48)
            out.append(total)
        v = np.array(out)
    else:
        for k in range(1, len(pts)):
            v[k] = v[k - 1] + principal_angle_diff(float(raw[k]), float(raw[k - 1]))
    lift = LiftTrajectory(np.arange(len(pts), dtype=float), u, v)
    return lift


@dataclass(frozen=True)
class CoverEnergyReport:
    t: np.ndarray
    energy: np.ndarray
    drift: float
    strength: float


def cover_energy(tr, lift, m=None, strength=None):
    """Energy on the cover: kinetic part minus circulation * v.

    For the unit vortex the cover potential is -v and the result is
    T - v; for a field with no puncture the strength is zero and this
    reduces to the kinetic energy alone.
    """
    if m is None:
        m = tr.m
    if strength is None:
        strength = _origin_strength(tr.field)
    Tkin = (tr.px ** 2 + tr.py ** 2) / (2.0 * m)
    energy = Tkin - strength * lift.v
    drift = float(np.max(np.abs(energy - energy[0])))
    return CoverEnergyReport(tr.t.copy(), energy, drift, strength)


def _origin_strength(field):
    from .dynamics import _circulation

    for which, s in enumerate(field.singular_points):
        if s == (0.0, 0.0):
            return _circulation(field, which) / TAU
    return 0.0


# ---------------------------------------------------------------------------
# log germs

@dataclass(frozen=True)
class LogGerm:
    """A branch of log at an anchor point, labeled by its sheet."""

    anchor: complex
    sheet: int

    def __post_init__(self):
        if self.anchor == 0:
            raise ValidationError("log has no germ at the origin")

    @property
    def value(self):
        return complex(
            math.log(abs(self.anchor)),
            cmath.phase(self.anchor) + TAU * self.sheet,
        )


def continue_log(germ, path):
    """Analytic continuation of a log germ along a path from its anchor.

    The continuous angle advances by the unwrapped sweep of the path
    about the origin; the new sheet is the integer that keeps the
    continued angle consistent with the principal argument at the end.
    """
    start = path.start
    gap = abs(complex(start[0], start[1]) - germ.anchor)
    if gap > _ANCHOR_MATCH_TOL:
        raise ValidationError(
            f"path starts {gap:.3e} away from the germ anchor"
        )
    sweep = angle_change(path, (0.0, 0.0))
    end = path.end
    anchor_end = complex(end[0], end[1])
    continued = cmath.phase(germ.anchor) + TAU * germ.sheet + sweep
    raw = (continued - cmath.phase(anchor_end)) / TAU
    sheet = int(round(raw))
    if abs(raw - sheet) > _SHEET_RESIDUAL_TOL:
        raise NumericError(
            f"continued angle misses a sheet by {abs(raw - sheet):.3e}"
        )
    return LogGerm(anchor_end, sheet)


def monodromy_log(n_loops):
    """Value shift of a log germ after n positive loops about the origin."""
    return complex(0.0, TAU * n_loops)
