"""Transport bracket, discrete energies, and consistent velocity/momentum states.

The central object is the bilinear bracket ``gamma_apply(m, v)`` whose
skew-symmetry in the grid inner product drives every conservation property of
the time steppers.  Evaluated at time-averaged arguments it realizes the
midpoint-implicit scheme; evaluated at the current state it realizes the
explicit leapfrog schemes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    FieldPair,
    GridSpec,
    _check_same_grid,
    apply_q,
    inner,
    norm,
    solve_q,
)

__all__ = [
    "State",
    "gamma_apply",
    "dvd_scheme1",
    "dvd_scheme2",
    "dvd_scheme3",
    "semi_discrete_rhs",
    "energy_scheme1",
    "energy_half_scheme2",
    "energy_half_scheme3",
    "linear_momenta",
]


@dataclass(frozen=True)
class State:
    """A consistent (velocity, momentum) pair at one instant.

    The momentum is tied to the velocity by m_i = Q u_i.  Build states through
    :meth:`from_velocity` (applies Q, cheap) or :meth:`from_momentum` (solves
    Q u = m); the direct constructor is for steppers that already carry both
    fields.
    """

    u: FieldPair
    m: FieldPair
    t: float

    def __post_init__(self):
        _check_same_grid(self.u, self.m)
        object.__setattr__(self, "t", float(self.t))

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    @classmethod
    def from_velocity(cls, u: FieldPair, t: float = 0.0) -> "State":
        return cls(u=u, m=apply_q(u), t=t)

    @classmethod
    def from_momentum(cls, m: FieldPair, t: float = 0.0) -> "State":
        return cls(u=solve_q(m), m=m, t=t)

    def momentum_defect(self) -> float:
        """Relative residual ||Q u - m|| / ||m|| (0 for the zero state)."""
        nm = norm(self.m)
        if nm == 0.0:
            return norm(apply_q(self.u))
        return norm(apply_q(self.u) - self.m) / nm

    def negated(self, t: float) -> "State":
        """The time-reversed image (-u, -m) restamped at time t."""
        return State(u=-self.u, m=-self.m, t=t)


def _gamma_arrays(m1, m2, v1, v2, dx: float, dy: float):
    """Both components of the bracket on raw (J, K) arrays.

    The eight centered differences are computed as two rolls of stacked
    (4, J, K) blocks, which is ~3x cheaper than eight separate stencils;
    elementwise this is identical to applying d1x/d1y term by term:

        c1 = m1*d1x(v1) + m2*d1x(v2) + d1x(m1*v1) + d1y(m1*v2)
        c2 = m1*d1y(v1) + m2*d1y(v2) + d1x(m2*v1) + d1y(m2*v2)
    """
    xs = np.stack([v1, v2, m1 * v1, m2 * v1])
    ys = np.stack([v1, v2, m1 * v2, m2 * v2])
    dxs = (np.roll(xs, -1, 2) - np.roll(xs, 1, 2)) * (0.5 / dx)
    dys = (np.roll(ys, -1, 1) - np.roll(ys, 1, 1)) * (0.5 / dy)
    c1 = m1 * dxs[0] + m2 * dxs[1] + dxs[2] + dys[2]
    c2 = m1 * dys[0] + m2 * dys[1] + dxs[3] + dys[3]
    return c1, c2


def gamma_apply(m: FieldPair, v: FieldPair) -> FieldPair:
    """The discrete transport bracket, skew-symmetric in v for fixed m.

    Component 1 is m1*d1x(v1) + m2*d1x(v2) + d1x(m1*v1) + d1y(m1*v2) and
    component 2 is m1*d1y(v1) + m2*d1y(v2) + d1x(m2*v1) + d1y(m2*v2), with *
    the Hadamard product.  Bilinear in (m, v).
    """
    _check_same_grid(m, v)
    grid = m.grid
    c1, c2 = _gamma_arrays(
        m.c1.values, m.c2.values, v.c1.values, v.c2.values, grid.dx, grid.dy
    )
    return FieldPair.from_arrays(grid, c1, c2)


def dvd_scheme1(u_n: FieldPair, u_np1: FieldPair) -> FieldPair:
    """Variational derivative of the pointwise energy: the two-level average."""
    _check_same_grid(u_n, u_np1)
    return 0.5 * (u_n + u_np1)


def dvd_scheme2(u_n: FieldPair) -> FieldPair:
    """Variational derivative of the cross-averaged energy: the middle level."""
    return u_n


def dvd_scheme3(u_nm1: FieldPair, u_np1: FieldPair) -> FieldPair:
    """Variational derivative of the same-time-averaged energy."""
    _check_same_grid(u_nm1, u_np1)
    return 0.5 * (u_nm1 + u_np1)


def semi_discrete_rhs(s: State) -> FieldPair:
    """dM/dt of the spatially discretized system: -gamma_apply(m, u)."""
    return -gamma_apply(s.m, s.u)


def energy_scheme1(s: State) -> float:
    """Pointwise discrete energy sum((m1 u1 + m2 u2)/2) dx dy."""
    return 0.5 * inner(s.m, s.u)


def energy_half_scheme2(s_n: State, s_np1: State) -> float:
    """Cross-averaged half-step energy (new momentum against old velocity
    and vice versa, averaged over the four products)."""
    _check_same_grid(s_n.u, s_np1.u)
    return 0.25 * (
        inner(s_np1.m.c1, s_n.u.c1)
        + inner(s_n.m.c1, s_np1.u.c1)
        + inner(s_np1.m.c2, s_n.u.c2)
        + inner(s_n.m.c2, s_np1.u.c2)
    )


def energy_half_scheme3(s_n: State, s_np1: State) -> float:
    """Same-time products averaged across the two levels."""
    _check_same_grid(s_n.u, s_np1.u)
    return 0.25 * (
        inner(s_np1.m.c1, s_np1.u.c1)
        + inner(s_n.m.c1, s_n.u.c1)
        + inner(s_np1.m.c2, s_np1.u.c2)
        + inner(s_n.m.c2, s_n.u.c2)
    )


def linear_momenta(s: State) -> tuple[float, float]:
    """(sum(u1) dx dy, sum(u2) dx dy)."""
    area = s.grid.cell_area
    return (
        float(np.sum(s.u.c1.values)) * area,
        float(np.sum(s.u.c2.values)) * area,
    )
