"""KZ connection: algebraic covariant derivatives, path integration, projection.

A solution of the first-order system hbar dPhi/dx_i = H_i Phi is realized
numerically by integrating the induced linear ODE along piecewise-linear paths
in coordinate space.  Higher x-derivatives of a solution are never computed by
differencing: repeated substitution of the system into itself turns
(hbar d/dx_i)^k Phi into an operator A_k acting on the instantaneous state,

    A_1 = H_i,
    A_{k+1} = hbar (d/dx_i A_k) + A_k H_i,

which only needs the analytic derivatives of H_i.  The scalar wave function is
the all-ones projection Psi = sum_J Phi_J.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .core import (
    TRIGONOMETRIC,
    ModelParams,
    StateVector,
    WeightVector,
    get_basis,
    min_pairwise_gap,
    omega_pairing,
)
from .errors import (
    IntegrationFailureError,
    InvalidWeightError,
    SingularPathError,
    UnsupportedOrderError,
)
from .operators import TermOperator, gaudin_derivative, gaudin_hamiltonian

__all__ = [
    "KzConnection",
    "PathSpec",
    "kz_rhs",
    "covariant_power",
    "covariant_row",
    "integrate_path",
    "mc_wavefunction",
    "mc_derivatives",
    "flatness_residual",
]


class KzConnection:
    """Cached operator family of one instance: H_i and its x_i-derivatives."""

    def __init__(self, params: ModelParams, weight: WeightVector):
        weight.validate_for(params.n)
        if weight.N != params.N:
            raise InvalidWeightError(
                f"weight has {weight.N} species but params.N = {params.N}"
            )
        self.params = params
        self.weight = weight
        self.basis = get_basis(weight)
        self._h: dict[int, TermOperator] = {}
        self._dh: dict[tuple[int, int, int], TermOperator] = {}

    def hamiltonian(self, i: int) -> TermOperator:
        op = self._h.get(i)
        if op is None:
            op = gaudin_hamiltonian(i, self.params, self.weight)
            self._h[i] = op
        return op

    def derivative(self, i: int, j: int | None = None, order: int = 1) -> TermOperator:
        """d^order H_i / dx_j^order; j defaults to i."""
        j = i if j is None else j
        key = (i, j, order)
        op = self._dh.get(key)
        if op is None:
            op = gaudin_derivative(i, j, order, self.params, self.weight)
            self._dh[key] = op
        return op


def kz_rhs(i: int, state: StateVector, conn: KzConnection) -> StateVector:
    """(1/hbar) H_i Phi, the right-hand side of dPhi/dx_i."""
    out = conn.hamiltonian(i).apply(state)
    return StateVector(state.weight, out.amplitudes / conn.params.hbar)


def covariant_power(i: int, k: int, state: StateVector, conn: KzConnection) -> StateVector:
    """What (hbar d/dx_i)^k Phi equals for a KZ solution with value `state`."""
    if k not in (1, 2, 3):
        raise UnsupportedOrderError(f"covariant power must be 1..3, got {k}")
    hbar = conn.params.hbar
    H = conn.hamiltonian(i)
    v = state.amplitudes
    u1 = H.matvec(v)
    if k == 1:
        return StateVector(state.weight, u1)
    dH = conn.derivative(i, order=1)
    w = dH.matvec(v)
    u2 = hbar * w + H.matvec(u1)
    if k == 2:
        return StateVector(state.weight, u2)
    d2H = conn.derivative(i, order=2)
    u3 = (
        hbar**2 * d2H.matvec(v)
        + 2.0 * hbar * dH.matvec(u1)
        + hbar * H.matvec(w)
        + H.matvec(H.matvec(u1))
    )
    return StateVector(state.weight, u3)


def covariant_row(i: int, k: int, conn: KzConnection) -> np.ndarray:
    """The all-ones covector slid through A_k: the row omega^T A_k^(i)."""
    if k not in (1, 2, 3):
        raise UnsupportedOrderError(f"covariant power must be 1..3, got {k}")
    hbar = conn.params.hbar
    H = conn.hamiltonian(i)
    omega = np.ones(conn.basis.dim)
    r1 = H.rmatvec(omega)
    if k == 1:
        return r1
    dH = conn.derivative(i, order=1)
    if k == 2:
        return hbar * dH.rmatvec(omega) + H.rmatvec(r1)
    d2H = conn.derivative(i, order=2)
    return (
        hbar**2 * d2H.rmatvec(omega)
        + 2.0 * hbar * H.rmatvec(dH.rmatvec(omega))
        + hbar * dH.rmatvec(r1)
        + H.rmatvec(H.rmatvec(r1))
    )


@dataclass(frozen=True)
class PathSpec:
    """Piecewise-linear path through coordinate snapshots."""

    start: tuple[float, ...]
    waypoints: tuple[tuple[float, ...], ...]
    tolerance: float = 1e-10
    atol: float = 1e-12
    max_step: float = np.inf

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(
            self, "waypoints", tuple(tuple(float(v) for v in w) for w in self.waypoints)
        )
        if self.tolerance <= 0 or self.atol <= 0:
            raise SingularPathError("path tolerances must be positive")
        for w in self.waypoints:
            if len(w) != len(self.start):
                raise SingularPathError("waypoint length differs from start")

    def snapshots(self) -> list[np.ndarray]:
        return [np.asarray(self.start)] + [np.asarray(w) for w in self.waypoints]


def _check_segment(a: np.ndarray, b: np.ndarray, eps: float) -> None:
    """Reject segments whose linear interpolation touches x_i = x_j."""
    for i in range(a.size):
        for j in range(i + 1, a.size):
            d0 = a[i] - a[j]
            d1 = b[i] - b[j]
            if d0 * d1 <= 0.0 or min(abs(d0), abs(d1)) <= eps:
                raise SingularPathError(
                    f"segment brings x_{i + 1} and x_{j + 1} within {eps:g} "
                    "of collision"
                )


def _segment_rhs(conn: KzConnection, a: np.ndarray, b: np.ndarray):
    """ODE right-hand side along x(t) = (1-t) a + t b, t in [0, 1]."""
    params = conn.params
    basis = conn.basis
    vel = b - a
    g = np.asarray(params.g)
    diag = np.zeros(basis.dim)
    for i0 in range(basis.n):
        if vel[i0] != 0.0:
            diag = diag + vel[i0] * g[basis.letters(i0) - 1]
    pairs = []
    for i0 in range(basis.n):
        for j0 in range(i0 + 1, basis.n):
            dvel = vel[i0] - vel[j0]
            if dvel != 0.0:
                perm, sign = basis.swap_table(i0, j0)
                pairs.append((i0, j0, dvel, perm, sign))
    kappa, gamma, hbar = params.kappa, params.gamma, params.hbar
    trig = params.kind == TRIGONOMETRIC

    def rhs(t, y):
        x = a + t * vel
        out = diag * y
        for i0, j0, dvel, perm, sign in pairs:
            dx = x[i0] - x[j0]
            if trig:
                coeff = kappa * gamma * dvel / np.tanh(gamma * dx)
                out = out + coeff * y[perm] + (kappa * gamma * dvel) * (sign * y[perm])
            else:
                out = out + (kappa * dvel / dx) * y[perm]
        return out / hbar

    return rhs


def integrate_path(initial: StateVector, path: PathSpec, conn: KzConnection) -> StateVector:
    """Propagate a state along the path; returns the value at the endpoint.

    The result is deterministic for fixed inputs.  Segments of zero length are
    skipped exactly, so a trivial path returns the initial amplitudes bitwise.
    """
    if initial.weight != conn.weight:
        raise InvalidWeightError("initial state is not in the connection's subspace")
    snaps = path.snapshots()
    eps = conn.params.epsilon_x
    if len(snaps[0]) != conn.params.n:
        raise SingularPathError("path dimension differs from the number of sites")
    for s in snaps:
        if min_pairwise_gap(s) <= eps:
            raise SingularPathError("a path snapshot has coincident coordinates")
    y = initial.amplitudes.copy()
    for a, b in zip(snaps[:-1], snaps[1:]):
        if np.array_equal(a, b):
            continue
        _check_segment(a, b, eps)
        sol = solve_ivp(
            _segment_rhs(conn, a, b),
            (0.0, 1.0),
            y,
            method="DOP853",
            rtol=path.tolerance,
            atol=path.atol,
            max_step=path.max_step,
        )
        if not sol.success:
            raise IntegrationFailureError(
                f"integration failed on segment {a} -> {b}: {sol.message}"
            )
        y = sol.y[:, -1]
    return StateVector(initial.weight, y)


def mc_wavefunction(state: StateVector) -> complex:
    """The scalar wave function: the plain sum of the amplitudes."""
    return omega_pairing(state)


def mc_derivatives(state: StateVector, conn: KzConnection, max_order: int = 3) -> np.ndarray:
    """d^k Psi / dx_i^k for k = 1..max_order, treating `state` as a solution value.

    Returns an array of shape (max_order, n); entry [k-1, i-1] is the k-th
    derivative along x_i, computed as omega^T A_k Phi / hbar^k.
    """
    if not 1 <= max_order <= 3:
        raise UnsupportedOrderError(f"max_order must be 1..3, got {max_order}")
    n = conn.params.n
    hbar = conn.params.hbar
    out = np.empty((max_order, n), dtype=np.complex128)
    for i in range(1, n + 1):
        for k in range(1, max_order + 1):
            dk = covariant_power(i, k, state, conn)
            out[k - 1, i - 1] = omega_pairing(dk) / hbar**k
    return out


def flatness_residual(
    params: ModelParams, weight: WeightVector, rng: np.random.Generator
) -> float:
    """Max curvature action over site pairs on a random unit state.

    The curvature of the connection hbar d_i - H_i in directions (i, j) is
    hbar (d_j H_i - d_i H_j) + [H_i, H_j]; it vanishes identically for both
    kernel kinds.
    """
    conn = KzConnection(params, weight)
    v = StateVector.random(weight, rng).amplitudes
    worst = 0.0
    hbar = params.hbar
    for i in range(1, params.n + 1):
        Hi = conn.hamiltonian(i)
        for j in range(i + 1, params.n + 1):
            Hj = conn.hamiltonian(j)
            dji = conn.derivative(i, j).matvec(v)
            dij = conn.derivative(j, i).matvec(v)
            comm = Hi.matvec(Hj.matvec(v)) - Hj.matvec(Hi.matvec(v))
            res = np.linalg.norm(hbar * (dji - dij) + comm)
            worst = max(worst, float(res))
    return worst
