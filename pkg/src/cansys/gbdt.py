"""Darboux dressing engine for non-isospectral canonical systems.

A dressing is parameterised by an order n, a pole matrix B whose
spectrum avoids the interval, an n x m matrix Pi(xi) and a Hermitian
n x n matrix S(xi) tied together by the displacement identity

    A(xi) S(xi) - S(xi) A(xi)* = i Pi(xi) J Pi(xi)*,
    A(x) = (B - x I)^{-1}.

Along the interval the triple evolves by

    Pi_x = -i A Pi J H,      S_x = Pi J H J Pi* - (A S + S A*),

which propagates the identity to every x.  At points where S(x) is
invertible the transfer matrix

    w_A(x, z) = I - i J Pi(x)* S(x)^{-1} (A(x) - (z-x)^{-1} I)^{-1} Pi(x)

and its z -> infinity limit w0(x) produce the dressed system: the
Hamiltonian transforms by the congruence H~ = w0* H w0 and the dressed
fundamental solution is W~(x, z) = v(x, z) W(x, z) v(xi, z)^{-1} with
v = w0^{-1} w_A.  A(x) is never integrated; the closed-form resolvent is
used everywhere, and S^{-1} is never formed (linear solves only).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    SINGULAR_COND,
    SingularMatrixError,
    ascomplex,
    cond2,
    fro,
    hermitian_part,
    spec_norm,
)
from .system import (
    BoundaryValueReport,
    FundamentalSolution,
    HamiltonianSpec,
    extrapolate_eta_sequence,
    fundamental_solution,
    integrate_matrix_ode,
    limit_samples,
)

#: Default local error target for trajectory evolution.
ODE_TOL = 1e-9

#: Spectrum of B must keep this fraction of the interval length away from it.
SPECTRUM_MARGIN = 1e-3


def _segment_distance(z, interval):
    a, b = interval
    re = min(max(z.real, a), b)
    return abs(z - re)


@dataclass
class GbdtParams:
    """Dressing parameter triple (B, S(xi), Pi(xi)) anchored at xi."""

    B: np.ndarray
    S0: np.ndarray
    Pi0: np.ndarray
    xi: float = 0.0

    def __post_init__(self):
        self.B = ascomplex(self.B, "B", square=True)
        self.S0 = ascomplex(self.S0, "S0", square=True)
        self.Pi0 = ascomplex(self.Pi0, "Pi0")
        n = self.B.shape[0]
        if self.S0.shape != (n, n) or self.Pi0.shape[0] != n:
            raise ValueError("B, S0, Pi0 must share the order n")
        self.xi = float(self.xi)

    @property
    def n(self):
        return self.B.shape[0]

    @property
    def m(self):
        return self.Pi0.shape[1]

    def a_at(self, x):
        """Generalised spectral parameter A(x) = (B - x I)^{-1}."""
        return np.linalg.inv(self.B - x * np.eye(self.n))

    def identity_residual(self, J):
        a0 = self.a_at(self.xi)
        lhs = a0 @ self.S0 - self.S0 @ a0.conj().T
        return fro(lhs - 1j * self.Pi0 @ J @ self.Pi0.conj().T)


@dataclass
class ParamsReport:
    violations: list
    identity_residual: float
    s0_defect: float
    spectrum_gap: float

    @property
    def ok(self):
        return not self.violations


def validate_params(params, sys, margin=None):
    """Check the displacement identity, Hermitian S0 and pole separation."""
    a, b = sys.interval
    if margin is None:
        margin = SPECTRUM_MARGIN * (b - a)
    violations = []
    s0_defect = fro(params.S0 - params.S0.conj().T)
    if s0_defect > 1e-12:
        violations.append(f"S0 not Hermitian (defect {s0_defect:.2e})")
    if params.m != sys.m:
        violations.append(f"Pi0 has {params.m} columns, system size is {sys.m}")
    gap = min(_segment_distance(lam, sys.interval) for lam in np.linalg.eigvals(params.B))
    if gap < margin:
        violations.append(
            f"spectrum of B within {gap:.2e} of [{a}, {b}] (margin {margin:.2e})"
        )
    residual = params.identity_residual(sys.J)
    if residual > 1e-10:
        violations.append(f"displacement identity violated (residual {residual:.2e})")
    if not a <= params.xi <= b:
        violations.append(f"xi = {params.xi} outside [{a}, {b}]")
    return ParamsReport(
        violations=violations,
        identity_residual=residual,
        s0_defect=s0_defect,
        spectrum_gap=gap,
    )


@dataclass
class GbdtTrajectory:
    """Evolved dressing data sampled on a grid, plus a dense evaluator.

    ``a``, ``s``, ``pi``, ``k``, ``q`` hold A(x), S(x), Pi(x), K(x) and
    Q(x) = K S K* at the grid points; K solves K_x = K A, K(xi) = I, so
    Q is nondecreasing whenever the data is consistent.  A completed
    trajectory is immutable and safe for concurrent queries.
    """

    params: GbdtParams
    system: object
    grid: np.ndarray
    a: np.ndarray
    s: np.ndarray
    pi: np.ndarray
    k: np.ndarray
    q: np.ndarray
    identity_residual: float
    min_eig_s: float
    ode_tol: float
    s_scale: float = 1.0
    _dense: object = field(default=None, repr=False)

    @property
    def n(self):
        return self.params.n

    @property
    def m(self):
        return self.params.m

    def state_at(self, x):
        """(Pi(x), S(x), K(x)) via the integrator's dense output."""
        n, m = self.n, self.m
        flat = self._dense(x)
        pi = flat[: n * m].reshape(n, m)
        s = flat[n * m : n * m + n * n].reshape(n, n)
        k = flat[n * m + n * n :].reshape(n, n)
        return pi, s, k

    def pi_at(self, x):
        return self.state_at(x)[0]

    def s_at(self, x):
        return self.state_at(x)[1]

    def k_at(self, x):
        return self.state_at(x)[2]

    def a_at(self, x):
        return self.params.a_at(x)


def evolve(params, sys, grid=None, tol=ODE_TOL):
    """Evolve (Pi, S, K) jointly with one adaptive controller.

    A(x) comes from the closed-form resolvent; the joint state keeps the
    displacement-identity residual coherent with the integration error.
    Raises :class:`~cansys.linalg.SingularMatrixError` if S(x) passes the
    singularity threshold anywhere on the grid.
    """
    report = validate_params(params, sys)
    if not report.ok:
        raise ValueError("invalid dressing parameters: " + "; ".join(report.violations))
    a_lo, b_hi = sys.interval
    if grid is None:
        grid = np.linspace(a_lo, b_hi, 201)
    grid = np.asarray(grid, dtype=float)
    n, m = params.n, params.m
    J = sys.J
    spec = sys.hamiltonian
    B = params.B
    eye_n = np.eye(n)

    def rhs(x, y):
        pi = y[: n * m].reshape(n, m)
        s = y[n * m : n * m + n * n].reshape(n, n)
        k = y[n * m + n * n :].reshape(n, n)
        bx = B - x * eye_n
        h = spec.hamiltonian(x)
        a_pi = np.linalg.solve(bx, pi)
        d_pi = -1j * a_pi @ (J @ h)
        pj = pi @ J
        a_s = np.linalg.solve(bx, s)
        s_a_star = np.linalg.solve(bx, s.conj().T).conj().T
        d_s = pj @ h @ pj.conj().T - (a_s + s_a_star)
        d_k = np.linalg.solve(bx.T, k.T).T
        return np.concatenate([d_pi.ravel(), d_s.ravel(), d_k.ravel()])

    y0 = np.concatenate(
        [params.Pi0.ravel(), params.S0.ravel(), eye_n.astype(complex).ravel()]
    )
    # the residual contract is absolute while rtol is relative; drive the
    # controller two digits below tol so state growth cannot breach 10*tol
    flat, dense, _ = integrate_matrix_ode(
        rhs, params.xi, y0, grid,
        max(tol * 1e-2, 3e-14), max(tol * 1e-3, 1e-16),
    )

    pi = flat[:, : n * m].reshape(-1, n, m)
    s = flat[:, n * m : n * m + n * n].reshape(-1, n, n)
    k = flat[:, n * m + n * n :].reshape(-1, n, n)
    a = np.stack([params.a_at(x) for x in grid])
    q = np.einsum("jab,jbc,jdc->jad", k, s, k.conj())

    # condition of solving against S, relative to the trajectory's own
    # S scale (a plain condition number misses 1x1 zero crossings)
    s_scale = max(float(np.max(np.linalg.norm(s, ord=2, axis=(1, 2)))), 1e-300)
    residual = 0.0
    min_eig = np.inf
    for j, x in enumerate(grid):
        cond = max(cond2(s[j]), s_scale / min(np.linalg.svd(s[j], compute_uv=False)))
        if not np.isfinite(cond) or cond > SINGULAR_COND:
            raise SingularMatrixError(
                "S(x) singular along the trajectory", cond_estimate=cond, location=x
            )
        lhs = a[j] @ s[j] - s[j] @ a[j].conj().T
        residual = max(residual, fro(lhs - 1j * pi[j] @ J @ pi[j].conj().T))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(hermitian_part(s[j]))[0]))

    return GbdtTrajectory(
        params=params,
        system=sys,
        grid=grid,
        a=a,
        s=s,
        pi=pi,
        k=k,
        q=q,
        identity_residual=residual,
        min_eig_s=min_eig,
        ode_tol=tol,
        s_scale=s_scale,
        _dense=dense,
    )


@dataclass
class PositivityReport:
    """S(xi) > 0 propagation diagnostics along the trajectory.

    ``q_step_defect`` is the worst negative eigenvalue of a Q increment
    (Q must be nondecreasing); ``inverse_bound_defect`` the worst
    violation of S(x)^{-1} <= K(x)* S(xi)^{-1} K(x), the inverse of the
    lower bound S(x) >= K(x)^{-1} S(xi) K(x)^{-*}.
    """

    min_eig_s: float
    q_step_defect: float
    inverse_bound_defect: float
    tol: float

    @property
    def ok(self):
        return (
            self.min_eig_s > 0
            and self.q_step_defect <= 10 * self.tol
            and self.inverse_bound_defect <= 10 * self.tol
        )


def positivity_report(traj, tol=None):
    """Verify positivity transport: S stays positive, Q monotone, and the
    inverse bound S^{-1} <= K* S0^{-1} K holds within 10 * tol."""
    if tol is None:
        tol = traj.ode_tol
    s0 = hermitian_part(traj.params.S0)
    if float(np.linalg.eigvalsh(s0)[0]) <= 0:
        raise ValueError("positivity report requires S(xi) > 0")
    q_defect = 0.0
    for dq in np.diff(traj.q, axis=0):
        q_defect = max(q_defect, -float(np.linalg.eigvalsh(hermitian_part(dq))[0]))
    inv_defect = 0.0
    for j in range(traj.grid.size):
        k = traj.k[j]
        bound = k.conj().T @ np.linalg.solve(s0, k)
        s_inv = np.linalg.inv(hermitian_part(traj.s[j]))
        gap = hermitian_part(bound - s_inv)
        scale = max(1.0, spec_norm(bound))
        inv_defect = max(inv_defect, -float(np.linalg.eigvalsh(gap)[0]) / scale)
    return PositivityReport(
        min_eig_s=traj.min_eig_s,
        q_step_defect=q_defect,
        inverse_bound_defect=inv_defect,
        tol=tol,
    )


@dataclass
class TransferEval:
    """Transfer-matrix data at one point (x, z).

    ``j_defect`` measures the J-relation w_A(x, conj(z))* J w_A(x, z) = J;
    ``w0_inv`` comes from the exact formula
    w0^{-1} = I + i J Pi* (B* - x)^{-1 adj} S^{-1} Pi rather than from a
    numerical inverse, and ``w0_inv_residual`` records how well the pair
    multiplies to the identity.
    """

    x: float
    z: complex
    w_a: np.ndarray
    w0: np.ndarray
    w0_inv: np.ndarray
    v: np.ndarray
    j_defect: float
    w0_inv_residual: float


def _w0_pair(pi, s, bx, J, m):
    """w0 and its closed-form inverse from state (Pi, S) at one point."""
    j_pi = J @ pi.conj().T
    w0 = np.eye(m) - 1j * j_pi @ np.linalg.solve(s, bx @ pi)
    w0_inv = np.eye(m) + 1j * j_pi @ bx.conj().T @ np.linalg.solve(s, pi)
    return w0, w0_inv


def w0_at(traj, x):
    """Dressing factor w0(x) = I - i J Pi* S^{-1} (B - x) Pi."""
    pi, s, _ = traj.state_at(x)
    bx = traj.params.B - x * np.eye(traj.n)
    return _w0_pair(pi, s, bx, traj.system.J, traj.m)[0]


def transfer(traj, x, z):
    """Evaluate w_A, w0, v = w0^{-1} w_A at (x, z).

    z (and conj(z)) must avoid the spectrum of B; x may sit anywhere in
    the trajectory's range (dense interpolation between grid samples).
    """
    z = complex(z)
    eigs = np.linalg.eigvals(traj.params.B)
    if min(np.abs(eigs - z).min(), np.abs(eigs - np.conj(z)).min()) < 1e-10:
        raise ValueError(f"z = {z} meets the spectrum of B")
    n, m = traj.n, traj.m
    J = traj.system.J
    B = traj.params.B
    pi, s, _ = traj.state_at(x)
    cond = max(
        cond2(s), traj.s_scale / min(np.linalg.svd(s, compute_uv=False))
    )
    if not np.isfinite(cond) or cond > SINGULAR_COND:
        raise SingularMatrixError("S(x) singular", cond_estimate=cond, location=x)
    bx = B - x * np.eye(n)
    j_pi = J @ pi.conj().T

    def w_a_for(zz):
        resolvent = (x - zz) * bx @ np.linalg.solve(B - zz * np.eye(n), pi)
        return np.eye(m) - 1j * j_pi @ np.linalg.solve(s, resolvent)

    w_a = w_a_for(z)
    w0, w0_inv = _w0_pair(pi, s, bx, J, m)
    v = w0_inv @ w_a
    j_defect = fro(w_a_for(np.conj(z)).conj().T @ J @ w_a - J)
    return TransferEval(
        x=float(x),
        z=z,
        w_a=w_a,
        w0=w0,
        w0_inv=w0_inv,
        v=v,
        j_defect=j_defect,
        w0_inv_residual=fro(w0 @ w0_inv - np.eye(m)),
    )


def transformed_hamiltonian(traj):
    """Dressed Hamiltonian H~ = w0* H w0 on the trajectory grid.

    For factored input the dressed factor beta~ = beta w0 is emitted
    (grid samples plus an exact callable along the trajectory); otherwise
    an H-grid with an exact callable is returned.
    """
    sys = traj.system
    spec = sys.hamiltonian
    grid = traj.grid
    w0s = np.stack([w0_at(traj, x) for x in grid])
    if spec.is_factored:
        beta_t = np.stack([spec.beta_at(x) @ w0s[j] for j, x in enumerate(grid)])
        return HamiltonianSpec.from_beta_grid(
            grid, beta_t, beta_fn=lambda x: spec.beta_at(x) @ w0_at(traj, x)
        )
    h_t = np.stack(
        [
            hermitian_part(w0s[j].conj().T @ spec.hamiltonian(x) @ w0s[j])
            for j, x in enumerate(grid)
        ]
    )

    def dressed_h(x):
        w0 = w0_at(traj, x)
        return w0.conj().T @ spec.hamiltonian(x) @ w0

    out = HamiltonianSpec.from_grid(grid, h_t)
    out.h_fn = dressed_h
    return out


def transformed_fundamental(traj, z, grid=None, tol=1e-10):
    """Dressed fundamental solution W~(x, z) = v(x, z) W(x, z) v(xi, z)^{-1}."""
    sys = traj.system
    if grid is None:
        grid = traj.grid
    base = fundamental_solution(sys, z, grid=grid, tol=tol)
    v_xi_inv = np.linalg.inv(transfer(traj, sys.xi, z).v)
    values = np.stack(
        [
            transfer(traj, x, z).v @ base.values[j] @ v_xi_inv
            for j, x in enumerate(base.grid)
        ]
    )
    return FundamentalSolution(
        z=base.z,
        grid=base.grid,
        values=values,
        method=base.method,
        error_estimate=base.error_estimate,
        J=sys.J,
        xi=sys.xi,
        interpolant=lambda x: transfer(traj, x, complex(z)).v @ base.at(x) @ v_xi_inv,
    )


def g0_eval(traj, x):
    """Logarithmic derivative generator of w0: d/dx w0 = G0 w0 with

        G0 = -J (i Pi* S^{-1} Pi - H J Pi* S^{-1} Pi + Pi* S^{-1} Pi J H).
    """
    sys = traj.system
    pi, s, _ = traj.state_at(x)
    J = sys.J
    h = sys.hamiltonian.hamiltonian(x)
    core = pi.conj().T @ np.linalg.solve(s, pi)
    return -J @ (1j * core - h @ J @ core + core @ J @ h)


def w0_lipschitz_bound(traj):
    """Grid supremum of |G0(x) w0(x)|, a Lipschitz constant for w0."""
    return max(
        spec_norm(g0_eval(traj, x) @ w0_at(traj, x)) for x in traj.grid
    )


def transformed_boundary_values(traj, x, s, eta0=1e-2, levels=6, tol=1e-10,
                                margin=None):
    """Cut limits of the dressed solution via the multiplier identity.

    Primary route: W~(x, s +/- i0) = v(x, s) W+-(x, s) v(xi, s)^{-1},
    built from the base-system extrapolants; the same eta ladder is also
    extrapolated directly on W~ and the discrepancy is reported as
    ``cross_check_error``.
    """
    from .system import boundary_values

    sys = traj.system
    eigs = np.linalg.eigvals(traj.params.B)
    a_int, b_int = sys.interval
    spectrum_margin = SPECTRUM_MARGIN * (b_int - a_int)
    if np.abs(eigs - s).min() < spectrum_margin:
        raise ValueError(f"s = {s} within the spectrum margin of sigma(B)")
    base = boundary_values(sys, x, s, eta0=eta0, levels=levels, tol=tol, margin=margin)
    v_xs = transfer(traj, x, s).v
    v_xi_inv = np.linalg.inv(transfer(traj, sys.xi, s).v)
    w_plus = v_xs @ base.w_plus @ v_xi_inv
    w_minus = v_xs @ base.w_minus @ v_xi_inv

    etas = base.eta_sequence
    plus, minus = limit_samples(sys, x, s, etas, tol)

    def dressed_limit(samples, sign):
        dressed = np.stack(
            [
                transfer(traj, x, s + sign * 1j * e).v
                @ samples[j]
                @ np.linalg.inv(transfer(traj, sys.xi, s + sign * 1j * e).v)
                for j, e in enumerate(etas)
            ]
        )
        return extrapolate_eta_sequence(etas, dressed)[0]

    cross = max(
        fro(w_plus - dressed_limit(plus, +1.0)),
        fro(w_minus - dressed_limit(minus, -1.0)),
    )

    return BoundaryValueReport(
        x=float(x),
        s=float(s),
        w_plus=w_plus,
        w_minus=w_minus,
        v=w_plus - w_minus,
        jump=np.linalg.solve(w_minus, w_plus),
        eta_sequence=etas,
        extrapolation_error=base.extrapolation_error
        * max(spec_norm(v_xs) * spec_norm(v_xi_inv), 1.0),
        divergent=base.divergent,
        cross_check_error=cross,
    )


def sample_params(seed, sys, n, positive=True, target_margin=None, max_tries=200):
    """Draw a random valid parameter triple for the system.

    The identity is satisfied by construction: pick Hermitian S0 (positive
    definite when ``positive``), a random Pi0, set M = i Pi0 J Pi0* and
    A(xi) = (M/2 + tau H) S0^{-1} with a small Hermitian tilt H, then read
    off B = xi I + A(xi)^{-1}.  Draws whose pole spectrum comes closer to
    the interval than ``target_margin`` are rejected and retried.
    """
    rng = np.random.default_rng(seed)
    a, b = sys.interval
    m = sys.m
    if target_margin is None:
        target_margin = 0.1 * (b - a)

    def crandn(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    for _ in range(max_tries):
        pi0 = crandn(n, m)
        if positive:
            g = crandn(n, n) / np.sqrt(n)
            s0 = g @ g.conj().T + 0.5 * np.eye(n)
        else:
            g = crandn(n, n)
            s0 = g + g.conj().T
            if cond2(s0) > 1e6:
                continue
        s0 = hermitian_part(s0) / spec_norm(s0)
        pi0 *= 0.7 / max(spec_norm(pi0), 1e-12)
        mskew = 1j * pi0 @ sys.J @ pi0.conj().T
        tilt = hermitian_part(crandn(n, n))
        tilt *= 0.5 / max(spec_norm(tilt), 1e-12)
        a0 = (0.5 * mskew + tilt) @ np.linalg.inv(s0)
        if not np.isfinite(cond2(a0)) or cond2(a0) > 1e8:
            continue
        # rescale (A, Pi) jointly so |A(xi)| ~ 1 keeps residuals and the
        # trajectory growth well-scaled; the identity is covariant under
        # (A, Pi) -> (c A, sqrt(c) Pi)
        scale = 1.0 / spec_norm(a0)
        a0 *= scale
        pi0 *= np.sqrt(scale)
        bmat = sys.xi * np.eye(n) + np.linalg.inv(a0)
        gap = min(_segment_distance(lam, sys.interval) for lam in np.linalg.eigvals(bmat))
        if gap < target_margin:
            continue
        params = GbdtParams(B=bmat, S0=s0, Pi0=pi0, xi=sys.xi)
        if params.identity_residual(sys.J) < 1e-10:
            return params
    raise RuntimeError(f"no valid parameter draw after {max_tries} tries")
