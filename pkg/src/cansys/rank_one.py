"""Closed forms for the constant rank-one seed scenario.

The scenario lives on ``[0, b]`` with base point 0, signature matrix
``J = [[0, 1], [1, 0]]`` and the constant Hamiltonian ``H = beta* beta``
built from the single row ``beta = [1, i]``.  The degeneracy
``beta J beta* = 0`` makes everything solvable in closed form with
logarithmic ingredients:

* the fundamental solution is ``W(x, z) = I + L(x, z) N`` with
  ``L = ln(z / (z - x))`` and a nilpotent ``N``,
* the dressing triple for a diagonal pole matrix ``B = diag(b_1..b_n)``
  reduces to two parameter vectors ``g, h`` and logs ``ln(b_i - x)``,
* boundary values on the cut jump by the constant factor
  ``R^2 = I + 2 pi J beta* beta``.

These formulas are the independent oracles for the generic machinery in
:mod:`cansys.system`, :mod:`cansys.gbdt` and :mod:`cansys.triangular`,
and they power the bundled demo scenario.

Branch convention: every logarithm is continued continuously in ``x``
starting from its principal value at ``x = 0``.  All admissible
arguments (``z`` off ``[0, b]``, poles ``b_i`` off ``[0, b]``) move the
log argument along a horizontal segment that never crosses the
principal cut transversally, so ``numpy.log`` already realises the
continuous branch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SingularMatrixError, ascomplex, fro, solve

#: The constant 1x2 factor of the rank-one Hamiltonian.
BETA = np.array([[1.0, 1j]])

#: Signature matrix of the scenario.
J = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)

#: Stacked frame T = [beta; beta J]; satisfies T J T* = 2 J.
T = np.array([[1.0, 1j], [1j, 1.0]])
T_INV = 0.5 * np.array([[1.0, -1j], [-1j, 1.0]])

#: Nilpotent direction of the fundamental solution: W = I + L*N, N^2 = 0.
_NILPOTENT = np.array([[1.0, 1j], [1j, -1.0]])


class BranchCutError(ValueError):
    """Evaluation point sits on (or crosses) the logarithmic cut."""


def hamiltonian():
    """The constant Hamiltonian beta* beta (rank one, PSD)."""
    return BETA.conj().T @ BETA


def make_system(b=1.0):
    """Canonical system of the scenario on ``[0, b]`` with base point 0."""
    from .system import CanonicalSystem, HamiltonianSpec

    if b <= 0:
        raise ValueError("right endpoint must be positive")
    spec = HamiltonianSpec.from_constant_beta(BETA, (0.0, b))
    return CanonicalSystem(J=J, interval=(0.0, b), hamiltonian=spec, xi=0.0)


def _check_off_cut(z, b):
    z = complex(z)
    if abs(z.imag) < 1e-13 and -1e-13 <= z.real <= b + 1e-13:
        raise BranchCutError(f"z = {z} lies on the cut [0, {b}]")
    return z


def log_ratio(x, z):
    """ln(z / (z - x)) on the branch that vanishes at x = 0."""
    z = complex(z)
    return np.log(z) - np.log(z - x)


def fundamental_matrix(x, z, b=1.0):
    """Closed-form fundamental solution W(x, z) of the scenario.

    Equals ``I + L N`` with ``L = ln(z/(z-x))``; W(0, z) = I and
    det W = 1 identically.
    """
    z = _check_off_cut(z, b)
    if not (-1e-13 <= x <= b + 1e-13):
        raise ValueError(f"x = {x} outside [0, {b}]")
    return np.eye(2) + log_ratio(x, z) * _NILPOTENT


def jump_factor():
    """The constant jump factor R = I + pi J beta* beta."""
    return np.eye(2) + np.pi * J @ hamiltonian()


def jump_matrix(s=None, x=None):
    """The boundary-value jump R^2 = I + 2 pi J beta* beta.

    ``W_plus(x, s) = W_minus(x, s) R^2`` for every interior cut point
    ``0 < s < x``; the square collapses because ``J beta* beta`` is
    nilpotent.  When ``s`` and ``x`` are given they are validated.
    """
    if s is not None:
        if x is None:
            raise ValueError("x required when validating s")
        if not (0.0 < s < x):
            raise ValueError(f"s = {s} outside the cut interior (0, {x})")
    return np.eye(2) + 2.0 * np.pi * J @ hamiltonian()


@dataclass
class DiagonalParams:
    """Dressing parameters with diagonal pole matrix B = diag(b_diag).

    ``g`` and ``h`` are the two n-vectors equivalent to the initial
    matrix ``Pi(0)``:

        g = Pi(0) [-i; 1],   h = (1/2) Pi(0) [1; -i] - {i g_i ln b_i}.
    """

    b_diag: np.ndarray
    g: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        self.b_diag = np.atleast_1d(np.asarray(self.b_diag, dtype=complex))
        self.g = np.atleast_1d(np.asarray(self.g, dtype=complex))
        self.h = np.atleast_1d(np.asarray(self.h, dtype=complex))
        if not (self.b_diag.shape == self.g.shape == self.h.shape):
            raise ValueError("b_diag, g, h must share one length")

    @property
    def n(self):
        return self.b_diag.size

    @classmethod
    def from_pi0(cls, b_diag, pi0):
        """Recover (g, h) from an explicit initial matrix Pi(0)."""
        b_diag = np.atleast_1d(np.asarray(b_diag, dtype=complex))
        pi0 = ascomplex(pi0, "pi0")
        if pi0.shape != (b_diag.size, 2):
            raise ValueError(f"pi0 must be {b_diag.size}x2, got {pi0.shape}")
        g = pi0 @ np.array([-1j, 1.0])
        h = 0.5 * pi0 @ np.array([1.0, -1j]) - 1j * g * np.log(b_diag)
        return cls(b_diag=b_diag, g=g, h=h)

    def validate_poles(self, b=1.0):
        """Poles must avoid [0, b]; the closed-form S needs b_i != conj(b_j)."""
        for bi in self.b_diag:
            if abs(bi.imag) < 1e-12 and -1e-12 <= bi.real <= b + 1e-12:
                raise ValueError(f"pole {bi} meets the interval [0, {b}]")

    def to_gbdt_params(self, xi=0.0):
        """Engine-ready parameter triple with S(xi) from the closed form."""
        from .gbdt import GbdtParams

        return GbdtParams(
            B=np.diag(self.b_diag), S0=self.s_at(xi), Pi0=self.pi_at(xi), xi=xi
        )

    def _phi(self, x):
        # {i g_i ln(b_i - x)} + h, the log-linear core of Pi.
        return 1j * self.g * np.log(self.b_diag - x) + self.h

    def pi_at(self, x):
        """Parameter matrix Pi(x) = (1/2) [2 phi(x), g] T."""
        return 0.5 * np.column_stack([2.0 * self._phi(x), self.g]) @ T

    def pi0(self):
        return self.pi_at(0.0)

    def pi_j_pi(self, x):
        """Pi J Pi* = phi g* + g phi* (rank <= 2 Hermitian)."""
        p = self._phi(x)[:, None]
        g = self.g[:, None]
        return p @ g.conj().T + g @ p.conj().T

    def s_at(self, x):
        """Closed-form S(x); requires pairwise b_i != conj(b_j).

        Solves the displacement identity A S - S A* = i Pi J Pi* entrywise
        for the diagonal resolvent A = diag(1/(b_i - x)).  Degenerate pole
        pairs b_i = conj(b_j) leave the corresponding entry undetermined;
        use the ODE evolution path in :mod:`cansys.gbdt` for those.
        """
        bi = self.b_diag[:, None]
        bj = self.b_diag[None, :].conj()
        den = bi - bj
        if np.min(np.abs(den)) < 1e-12:
            raise ValueError(
                "degenerate poles b_i = conj(b_j): closed-form S undefined, "
                "evolve S with cansys.gbdt.evolve instead"
            )
        return (bi - x) * (bj - x) / (1j * den) * self.pi_j_pi(x)

    def w0_at(self, x):
        """Dressing factor w0(x) = I - i T^{-1} [g*; 2 phi*] S^{-1} (B - x) Pi."""
        s = self.s_at(x)
        stack = np.vstack([self.g.conj()[None, :], 2.0 * self._phi(x).conj()[None, :]])
        core, _ = solve(s, np.diag(self.b_diag - x) @ self.pi_at(x))
        return np.eye(2) - 1j * T_INV @ stack @ core

    def beta_t_at(self, x):
        """Transformed factor beta w0(x) = beta - i g* S^{-1} (B - x) Pi."""
        s = self.s_at(x)
        core, _ = solve(s, np.diag(self.b_diag - x) @ self.pi_at(x))
        return BETA - 1j * self.g.conj()[None, :] @ core

    def h_t_at(self, x):
        """Transformed Hamiltonian (beta w0)* (beta w0)."""
        bt = self.beta_t_at(x)
        return bt.conj().T @ bt

    def w_a_at(self, x, z, b=1.0):
        """Transfer matrix w_A(x, z) with the diagonal resolvent in closed form."""
        z = _check_off_cut(z, b)
        s = self.s_at(x)
        resolvent = (x - z) * (self.b_diag - x) / (self.b_diag - z)
        core, _ = solve(s, resolvent[:, None] * self.pi_at(x))
        return np.eye(2) - 1j * J @ self.pi_at(x).conj().T @ core

    def v_at(self, x, z, b=1.0):
        """Normalised multiplier v(x, z) = w0(x)^{-1} w_A(x, z)."""
        w0 = self.w0_at(x)
        w0_inv = J @ w0.conj().T @ J
        return w0_inv @ self.w_a_at(x, z, b=b)


@dataclass
class ClosedForms:
    """Bundle of the closed-form dressing data at one point x."""

    pi: np.ndarray
    s: np.ndarray
    w0: np.ndarray
    beta_t: np.ndarray
    h_t: np.ndarray


def closed_forms(params, x):
    """Evaluate Pi, S, w0, beta w0 and the transformed Hamiltonian at x."""
    return ClosedForms(
        pi=params.pi_at(x),
        s=params.s_at(x),
        w0=params.w0_at(x),
        beta_t=params.beta_t_at(x),
        h_t=params.h_t_at(x),
    )


def transformed_fundamental_matrix(params, x, z, b=1.0):
    """Dressed fundamental solution v(x,z) W(x,z) v(0,z)^{-1}, all closed form.

    Its value at ``x = b`` is the characteristic function of the dressed
    triangular model operator.
    """
    v_x = params.v_at(x, z, b=b)
    v_0 = params.v_at(0.0, z, b=b)
    w = fundamental_matrix(x, z, b=b)
    return v_x @ w @ np.linalg.inv(v_0)


@dataclass
class OrderOneForms:
    """Order-one (n = 1) closed forms at a point (x, z)."""

    s: complex
    beta_t: np.ndarray
    w0: np.ndarray
    w_a: np.ndarray
    v: np.ndarray


def order_one_closed_forms(B, g, h, x, z, b=1.0):
    """Fully expanded n = 1 formulas for S, beta w0, w0, w_A and v.

    Requires a non-real pole ``B`` and ``g != 0``.  The invertibility of
    the scalar S(x) is equivalent to ``Im ln(B - x) != Re(h / g)``; a
    violation raises :class:`~cansys.linalg.SingularMatrixError`.  For
    ``h = 0`` the simplified beta-row formula is used and cross-checked
    against the general one.
    """
    B = complex(B)
    g = complex(g)
    h = complex(h)
    if abs(B.imag) < 1e-12:
        raise ValueError("pole B must be non-real for the order-one formulas")
    if g == 0:
        raise ValueError("g must be nonzero")
    z = _check_off_cut(z, b)

    ln = np.log(B - x)
    ln_delta = ln - np.conj(ln)  # 2i Im ln(B - x)
    denom_core = abs(g) ** 2 * ln_delta - 1j * h * np.conj(g) - 1j * g * np.conj(h)
    if abs(ln.imag - (h / g).real) < 1e-12:
        raise SingularMatrixError(
            "S(x) = 0: invertibility condition Im ln(B-x) != Re(h/g) fails",
            location=x,
        )

    s = denom_core * (B - x) * (np.conj(B) - x) / (B - np.conj(B))

    row = np.array([[2.0 * (1j * g * ln + h), g]]) @ T
    col = T_INV @ np.array([[np.conj(g)], [2.0 * np.conj(1j * g * ln + h)]])

    c_beta = 1j * np.conj(g) * (B - np.conj(B)) / (2.0 * (np.conj(B) - x) * denom_core)
    beta_t = BETA - c_beta * row
    if h == 0:
        simplified = BETA - (B - np.conj(B)) / (
            4.0 * (np.conj(B) - x) * ln.imag
        ) * np.array([[2j * ln, 1.0]]) @ T
        assert fro(simplified - beta_t) < 1e-10
        beta_t = simplified

    c_w0 = 1j * (B - np.conj(B)) / (2.0 * (np.conj(B) - x) * denom_core)
    w0 = np.eye(2) - c_w0 * col @ row

    c_wa = c_w0 * (x - z) / (B - z)
    w_a = np.eye(2) - c_wa * col @ row

    v = ((x - z) * np.eye(2) + (B - x) * J @ w0.conj().T @ J) / (B - z)
    return OrderOneForms(s=s, beta_t=beta_t, w0=w0, w_a=w_a, v=v)
