"""Hover linearization, integral augmentation and LQR / LQRi gain synthesis.

The continuous algebraic Riccati equation

    AᵀP + PA − PBR⁻¹BᵀP + Q = 0

is solved from the ordered real Schur form of the Hamiltonian matrix and
then polished with Kleinman-Newton iterations. Every returned gain carries
its Riccati solution and the certificate values (residual, closed-loop
eigenvalues) that justify it.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .vehicle import VehicleParams

EIG_AXIS_TOL = 1e-10
MAX_SUBSPACE_COND = 1e12
HURWITZ_MARGIN = 1e-6


class SynthesisError(Exception):
    """Raised when no certified stabilizing gain can be produced."""


class Mode(str, enum.Enum):
    LQR = "lqr"
    LQRI = "lqri"


def controllability_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def is_controllable(A: np.ndarray, B: np.ndarray) -> bool:
    C = controllability_matrix(A, B)
    s = linalg.svdvals(C)
    n = A.shape[0]
    tol = n * s[0] * np.finfo(float).eps
    return int(np.sum(s > tol)) == n


@dataclass(frozen=True)
class StateSpace:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        B = np.array(self.B, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise SynthesisError(f"A must be square, got shape {A.shape}")
        if B.ndim != 2 or B.shape[0] != A.shape[0]:
            raise SynthesisError(f"B must have {A.shape[0]} rows, got shape {B.shape}")
        if not is_controllable(A, B):
            raise SynthesisError("(A, B) is not controllable")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class AugmentedStateSpace(StateSpace):
    """Attitude model with integral states; ordering ``[z; Q_a; ω_B]``."""

    def __post_init__(self):
        super().__post_init__()
        k = self.n_inputs
        if np.any(self.A[:k, :k] != 0.0):
            raise SynthesisError("integral block of A_aug must be zero")


@dataclass(frozen=True)
class CostWeights:
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        Q = np.atleast_2d(np.array(self.Q, dtype=float))
        R = np.atleast_2d(np.array(self.R, dtype=float))
        if Q.shape[0] != Q.shape[1] or not np.allclose(Q, Q.T, rtol=0, atol=1e-12):
            raise SynthesisError("Q must be square and symmetric")
        if R.shape[0] != R.shape[1] or not np.allclose(R, R.T, rtol=0, atol=1e-12):
            raise SynthesisError("R must be square and symmetric")
        if np.linalg.eigvalsh(Q).min() < -1e-12:
            raise SynthesisError("Q must be positive semidefinite")
        if np.linalg.eigvalsh(R).min() <= 0:
            raise SynthesisError("R must be positive definite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)

    @classmethod
    def diagonal(cls, q, r) -> CostWeights:
        return cls(np.diag(np.asarray(q, dtype=float)), np.diag(np.asarray(r, dtype=float)))


# Reference weights for the F450-class design.
REFERENCE_Q_LQR = (0.135, 0.135, 0.135, 0.0005, 0.0005, 0.0005)
REFERENCE_Q_LQRI = (0.001, 0.002, 0.001) + REFERENCE_Q_LQR
REFERENCE_R = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class GainMatrix:
    K: np.ndarray
    P: np.ndarray
    A: np.ndarray
    B: np.ndarray
    residual: float
    closed_loop_eigenvalues: np.ndarray

    @property
    def mode(self) -> Mode:
        return Mode.LQRI if self.K.shape[1] == 9 else Mode.LQR

    @property
    def attitude_gain(self) -> np.ndarray:
        """3x3 block of K acting on the angle-axis error."""
        offset = 3 if self.mode is Mode.LQRI else 0
        return self.K[:, offset:offset + 3]


def riccati_residual(A, B, Q, R, P) -> np.ndarray:
    BRB = B @ np.linalg.solve(R, B.T)
    return A.T @ P + P @ A - P @ BRB @ P + Q


def hamiltonian(A, B, Q, R) -> np.ndarray:
    BRB = B @ np.linalg.solve(R, B.T)
    return np.block([[A, -BRB], [-Q, -A.T]])


def care_schur(A, B, Q, R) -> np.ndarray:
    """Stabilizing CARE solution from the ordered Schur form of the Hamiltonian."""
    A, B, Q, R = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (A, B, Q, R))
    n = A.shape[0]
    H = hamiltonian(A, B, Q, R)
    T, Z, sdim = linalg.schur(H, output="real", sort="lhp")
    eigs = linalg.eigvals(T)
    if np.min(np.abs(eigs.real)) < EIG_AXIS_TOL:
        raise SynthesisError(
            "Hamiltonian has eigenvalues on the imaginary axis; "
            "the problem is not stabilizable/detectable"
        )
    if sdim != n:
        raise SynthesisError(f"stable invariant subspace has dimension {sdim}, expected {n}")
    U11 = Z[:n, :n]
    U21 = Z[n:, :n]
    cond = np.linalg.cond(U11)
    if not np.isfinite(cond) or cond > MAX_SUBSPACE_COND:
        raise SynthesisError(f"ill-conditioned stable subspace (cond = {cond:.3g})")
    P = np.linalg.solve(U11.T, U21.T).T
    return 0.5 * (P + P.T)


def kleinman_newton(A, B, Q, R, P0, tol=1e-12, max_iter=20) -> tuple[np.ndarray, int]:
    """Refine a stabilizing CARE guess by Newton iteration on Lyapunov equations.

    Returns ``(P, iterations)``. ``iterations`` counts Lyapunov solves
    performed before the Frobenius residual dropped below ``tol``.
    """
    A, B, Q, R = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (A, B, Q, R))
    P = np.array(P0, dtype=float)
    for it in range(max_iter + 1):
        if np.linalg.norm(riccati_residual(A, B, Q, R, P)) < tol:
            return P, it
        if it == max_iter:
            break
        K = np.linalg.solve(R, B.T @ P)
        Acl = A - B @ K
        P = linalg.solve_continuous_lyapunov(Acl.T, -(Q + K.T @ R @ K))
        P = 0.5 * (P + P.T)
    return P, max_iter


def solve_care(A, B, Q, R) -> tuple[np.ndarray, np.ndarray]:
    """Stabilizing solution ``P`` and optimal gain ``K = R⁻¹BᵀP``.

    Raises
    ------
    SynthesisError
        If the Hamiltonian has imaginary-axis eigenvalues, the stable
        subspace is ill-conditioned, or the result fails certification.
    """
    A, B, Q, R = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (A, B, Q, R))
    P = care_schur(A, B, Q, R)
    tol = 1e-12 * (1.0 + np.linalg.norm(P))
    P, _ = kleinman_newton(A, B, Q, R, P, tol=tol, max_iter=5)
    K = np.linalg.solve(R, B.T @ P)
    _certify(A, B, Q, R, P, K)
    return P, K


def _certify(A, B, Q, R, P, K):
    res = np.linalg.norm(riccati_residual(A, B, Q, R, P))
    if res >= 1e-8 * (1.0 + np.linalg.norm(P)):
        raise SynthesisError(f"Riccati residual {res:.3g} too large")
    if np.linalg.eigvalsh(P).min() <= 0:
        raise SynthesisError("Riccati solution is not positive definite")
    eigs = np.linalg.eigvals(A - B @ K)
    if eigs.real.max() >= -HURWITZ_MARGIN:
        raise SynthesisError(f"closed loop is not Hurwitz (max Re = {eigs.real.max():.3g})")


def _gain(ss: StateSpace, weights: CostWeights) -> GainMatrix:
    n, m = ss.n_states, ss.n_inputs
    if weights.Q.shape != (n, n) or weights.R.shape != (m, m):
        raise SynthesisError(
            f"weights must be {n}x{n} / {m}x{m}, got {weights.Q.shape} / {weights.R.shape}"
        )
    P, K = solve_care(ss.A, ss.B, weights.Q, weights.R)
    return GainMatrix(
        K=K,
        P=P,
        A=ss.A,
        B=ss.B,
        residual=float(np.linalg.norm(riccati_residual(ss.A, ss.B, weights.Q, weights.R, P))),
        closed_loop_eigenvalues=np.linalg.eigvals(ss.A - ss.B @ K),
    )


def linearize_hover(params: VehicleParams) -> StateSpace:
    """Attitude model ``[Q_a; ω_B]`` linearized about hover.

    ``A = [[0, I], [0, 0]]`` and ``B = [[0], [J⁻¹]]``. A non-diagonal inertia
    is accepted; a warning is emitted when the products of inertia are large.
    """
    J = params.inertia
    if np.linalg.cond(J) > 1e12:
        raise SynthesisError("inertia matrix is singular")
    off = np.abs(J - np.diag(np.diag(J))).max()
    if off > 0.1 * np.diag(J).min():
        warnings.warn("inertia is strongly coupled; per-axis decoupling will not hold",
                      stacklevel=2)
    A = np.zeros((6, 6))
    A[:3, 3:] = np.eye(3)
    B = np.zeros((6, 3))
    B[3:, :] = np.linalg.inv(J)
    return StateSpace(A, B)


def augment_integral(ss: StateSpace) -> AugmentedStateSpace:
    """Prepend integral-of-attitude-error states, ``ż = Q_a``."""
    if ss.n_states != 6 or ss.n_inputs != 3:
        raise SynthesisError("integral augmentation expects the 6-state attitude model")
    A_aug = np.zeros((9, 9))
    A_aug[:3, 3:6] = np.eye(3)
    A_aug[3:, 3:] = ss.A
    B_aug = np.zeros((9, 3))
    B_aug[3:, :] = ss.B
    return AugmentedStateSpace(A_aug, B_aug)


def synthesize_lqr(params: VehicleParams, weights: CostWeights) -> GainMatrix:
    return _gain(linearize_hover(params), weights)


def synthesize_lqri(params: VehicleParams, weights: CostWeights) -> GainMatrix:
    return _gain(augment_integral(linearize_hover(params)), weights)
