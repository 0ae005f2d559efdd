"""Boundary twist matrices: validation, unitary eigenstructure, twist paths.

Real vectors in R^{2n} are identified with C^n by pairing component i with
component n+i, under which the standard symplectic matrix J acts as
multiplication by i.  An orthogonal-symplectic twist P then corresponds to a
unitary U on C^n whose eigen-angles drive every spectral construction in the
package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    LogarithmBranchAmbiguous,
    NotFiniteOrder,
    NotOrthogonalSymplectic,
    NotSymplectic,
)

SYMPLECTIC_TOL = 1e-12
ORDER_TOL = 1e-10
ORDER_MIN_GAP = 1e-6
ORTHOGONAL_TOL = 1e-10
KERNEL_RTOL = 1e-8


def standard_j(n: int) -> np.ndarray:
    """The 2n x 2n matrix with blocks (0, -I; I, 0)."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


def real_from_complex(U: np.ndarray) -> np.ndarray:
    """Real 2n x 2n form of a complex-linear map on C^n."""
    X, Y = U.real, U.imag
    return np.block([[X, -Y], [Y, X]])


def complex_from_real(P: np.ndarray) -> np.ndarray:
    """Complex n x n form of a real matrix commuting with J."""
    n = P.shape[0] // 2
    return P[:n, :n] - 1j * P[:n, n:]


def real_vector(w: np.ndarray) -> np.ndarray:
    """Real 2n-vector(s) for complex n-vector(s); stacks Re above Im."""
    return np.concatenate([w.real, w.imag], axis=-1)


def rotation_block_matrix(angles) -> np.ndarray:
    """Orthogonal-symplectic matrix whose unitary form is diag(e^{i angle})."""
    th = np.asarray(angles, dtype=float)
    return real_from_complex(np.diag(np.exp(1j * th)))


@dataclass(frozen=True, eq=False)
class PBoundary:
    """A validated boundary twist (P, tau) with order k and fixed-space data.

    angles/eigvecs hold the eigen-angles in (-pi, pi] and unit eigenvectors
    of the unitary form of P; they are None when P is not orthogonal.
    """

    n: int
    P: np.ndarray
    tau: float
    k: int
    fixed_basis: np.ndarray  # (2n, dim ker(P - I)), orthonormal columns
    angles: np.ndarray | None = None
    eigvecs: np.ndarray | None = None  # (n, n) complex, columns match angles
    J: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.J is None:
            object.__setattr__(self, "J", standard_j(self.n))

    @property
    def dim_ker(self) -> int:
        return self.fixed_basis.shape[1]

    @property
    def is_orthogonal(self) -> bool:
        return self.angles is not None


def _minimal_order(P: np.ndarray, k_max: int) -> int:
    Q = P.copy()
    I = np.eye(P.shape[0])
    for j in range(1, k_max + 1):
        defect = np.linalg.norm(Q - I)
        if defect <= ORDER_TOL:
            return j
        if defect <= ORDER_MIN_GAP:
            raise NotFiniteOrder(
                f"P^{j} is within {defect:.2e} of I, between the acceptance "
                f"({ORDER_TOL}) and rejection ({ORDER_MIN_GAP}) tolerances"
            )
        Q = Q @ P
    raise NotFiniteOrder(f"no power P^j = I found for j <= {k_max}")


def _fixed_space(P: np.ndarray) -> np.ndarray:
    U, s, Vt = np.linalg.svd(P - np.eye(P.shape[0]))
    if s.size and s[0] > 0:
        null_mask = s < KERNEL_RTOL * s[0]
    else:
        null_mask = np.ones_like(s, dtype=bool)
    return Vt[null_mask].T


def _unitary_eigensystem(P: np.ndarray):
    """Eigen-angles in (-pi, pi] and orthonormal eigenvectors of the
    unitary form of an orthogonal-symplectic P, sorted by ascending angle."""
    U = complex_from_real(P)
    # U is normal, so its complex Schur form is diagonal and the Schur
    # vectors are an orthonormal eigenbasis.
    T, Z = scipy.linalg.schur(U, output="complex")
    ev = np.diag(T)
    angles = np.angle(ev)
    # fold -pi to +pi so the representative is unique
    angles = np.where(np.isclose(angles, -np.pi), np.pi, angles)
    order = np.argsort(angles, kind="stable")
    angles = angles[order]
    vecs = Z[:, order]
    # canonical phase: largest-magnitude component real and positive
    for i in range(vecs.shape[1]):
        j = int(np.argmax(np.abs(vecs[:, i])))
        ph = vecs[j, i]
        if abs(ph) > 0:
            vecs[:, i] *= np.conj(ph) / abs(ph)
    return angles, vecs


def validate_p(P, tau: float, k_max: int = 64) -> PBoundary:
    """Validate a boundary twist and derive its order and fixed space.

    Checks symplecticity (||P^T J P - J|| <= 1e-12) and finds the smallest
    k <= k_max with ||P^k - I|| <= 1e-10, rejecting near-misses above 1e-6.
    The fixed space ker(P - I) comes from singular values of P - I below
    1e-8 relative.  When P is also orthogonal, the unitary eigen-angles and
    eigenvectors are populated.
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] % 2:
        raise ValueError(f"P must be square with even dimension, got {P.shape}")
    if tau <= 0:
        raise ValueError("tau must be positive")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    n = P.shape[0] // 2
    J = standard_j(n)
    defect = np.linalg.norm(P.T @ J @ P - J)
    if defect > SYMPLECTIC_TOL:
        raise NotSymplectic(f"||P^T J P - J|| = {defect:.3e} > {SYMPLECTIC_TOL}")
    k = _minimal_order(P, k_max)
    fixed = _fixed_space(P)
    angles = eigvecs = None
    if np.linalg.norm(P.T @ P - np.eye(2 * n)) <= ORTHOGONAL_TOL:
        angles, eigvecs = _unitary_eigensystem(P)
    return PBoundary(n=n, P=P, tau=float(tau), k=k, fixed_basis=fixed,
                     angles=angles, eigvecs=eigvecs, J=J)


def unitary_identification(pb: PBoundary) -> list[tuple[float, np.ndarray]]:
    """Angle/eigenvector pairs (theta_l, xi_l) of the unitary form of P.

    Raises NotOrthogonalSymplectic when P is not orthogonal; the caller must
    then conjugate P to an orthogonal-symplectic representative first.
    """
    if not pb.is_orthogonal:
        raise NotOrthogonalSymplectic(
            "P is not orthogonal; supply a symplectically conjugated "
            "orthogonal representative"
        )
    return [(float(th), pb.eigvecs[:, i].copy())
            for i, th in enumerate(pb.angles)]


def twist_log(pb: PBoundary, pi_branch=None) -> np.ndarray:
    """Real matrix L with exp(L) = P, commuting with J.

    Angles equal to pi make the real logarithm branch ambiguous; pi_branch
    supplies one sign (+1/-1) per such angle (scalar broadcasts).
    """
    if not pb.is_orthogonal:
        raise NotOrthogonalSymplectic("twist path needs the unitary form of P")
    angles = pb.angles.copy()
    at_pi = np.isclose(np.abs(angles), np.pi, atol=1e-12)
    if at_pi.any():
        if pi_branch is None:
            raise LogarithmBranchAmbiguous(
                f"{int(at_pi.sum())} eigen-angle(s) equal pi; pass pi_branch "
                "(+1 or -1 per flagged angle) to pick the logarithm branch"
            )
        signs = np.broadcast_to(np.atleast_1d(pi_branch),
                                (int(at_pi.sum()),)).astype(float)
        angles[at_pi] = signs * np.pi
    Lc = pb.eigvecs @ np.diag(1j * angles) @ pb.eigvecs.conj().T
    return real_from_complex(Lc)


def gamma_p_path(pb: PBoundary, t, pi_branch=None) -> np.ndarray:
    """Symplectic path exp((t/tau) L) joining the identity to P.

    gamma(0) = I and gamma(tau) = P; the path stays orthogonal-symplectic
    for every t.
    """
    L = twist_log(pb, pi_branch=pi_branch)
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        return scipy.linalg.expm((float(t) / pb.tau) * L)
    return np.stack([scipy.linalg.expm((ti / pb.tau) * L) for ti in t])
