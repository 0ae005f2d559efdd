"""Maslov P-index pairs of linear twisted-boundary Hamiltonian systems.

The pair (i_P, nu_P) is computed from stabilized inertia counts of the
Galerkin form matrix of A - B: with m real dimensions per side,
i_P = m_minus - m and nu_P = m_zero once the counts agree across an
increasing truncation schedule.  Two independent routes guard the result:
nu_P equals the rank deficiency of gamma(tau) - P for the ODE monodromy
gamma, and i_P equals the net spectral flow of A - sB over s in [0, 1].
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .basis import GalerkinSpace, build_space
from .errors import CrossingUnresolved, GapViolationWarning, IntegratorFailure
from .symplectic import PBoundary, twist_log

SYMMETRY_TOL = 1e-10
TWIST_COMPAT_TOL = 1e-8
ZERO_CLUSTER = 1e-6
D_CAP = 0.1
FLOW_ZERO_TOL = 1e-10
RANK_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """A symmetric coefficient path B(t) on [0, tau] compatible with the
    boundary twist: P^T B(tau) P = B(0).

    B_batch, when given, evaluates a whole time array at once (shape
    (T, 2n, 2n)) and is used by the quadrature assembly.
    """

    pb: PBoundary
    B: object  # callable t -> (2n, 2n)
    label: str = "system"
    B_batch: object = None

    def __post_init__(self):
        ts = np.linspace(0.0, self.pb.tau, 7)
        for t in ts:
            M = self.B(t)
            if np.linalg.norm(M - M.T) > SYMMETRY_TOL:
                raise ValueError(f"B({t:.3f}) is not symmetric")
        P = self.pb.P
        defect = np.linalg.norm(P.T @ self.B(self.pb.tau) @ P - self.B(0.0))
        if defect > TWIST_COMPAT_TOL:
            raise ValueError(
                f"twist compatibility ||P^T B(tau) P - B(0)|| = {defect:.2e}")

    def at(self, ts) -> np.ndarray:
        """B evaluated on an array of times, shape (T, 2n, 2n)."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if self.B_batch is not None:
            return self.B_batch(ts)
        return np.stack([self.B(t) for t in ts])


def constant_system(pb: PBoundary, B0, label: str | None = None) -> LinearSystem:
    """Constant coefficient system; B0 must commute with P."""
    B0 = np.asarray(B0, dtype=float)
    return LinearSystem(pb, lambda t: B0, label=label or "constant")


def scalar_system(pb: PBoundary, b, label: str | None = None) -> LinearSystem:
    """B(t) = b(t) I with tau-periodic scalar b."""
    I = np.eye(2 * pb.n)
    return LinearSystem(pb, lambda t: b(t) * I, label=label or "scalar")


def conjugated_system(pb: PBoundary, C, label: str | None = None,
                      pi_branch=None) -> LinearSystem:
    """B(t) = gamma_P(t) C(t) gamma_P(t)^T with tau-periodic symmetric C.

    The conjugation by the twist path makes any periodic symmetric C(t) into
    a twist-compatible coefficient family.
    """
    L = twist_log(pb, pi_branch=pi_branch)
    tau = pb.tau
    import scipy.linalg as sla

    def B(t):
        G = sla.expm((t / tau) * L)
        return G @ C(t) @ G.T

    return LinearSystem(pb, B, label=label or "conjugated")


def random_compatible_system(pb: PBoundary, rng, amplitude: float = 0.8,
                             label: str | None = None,
                             pi_branch=None) -> LinearSystem:
    """Seeded smooth random twist-compatible system (one Fourier harmonic)."""
    d = 2 * pb.n
    omega = 2 * np.pi / pb.tau

    def sym(M):
        return 0.5 * (M + M.T)

    C0 = sym(rng.uniform(-1, 1, (d, d))) * amplitude
    C1 = sym(rng.uniform(-1, 1, (d, d))) * amplitude
    C2 = sym(rng.uniform(-1, 1, (d, d))) * amplitude

    def C(t):
        return C0 + C1 * np.cos(omega * t) + C2 * np.sin(omega * t)

    return conjugated_system(pb, C, label=label or "random", pi_branch=pi_branch)


@dataclass(frozen=True)
class InertiaCount:
    """d-gap eigenvalue counts of a symmetric form matrix."""

    m_plus: int
    m_zero: int
    m_minus: int
    d: float
    m: int
    eigenvalues: np.ndarray

    @property
    def dim(self) -> int:
        return self.m_plus + self.m_zero + self.m_minus


@dataclass(frozen=True)
class MaslovIndexPair:
    """Index pair with the truncation provenance that produced it."""

    i_p: int
    nu_p: int
    provenance: dict = field(default_factory=dict)

    @property
    def stabilized(self) -> bool:
        return bool(self.provenance.get("stabilized", False))


def form_matrix(sys: LinearSystem, space: GalerkinSpace) -> np.ndarray:
    """Matrix of z -> int_0^tau (-J z' - B(t) z, z) dt in the space basis.

    The derivative part is exactly diag(lambda_i); the B part is integrated
    by periodic trapezoid quadrature and symmetrized.
    """
    if sys.pb is not space.pb and not np.allclose(sys.pb.P, space.pb.P):
        raise ValueError("space was built over a different boundary twist")
    ts, w, E = space.eval_quad()
    Bt = sys.at(ts)  # (T, 2n, 2n)
    BE = np.einsum("tij,tdj->tdi", Bt, E)
    FB = w * np.einsum("tdi,tei->de", BE, E)
    F = np.diag(space.lambdas) - 0.5 * (FB + FB.T)
    return F


def auto_d(eigenvalues: np.ndarray) -> float:
    """Gap threshold: half the gap between the near-zero cluster and the
    rest of the spectrum, capped at 0.1."""
    a = np.abs(np.asarray(eigenvalues, dtype=float))
    cluster = a[a < ZERO_CLUSTER]
    rest = a[a >= ZERO_CLUSTER]
    if rest.size == 0:
        return ZERO_CLUSTER
    hi = float(cluster.max()) if cluster.size else 0.0
    return float(min(D_CAP, 0.5 * (rest.min() - hi) + 0.5 * hi))


def inertia(matrix: np.ndarray, d: float,
            m: int | None = None) -> InertiaCount:
    """Count eigenvalues >= d, in (-d, d), and <= -d.

    Warns (GapViolationWarning) when some |eigenvalue| falls inside
    [d/2, 2d], i.e. d is not safely inside a spectral gap.
    """
    if d <= 0:
        raise ValueError("d must be positive")
    matrix = np.asarray(matrix, dtype=float)
    w = np.linalg.eigvalsh(0.5 * (matrix + matrix.T))
    m_plus = int(np.sum(w >= d))
    m_minus = int(np.sum(w <= -d))
    m_zero = int(w.size - m_plus - m_minus)
    a = np.abs(w)
    bad = (a >= 0.5 * d) & (a <= 2 * d)
    if bad.any():
        warnings.warn(
            f"{int(bad.sum())} eigenvalue(s) within [d/2, 2d] of zero "
            f"(d = {d:.3e})", GapViolationWarning, stacklevel=2)
    return InertiaCount(m_plus=m_plus, m_zero=m_zero, m_minus=m_minus,
                        d=float(d), m=m if m is not None else -1,
                        eigenvalues=w)


def default_m_schedule(pb: PBoundary) -> list[int]:
    base = 4 * pb.n * pb.k
    base += base % 2
    return [base, 2 * base, 4 * base]


def maslov_p_index(sys: LinearSystem, m_schedule=None,
                   d: float | None = None,
                   spaces: dict | None = None) -> MaslovIndexPair:
    """Index pair from stabilized Galerkin inertia over a truncation schedule.

    For each m the counts give i_P = m_minus - m and nu_P = m_zero; the
    result is flagged stabilized when all schedule entries agree.  The gap
    threshold d is chosen per truncation from the spectrum unless given.
    """
    if m_schedule is None:
        m_schedule = default_m_schedule(sys.pb)
    m_schedule = [int(m) for m in m_schedule]
    if len(m_schedule) != 3 or any(b <= a for a, b in zip(m_schedule,
                                                          m_schedule[1:])):
        raise ValueError("m_schedule must be three strictly increasing values")
    rows = []
    for m in m_schedule:
        space = (spaces or {}).get(m) or build_space(sys.pb, m)
        if spaces is not None:
            spaces.setdefault(m, space)
        F = form_matrix(sys, space)
        w = np.linalg.eigvalsh(F)
        dm = d if d is not None else auto_d(w)
        ic = inertia(F, dm, m=m)
        rows.append((m, dm, ic.m_minus - m, ic.m_zero, ic))
    i_vals = [r[2] for r in rows]
    nu_vals = [r[3] for r in rows]
    stabilized = len(set(i_vals)) == 1 and len(set(nu_vals)) == 1
    prov = {
        "m_schedule": m_schedule,
        "d": rows[-1][1],
        "d_per_m": [r[1] for r in rows],
        "i_per_m": i_vals,
        "nu_per_m": nu_vals,
        "stabilized": stabilized,
    }
    return MaslovIndexPair(i_p=i_vals[-1], nu_p=nu_vals[-1], provenance=prov)


def monodromy(sys: LinearSystem, rtol: float = 1e-12,
              atol: float = 1e-12) -> np.ndarray:
    """Time-tau value of the fundamental solution of y' = J B(t) y."""
    d = 2 * sys.pb.n
    J = sys.pb.J

    def rhs(t, y):
        return (J @ sys.B(t) @ y.reshape(d, d)).ravel()

    sol = solve_ivp(rhs, (0.0, sys.pb.tau), np.eye(d).ravel(),
                    method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegratorFailure(sol.message)
    return sol.y[:, -1].reshape(d, d)


def symplectic_defect(G: np.ndarray, J: np.ndarray) -> float:
    return float(np.linalg.norm(G.T @ J @ G - J))


def nullity_from_monodromy(gamma_tau: np.ndarray, pb: PBoundary) -> int:
    """dim ker(gamma(tau) - P) by singular-value thresholding.

    The threshold is relative to the norms of gamma(tau) and P themselves,
    not of their difference, so a monodromy equal to P (all singular values
    at integrator noise) is reported as a full kernel.
    """
    D = gamma_tau - pb.P
    s = np.linalg.svd(D, compute_uv=False)
    scale = max(np.linalg.norm(gamma_tau, 2), np.linalg.norm(pb.P, 2))
    return int(np.sum(s < RANK_RTOL * scale))


def spectral_flow(sys: LinearSystem, space: GalerkinSpace,
                  steps: int = 64) -> int:
    """Net count of form-matrix eigenvalues of A - sB crossing zero
    downward minus upward as s runs over [0, 1].

    Eigenvalues within 1e-10 of zero at the endpoints count as zero, so the
    flow equals the change in the strictly-negative count.  An interior
    near-zero eigenvalue without a sign bracket triggers up to tenfold grid
    refinement before CrossingUnresolved is raised.
    """
    if steps < 50:
        raise ValueError("steps must be >= 50")
    F0 = np.diag(space.lambdas)
    FB = F0 - form_matrix(sys, space)  # the B-part alone

    def eigs(s):
        return np.linalg.eigvalsh(F0 - s * FB)

    def neg(w):
        return int(np.sum(w < -FLOW_ZERO_TOL))

    grid = np.linspace(0.0, 1.0, steps + 1)
    table = np.stack([eigs(s) for s in grid])
    flow = neg(table[-1]) - neg(table[0])

    # diagnostic pass: interior zeros must either carry a sign bracket or be
    # flat (a persistent kernel direction)
    for idx in range(1, steps):
        row = table[idx]
        hits = np.where(np.abs(row) <= FLOW_ZERO_TOL)[0]
        for h in hits:
            lo, hi = table[idx - 1][h], table[idx + 1][h]
            if lo * hi < 0:
                continue  # bracketed crossing
            if abs(lo) <= FLOW_ZERO_TOL and abs(hi) <= FLOW_ZERO_TOL:
                continue  # flat kernel path
            resolved = False
            for factor in (2, 5, 10):
                fine = np.linspace(grid[idx - 1], grid[idx + 1],
                                   2 * factor + 1)
                vals = np.array([eigs(s)[h] for s in fine])
                interior = vals[1:-1]
                if np.all(np.abs(interior) > FLOW_ZERO_TOL) or \
                        vals[0] * vals[-1] < 0:
                    resolved = True
                    break
            if not resolved:
                raise CrossingUnresolved(
                    f"eigenvalue {h} sits at zero near s = {grid[idx]:.4f} "
                    "without a sign bracket after refinement")
    return flow


def spectral_flow_table(sys: LinearSystem, space: GalerkinSpace,
                        steps: int = 64) -> np.ndarray:
    """(steps+1, dim) table of sorted eigenvalues along the flow, for dumps."""
    F0 = np.diag(space.lambdas)
    FB = F0 - form_matrix(sys, space)
    grid = np.linspace(0.0, 1.0, steps + 1)
    return np.stack([np.linalg.eigvalsh(F0 - s * FB) for s in grid])


def transformed_system(sys: LinearSystem, pi_branch=None) -> LinearSystem:
    """Periodic system B~(t) = gamma_P^T J gamma_P' + gamma_P^T B gamma_P.

    The result satisfies B~(0) = B~(tau) and is carried by the trivial twist
    (identity boundary), so its monodromy is gamma_P(tau)^{-1} gamma(tau);
    exposed for diagnostic comparison only.
    """
    pb = sys.pb
    L = twist_log(pb, pi_branch=pi_branch)
    tau = pb.tau
    J = pb.J
    import scipy.linalg as sla

    def B_tilde(t):
        G = sla.expm((t / tau) * L)
        return G.T @ (J @ (L / tau) + sys.B(t)) @ G

    from .symplectic import validate_p

    pb_periodic = validate_p(np.eye(2 * pb.n), tau, k_max=1)
    return LinearSystem(pb_periodic, B_tilde, label=f"{sys.label}~")
