"""Explicit eigenbasis of the twisted loop-space operator and its truncations.

The quadratic form <Az, z> = int_0^tau (-J z', z) dt diagonalizes over modes
t -> e^{i lambda t} xi_l with lambda = (theta_l + 2 pi j) / tau, where theta_l
are the eigen-angles of the unitary form of P.  Each nonzero frequency
carries a two-real-dimensional mode (a cos-like and a sin-like function);
zero frequency contributes the constants spanning ker(P - I).  All functions
are normalized in L^2([0, tau]).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EvenMRequired, InsufficientModes
from .symplectic import PBoundary, real_vector

_J_RANGE_CAP = 4096


@dataclass(frozen=True, eq=False)
class BasisFunction:
    """One real basis function of the twisted loop space.

    The function is the real form of t -> e^{i lam t} c xi / sqrt(tau) with
    c = 1 for the cos-like phase and c = i for the sin-like phase.
    """

    lam: float
    j: int
    l: int  # 1-based angle index
    phase: str  # "cos" | "sin"
    xi: np.ndarray  # complex unit eigenvector, shape (n,)
    tau: float

    def values(self, t) -> np.ndarray:
        """Evaluate at scalar or array t; returns shape t.shape + (2n,)."""
        t = np.asarray(t, dtype=float)
        c = self.xi if self.phase == "cos" else 1j * self.xi
        w = np.exp(1j * self.lam * t)[..., None] * c / np.sqrt(self.tau)
        return real_vector(w)

    def derivative(self, t) -> np.ndarray:
        """Time derivative, i.e. the real form of i*lam times the mode."""
        t = np.asarray(t, dtype=float)
        c = self.xi if self.phase == "cos" else 1j * self.xi
        w = (1j * self.lam) * np.exp(1j * self.lam * t)[..., None] * c
        return real_vector(w / np.sqrt(self.tau))


def eigen_frequencies(pb: PBoundary, j_range: int):
    """All frequencies (lam, l, j) with |j| <= j_range, sorted ascending.

    lam = (theta_l + 2 pi j) / tau.  Ties are broken by angle index.
    """
    if not pb.is_orthogonal:
        raise ValueError("eigen frequencies need the unitary form of P "
                         "(orthogonal-symplectic boundary)")
    out = []
    for l, th in enumerate(pb.angles, start=1):
        for j in range(-j_range, j_range + 1):
            out.append(((th + 2 * np.pi * j) / pb.tau, l, j))
    out.sort(key=lambda rec: (rec[0], rec[1]))
    return out


@dataclass(frozen=True, eq=False)
class GalerkinSpace:
    """Truncated twisted loop space: m negative and m positive real
    dimensions around the constant block spanning ker(P - I)."""

    pb: PBoundary
    m: int
    basis_neg: tuple
    basis_zero: tuple
    basis_pos: tuple
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def basis(self) -> tuple:
        return self.basis_neg + self.basis_zero + self.basis_pos

    @property
    def dim(self) -> int:
        return len(self.basis_neg) + len(self.basis_zero) + len(self.basis_pos)

    @property
    def lambdas(self) -> np.ndarray:
        return self._modes()[0]

    @property
    def zero_slice(self) -> slice:
        a = len(self.basis_neg)
        return slice(a, a + len(self.basis_zero))

    def _modes(self):
        """Frequency vector and complex mode matrix C with basis_d(t) equal
        to the real form of e^{i lam_d t} C[d]."""
        if "modes" not in self._cache:
            lams = np.array([b.lam for b in self.basis])
            C = np.stack([
                (b.xi if b.phase == "cos" else 1j * b.xi) / np.sqrt(b.tau)
                for b in self.basis])
            self._cache["modes"] = (lams, C)
        return self._cache["modes"]

    def quadrature(self, n_min: int = 256):
        """Uniform periodic-trapezoid nodes and weight on [0, tau).

        The node count scales with the largest frequency so products of two
        basis functions are integrated without aliasing.
        """
        lam_max = float(np.max(np.abs(self.lambdas))) if self.dim else 0.0
        n = max(n_min, int(np.ceil(16 * lam_max * self.pb.tau / (2 * np.pi))))
        key = ("quad", n)
        if key not in self._cache:
            ts = np.arange(n) * (self.pb.tau / n)
            self._cache[key] = (ts, self.pb.tau / n)
        return self._cache[key]

    def eval_all(self, ts) -> np.ndarray:
        """Basis values at the given times, shape (len(ts), dim, 2n)."""
        ts = np.asarray(ts, dtype=float)
        lams, C = self._modes()
        W = np.exp(1j * ts[:, None] * lams[None, :])[:, :, None] * C[None]
        return real_vector(W)

    def eval_quad(self):
        """(nodes, weight, values at nodes) for the standard quadrature."""
        ts, w = self.quadrature()
        if "quad_eval" not in self._cache:
            self._cache["quad_eval"] = self.eval_all(ts)
        return ts, w, self._cache["quad_eval"]


def _complex_modes(pb: PBoundary, j_range: int):
    """Nonzero-frequency modes (lam, l, j) and the constant directions."""
    freqs = eigen_frequencies(pb, j_range)
    zeros, nonzero = [], []
    for lam, l, j in freqs:
        if abs(lam) < 1e-12 / pb.tau:
            zeros.append((lam, l, j))
        else:
            nonzero.append((lam, l, j))
    return nonzero, zeros


_SPACE_MEMO: "weakref.WeakKeyDictionary" = None  # type: ignore[assignment]


def build_space(pb: PBoundary, m: int) -> GalerkinSpace:
    """Build the 2m + dim ker(P - I) dimensional truncated space.

    m counts real dimensions per side and must be even so complex modes stay
    whole.  Mode order is |lam| ascending with ties broken by angle index
    then phase (cos before sin).  Spaces are immutable and memoized per
    boundary object.
    """
    global _SPACE_MEMO
    if _SPACE_MEMO is None:
        import weakref

        _SPACE_MEMO = weakref.WeakKeyDictionary()
    per_pb = _SPACE_MEMO.setdefault(pb, {})
    if m in per_pb:
        return per_pb[m]
    space = _build_space(pb, m)
    per_pb[m] = space
    return space


def _build_space(pb: PBoundary, m: int) -> GalerkinSpace:
    if m < 1:
        raise ValueError("m must be positive")
    if m % 2:
        raise EvenMRequired(f"m = {m} is odd; each complex mode carries two "
                            "real dimensions")
    n_modes = m // 2
    j_range = max(2, int(np.ceil(n_modes / pb.n)) + 1)
    while True:
        nonzero, zeros = _complex_modes(pb, j_range)
        neg = [rec for rec in nonzero if rec[0] < 0]
        pos = [rec for rec in nonzero if rec[0] > 0]
        if len(neg) >= n_modes and len(pos) >= n_modes:
            break
        if j_range > _J_RANGE_CAP:
            raise InsufficientModes(f"j_range overflow at {j_range}")
        j_range *= 2
    neg.sort(key=lambda rec: (abs(rec[0]), rec[1]))
    pos.sort(key=lambda rec: (abs(rec[0]), rec[1]))

    def expand(recs):
        funcs = []
        for lam, l, j in recs:
            xi = pb.eigvecs[:, l - 1]
            for phase in ("cos", "sin"):
                funcs.append(BasisFunction(lam=float(lam), j=j, l=l,
                                           phase=phase, xi=xi, tau=pb.tau))
        return funcs

    basis_neg = expand(neg[:n_modes])
    basis_neg.sort(key=lambda b: (abs(b.lam), b.l, b.phase))
    basis_pos = expand(pos[:n_modes])
    basis_pos.sort(key=lambda b: (abs(b.lam), b.l, b.phase))
    basis_zero = expand(zeros)
    # the constant block has one real pair per zero angle; keep cos/sin order
    if len(basis_zero) != pb.dim_ker:
        raise InsufficientModes(
            f"constant block dimension {len(basis_zero)} does not match "
            f"dim ker(P - I) = {pb.dim_ker}")
    return GalerkinSpace(pb=pb, m=m, basis_neg=tuple(basis_neg),
                         basis_zero=tuple(basis_zero),
                         basis_pos=tuple(basis_pos))


def synthesize(space: GalerkinSpace, coeffs, t) -> np.ndarray:
    """Evaluate sum_i coeffs_i basis_i(t); linear in coeffs."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (space.dim,):
        raise DimensionMismatch(
            f"expected {space.dim} coefficients, got {coeffs.shape}")
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    lams, C = space._modes()
    w = (np.exp(1j * ts[:, None] * lams[None, :]) * coeffs[None, :]) @ C
    out = real_vector(w)
    return out[0] if np.ndim(t) == 0 else out


def synthesize_derivative(space: GalerkinSpace, coeffs, t) -> np.ndarray:
    """Time derivative of the synthesized trajectory."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (space.dim,):
        raise DimensionMismatch(
            f"expected {space.dim} coefficients, got {coeffs.shape}")
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    lams, C = space._modes()
    w = (np.exp(1j * ts[:, None] * lams[None, :])
         * (1j * lams * coeffs)[None, :]) @ C
    out = real_vector(w)
    return out[0] if np.ndim(t) == 0 else out


def mode_key(b: BasisFunction) -> tuple:
    return (b.l, b.j, b.phase)


def embed_coeffs(src: GalerkinSpace, dst: GalerkinSpace, coeffs) -> np.ndarray:
    """Map coefficients into a larger space by matching mode labels."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (src.dim,):
        raise DimensionMismatch(
            f"expected {src.dim} coefficients, got {coeffs.shape}")
    index = {mode_key(b): i for i, b in enumerate(dst.basis)}
    out = np.zeros(dst.dim)
    for i, b in enumerate(src.basis):
        key = mode_key(b)
        if key not in index:
            raise DimensionMismatch(f"mode {key} missing from target space")
        out[index[key]] = coeffs[i]
    return out


def basis_table(space: GalerkinSpace, n_samples: int = 257) -> np.ndarray:
    """Dense sample table (t, components of every basis function) for dumps."""
    ts = np.linspace(0.0, space.pb.tau, n_samples)
    E = space.eval_all(ts)  # (T, dim, 2n)
    flat = E.reshape(len(ts), -1)
    return np.column_stack([ts, flat])


def write_basis_csv(space: GalerkinSpace, path, n_samples: int = 257):
    """Dump the basis sample table as CSV with one column per component."""
    import csv

    table = basis_table(space, n_samples)
    width = 2 * space.pb.n
    header = ["t"] + [f"e{d}_x{c + 1}" for d in range(space.dim)
                      for c in range(width)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in table:
            w.writerow([f"{v:.12g}" for v in row])
