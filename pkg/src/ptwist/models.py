"""Hamiltonian evaluators, growth-regime metadata, truncation, hypotheses.

Built-in families cover the three growth regimes: an exact quartic
(superquadratic), a linear-at-infinity model with a bounded correction, and
a bounded-gradient square-root model (subquadratic).  All evaluators are
vectorized over leading axes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import qmc

from .errors import MissingContext, NegativeAnnulusValue, UnknownFamily
from .symplectic import PBoundary


@dataclass(frozen=True)
class HamiltonianModel:
    """H with gradient and Hessian plus regime metadata.

    value/grad/hess accept arrays shaped (..., 2n) and return (...,),
    (..., 2n) and (..., 2n, 2n) respectively.
    """

    n: int
    value: object
    grad: object
    hess: object
    h0: np.ndarray | None = None
    h_inf: np.ndarray | None = None
    mu: float | None = None
    R0: float | None = None
    M_bound: float | None = None
    family: str | None = None
    params: dict = field(default_factory=dict)
    truncation: dict | None = None

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def is_superquadratic(self) -> bool:
        return self.mu is not None and self.mu > 2


def _quartic_radial(n: int, c: float = 1.0, h0=None) -> HamiltonianModel:
    if c <= 0:
        raise ValueError("quartic coefficient must be positive")
    d = 2 * n
    H0 = np.zeros((d, d)) if h0 is None else np.asarray(h0, dtype=float)
    I = np.eye(d)

    def value(z):
        z = np.asarray(z, dtype=float)
        r2 = np.sum(z * z, axis=-1)
        return 0.25 * c * r2 ** 2 + 0.5 * np.einsum("...i,ij,...j", z, H0, z)

    def grad(z):
        z = np.asarray(z, dtype=float)
        r2 = np.sum(z * z, axis=-1)[..., None]
        return c * r2 * z + z @ H0.T

    def hess(z):
        z = np.asarray(z, dtype=float)
        r2 = np.sum(z * z, axis=-1)[..., None, None]
        outer = z[..., :, None] * z[..., None, :]
        return c * (r2 * I + 2.0 * outer) + H0

    return HamiltonianModel(n=n, value=value, grad=grad, hess=hess,
                            h0=H0, mu=4.0, R0=1.0,
                            family="quartic_radial",
                            params={"c": c})


def _sqrt_part(n: int, gamma: float):
    d = 2 * n
    I = np.eye(d)

    def value(z):
        r2 = np.sum(z * z, axis=-1)
        return gamma * (np.sqrt(1.0 + r2) - 1.0)

    def grad(z):
        s = np.sqrt(1.0 + np.sum(z * z, axis=-1))[..., None]
        return gamma * z / s

    def hess(z):
        s = np.sqrt(1.0 + np.sum(z * z, axis=-1))[..., None, None]
        outer = z[..., :, None] * z[..., None, :]
        return gamma * (I / s - outer / s ** 3)

    return value, grad, hess


def _asymptotically_linear(n: int, gamma: float = 1.0,
                           h_inf=None) -> HamiltonianModel:
    d = 2 * n
    Hinf = 0.5 * np.eye(d) if h_inf is None else np.asarray(h_inf, dtype=float)
    sval, sgrad, shess = _sqrt_part(n, gamma)

    def value(z):
        z = np.asarray(z, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j", z, Hinf, z) + sval(z)

    def grad(z):
        z = np.asarray(z, dtype=float)
        return z @ Hinf.T + sgrad(z)

    def hess(z):
        z = np.asarray(z, dtype=float)
        return Hinf + shess(z)

    return HamiltonianModel(n=n, value=value, grad=grad, hess=hess,
                            h0=Hinf + gamma * np.eye(d), h_inf=Hinf,
                            M_bound=abs(gamma),
                            family="asymptotically_linear",
                            params={"gamma": gamma})


def _subquadratic_sqrt(n: int) -> HamiltonianModel:
    sval, sgrad, shess = _sqrt_part(n, 1.0)
    return HamiltonianModel(n=n, value=sval, grad=sgrad, hess=shess,
                            M_bound=1.0, family="subquadratic_sqrt",
                            params={})


_FAMILIES = {
    "quartic_radial": _quartic_radial,
    "asymptotically_linear": _asymptotically_linear,
    "subquadratic_sqrt": _subquadratic_sqrt,
}


def builtin_family(name: str, n: int, **params) -> HamiltonianModel:
    """Instantiate a built-in Hamiltonian family on R^{2n}."""
    if name not in _FAMILIES:
        raise UnknownFamily(f"unknown family {name!r}; available: "
                            f"{sorted(_FAMILIES)}")
    return _FAMILIES[name](n, **params)


# -- truncation ---------------------------------------------------------------

def _cutoff(s):
    """Smoothstep of exponentials: 1 at s <= 0, 0 at s >= 1, C-infinity.

    Written as logistic(-h) with h(s) = 1/(1-s) - 1/s; h saturates smoothly
    at the edges so derivatives vanish to all orders.
    """
    s = np.asarray(s, dtype=float)
    inner = np.clip(s, 1e-12, 1 - 1e-12)
    h = 1.0 / (1.0 - inner) - 1.0 / inner
    h = np.clip(h, -60.0, 60.0)
    sig = 1.0 / (1.0 + np.exp(h))
    chi = np.where(s <= 0, 1.0, np.where(s >= 1, 0.0, sig))
    dsig = sig * (1.0 - sig)
    hp = 1.0 / (1.0 - inner) ** 2 + 1.0 / inner ** 2
    hpp = 2.0 / (1.0 - inner) ** 3 - 2.0 / inner ** 3
    d1 = np.where((s <= 0) | (s >= 1), 0.0, -hp * dsig)
    d2sig = dsig * (1.0 - 2.0 * sig)
    d2 = np.where((s <= 0) | (s >= 1), 0.0, -hpp * dsig + hp ** 2 * d2sig)
    return chi, d1, d2


def _estimate_quartic_cap(model: HamiltonianModel, K: float,
                          n_points: int = 10_000, margin: float = 1.2,
                          seed: int = 0):
    """Quasi-random max of H / |z|^4 over the annulus K <= |z| <= K + 1."""
    d = model.dim
    sampler = qmc.Halton(d + 1, scramble=True, seed=seed)
    u = sampler.random(n_points)
    from scipy.stats import norm

    dirs = norm.ppf(np.clip(u[:, :d], 1e-12, 1 - 1e-12))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = K + u[:, d]
    z = dirs * radii[:, None]
    ratios = model.value(z) / radii ** 4
    cap = float(ratios.max()) * margin
    flagged = False
    if cap < 0:
        warnings.warn("sampled H < 0 on the truncation annulus; flooring the "
                      "quartic cap at 0", NegativeAnnulusValue, stacklevel=2)
        cap, flagged = 0.0, True
    return cap, flagged


def truncate(model: HamiltonianModel, K: float,
             r_k: float | None = None) -> HamiltonianModel:
    """Replace H outside radius K + 1 by exact quartic growth r_k |z|^4.

    Inside |z| <= K the model is untouched; on the unit band a smooth cutoff
    interpolates.  When r_k is not given it is estimated by dense annulus
    sampling with a 20% margin (floored at zero if H samples negative).
    """
    if K <= 0:
        raise ValueError("K must be positive")
    flagged = False
    if r_k is None:
        r_k, flagged = _estimate_quartic_cap(model, K)
    RK = float(r_k)
    d = model.dim
    I = np.eye(d)
    base_v, base_g, base_h = model.value, model.grad, model.hess

    def value(z):
        z = np.asarray(z, dtype=float)
        r = np.linalg.norm(z, axis=-1)
        chi, _, _ = _cutoff(r - K)
        return chi * base_v(z) + (1.0 - chi) * RK * r ** 4

    def grad(z):
        z = np.asarray(z, dtype=float)
        r = np.linalg.norm(z, axis=-1)
        chi, d1, _ = _cutoff(r - K)
        rr = np.maximum(r, 1e-300)
        zhat = z / rr[..., None]
        F = base_v(z) - RK * r ** 4
        Fp = base_g(z) - 4.0 * RK * (r ** 2)[..., None] * z
        quart = 4.0 * RK * (r ** 2)[..., None] * z
        return quart + chi[..., None] * Fp + (d1 * F)[..., None] * zhat

    def hess(z):
        z = np.asarray(z, dtype=float)
        r = np.linalg.norm(z, axis=-1)
        chi, d1, d2 = _cutoff(r - K)
        rr = np.maximum(r, 1e-300)
        zhat = z / rr[..., None]
        outer_hat = zhat[..., :, None] * zhat[..., None, :]
        F = base_v(z) - RK * r ** 4
        Fp = base_g(z) - 4.0 * RK * (r ** 2)[..., None] * z
        quart_h = 4.0 * RK * ((r ** 2)[..., None, None] * I
                              + 2.0 * z[..., :, None] * z[..., None, :])
        Fpp = base_h(z) - quart_h
        grad_u = d1[..., None] * zhat
        hess_u = (d2[..., None, None] * outer_hat
                  + (d1 / rr)[..., None, None] * (I - outer_hat))
        cross = (grad_u[..., :, None] * Fp[..., None, :]
                 + Fp[..., :, None] * grad_u[..., None, :])
        return (quart_h + chi[..., None, None] * Fpp + cross
                + F[..., None, None] * hess_u)

    info = {"K": float(K), "R_K": RK, "floored": flagged}
    return replace(model, value=value, grad=grad, hess=hess, truncation=info)


# -- hypothesis checks --------------------------------------------------------

@dataclass(frozen=True)
class HypothesisReport:
    """Per-hypothesis verdicts with sampled evidence summaries."""

    entries: dict

    def holds(self, name: str):
        return self.entries[name]["holds"]

    def as_dict(self) -> dict:
        return {k: dict(v) for k, v in self.entries.items()}


def _sample_points(rng, dim, n, radius):
    z = rng.normal(size=(n, dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = radius * rng.uniform(0.05, 1.0, size=(n, 1)) ** (1.0 / dim)
    return z * r


def check_hypotheses(model: HamiltonianModel, pb: PBoundary,
                     orbit=None, index_ctx: dict | None = None,
                     seed: int = 0, n_samples: int = 200) -> HypothesisReport:
    """Evaluate the growth/symmetry hypotheses numerically.

    Pointwise conditions are sampled (verdict "holds" means no violation
    found among samples); the orbit-wise conditions HX1/HX2 need an orbit
    with time samples; HX3-HX5 are integer checks on index pairs passed in
    index_ctx as {"zero"|"h0"|"h_inf": (i_p, nu_p)}.
    """
    rng = np.random.default_rng(seed)
    d = model.dim
    entries: dict[str, dict] = {}
    index_ctx = index_ctx or {}

    def put(name, holds, evidence):
        if not isinstance(holds, str):
            holds = bool(holds)
        entries[name] = {"holds": holds, "evidence": evidence}

    z = _sample_points(rng, d, n_samples, 3.0)

    # H0: P-invariance
    dev = float(np.max(np.abs(model.value(z @ pb.P.T) - model.value(z))))
    put("H0", dev <= 1e-9 * (1 + float(np.max(np.abs(model.value(z))))),
        f"max |H(Pz) - H(z)| = {dev:.2e} over {n_samples} samples")

    # H1/H2 need h0
    if model.h0 is not None:
        h0 = model.h0
        small = _sample_points(rng, d, n_samples, 1e-3)
        quad = 0.5 * np.einsum("...i,ij,...j", small, h0, small)
        rem = np.abs(model.value(small) - quad) / np.sum(small * small, axis=-1)
        put("H1", float(rem.max()) < 1e-2,
            f"max |H - quadratic| / |z|^2 = {rem.max():.2e} at |z| <= 1e-3")
        quad_b = 0.5 * np.einsum("...i,ij,...j", z, h0, z)
        gap = model.value(z) - quad_b
        sym = np.linalg.norm(pb.P.T @ h0 @ pb.P - h0)
        semidef = np.linalg.eigvalsh(h0).min() >= -1e-10
        put("H2", bool(gap.min() >= -1e-9) and sym <= 1e-10 and semidef,
            f"min(H - quadratic) = {gap.min():.2e}, ||P^T h0 P - h0|| = {sym:.2e}")
    else:
        put("H1", "indeterminate", "no h0 supplied")
        put("H2", "indeterminate", "no h0 supplied")

    # H3: superquadratic inequality on an annulus
    if model.mu is not None and model.R0 is not None:
        ann = _sample_points(rng, d, n_samples, 4 * model.R0)
        ann = ann[np.linalg.norm(ann, axis=1) >= model.R0]
        hv = model.value(ann)
        hz = np.sum(model.grad(ann) * ann, axis=-1)
        ok = bool(np.all(model.mu * hv > 0) and
                  np.all(model.mu * hv <= hz + 1e-9 * np.abs(hz)))
        put("H3", ok, f"checked mu H <= H'.z on {len(ann)} annulus samples")
    else:
        put("H3", "indeterminate", "no mu/R0 supplied")

    # H4: Hessian growth bound, evidence only (s = 2 probe)
    hs = model.hess(z)
    ratio = np.linalg.norm(hs, axis=(-2, -1)) / (1 + np.sum(z * z, axis=-1))
    put("H4", "sampled only", f"max |H''| / (1 + |z|^2) = {ratio.max():.2e}")

    # H5: gradient approaches h_inf z
    if model.h_inf is not None:
        radii = np.array([10.0, 100.0, 1000.0])
        decay = []
        for R in radii:
            far = _sample_points(rng, d, 50, R)
            far = far[np.linalg.norm(far, axis=1) > 0.5 * R]
            res = model.grad(far) - far @ model.h_inf.T
            decay.append(float(np.max(np.linalg.norm(res, axis=-1)
                                      / np.linalg.norm(far, axis=-1))))
        ok = all(b <= a + 1e-12 for a, b in zip(decay, decay[1:])) \
            and decay[-1] < 1e-2
        put("H5", ok, f"|H' - h_inf z|/|z| at radii {list(radii)}: "
            f"{[f'{v:.2e}' for v in decay]}")
        sym = np.linalg.norm(pb.P.T @ model.h_inf @ pb.P - model.h_inf)
        entries["H5"]["evidence"] += f", ||P^T h_inf P - h_inf|| = {sym:.2e}"
        if sym > 1e-10:
            entries["H5"]["holds"] = False
    else:
        put("H5", "indeterminate", "no h_inf supplied")

    # H6: h_inf - h0 positive definite and commuting
    if model.h0 is not None and model.h_inf is not None:
        Dm = model.h_inf - model.h0
        comm = np.linalg.norm(model.h_inf @ model.h0 - model.h0 @ model.h_inf)
        put("H6", bool(np.linalg.eigvalsh(Dm).min() > 0) and comm <= 1e-10,
            f"min eig(h_inf - h0) = {np.linalg.eigvalsh(Dm).min():.2e}, "
            f"commutator norm {comm:.2e}")
    else:
        put("H6", "indeterminate", "needs both h0 and h_inf")

    # H7: no stationary point away from 0 (sampled)
    gz = np.linalg.norm(model.grad(z), axis=-1)
    rmask = np.linalg.norm(z, axis=1) > 1e-6
    put("H7", "sampled only",
        f"min |H'| on samples away from 0: {gz[rmask].min():.2e}")

    # H8: bounded gradient, H -> infinity
    if model.M_bound is not None:
        big = _sample_points(rng, d, n_samples, 100.0)
        gb = np.linalg.norm(model.grad(big), axis=-1)
        grows = model.value(np.eye(d)[0] * 1e4) > model.value(np.eye(d)[0] * 10)
        put("H8", bool(np.all(gb <= model.M_bound + 1e-9)) and bool(grows),
            f"max |H'| = {gb.max():.4f} (bound {model.M_bound}), growth probed")
    else:
        put("H8", "indeterminate", "no gradient bound supplied")

    # H9: H(0) = 0, H > 0 and |H'| > 0 off the origin.  Positivity of the
    # vector H'(x) itself is not meaningful; we check the norm and flag it.
    h_at_0 = float(model.value(np.zeros(d)))
    pos = bool(np.all(model.value(z[rmask]) > 0)) and \
        bool(np.all(gz[rmask] > 0))
    put("H9", abs(h_at_0) <= 1e-12 and pos,
        f"H(0) = {h_at_0:.2e}; min H = {model.value(z[rmask]).min():.2e}, "
        f"min |H'| = {gz[rmask].min():.2e} (vector positivity read as |H'| > 0)")

    # orbit-wise conditions
    if orbit is not None:
        xs = np.asarray(orbit)
        He = model.hess(xs)
        min_eig = float(min(np.linalg.eigvalsh(h).min() for h in He))
        put("HX1", min_eig >= -1e-8,
            f"min eigenvalue of H'' along orbit = {min_eig:.2e}")
        avg = He.mean(axis=0)
        put("HX2", bool(np.linalg.eigvalsh(avg).min() > 1e-8),
            f"min eigenvalue of time-averaged H'' = "
            f"{np.linalg.eigvalsh(avg).min():.2e}")
    else:
        put("HX1", "indeterminate", "no orbit supplied")
        put("HX2", "indeterminate", "no orbit supplied")

    dk = pb.dim_ker
    if "h0" in index_ctx:
        i0, nu0 = index_ctx["h0"]
        put("HX3", i0 + nu0 <= dk, f"i_P(h0) + nu_P(h0) = {i0 + nu0} <= {dk}")
    else:
        put("HX3", "indeterminate", "index pair of h0 not supplied")
    if "h0" in index_ctx and "h_inf" in index_ctx:
        i0, nu0 = index_ctx["h0"]
        ii, nui = index_ctx["h_inf"]
        put("HX4", (ii > i0 + nu0) and (i0 + nu0 <= dk),
            f"i_P(h_inf) = {ii} vs i_P(h0) + nu_P(h0) = {i0 + nu0}")
        outside = not (i0 <= ii + nui <= i0 + nu0)
        put("HX5", (ii + nui <= dk + 1) and outside,
            f"i_P(h_inf) + nu_P(h_inf) = {ii + nui} vs dim ker + 1 = {dk + 1}, "
            f"window [{i0}, {i0 + nu0}]")
    else:
        put("HX4", "indeterminate", "index pairs not supplied")
        put("HX5", "indeterminate", "index pairs not supplied")

    return HypothesisReport(entries=entries)


def require_orbit(report: HypothesisReport, names=("HX1", "HX2")):
    """Raise MissingContext when orbit-wise entries were left indeterminate."""
    for name in names:
        if report.entries[name]["holds"] == "indeterminate":
            raise MissingContext(f"{name} needs an orbit")
