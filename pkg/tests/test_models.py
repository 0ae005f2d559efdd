import numpy as np
import pytest

from ptwist import builtin_family, check_hypotheses, truncate
from ptwist.errors import MissingContext, UnknownFamily
from ptwist.models import require_orbit


FAMILIES = [
    ("quartic_radial", dict(c=1.0)),
    ("asymptotically_linear", dict(gamma=1.0)),
    ("subquadratic_sqrt", dict()),
]


def central_grad(model, z, h=1e-6):
    g = np.zeros_like(z)
    for i in range(len(z)):
        e = np.zeros_like(z)
        e[i] = h
        g[i] = (model.value(z + e) - model.value(z - e)) / (2 * h)
    return g


def central_hess_col(model, z, i, h=1e-6):
    e = np.zeros_like(z)
    e[i] = h
    return (model.grad(z + e) - model.grad(z - e)) / (2 * h)


@pytest.mark.parametrize("name,params", FAMILIES)
def test_derivative_consistency(name, params):
    model = builtin_family(name, n=1, **params)
    rng = np.random.default_rng(0)
    for z in rng.normal(scale=1.5, size=(200, 2)):
        g = model.grad(z)
        g_fd = central_grad(model, z)
        assert np.linalg.norm(g - g_fd) / (1 + np.linalg.norm(g)) < 1e-6
    for z in rng.normal(scale=1.5, size=(40, 2)):
        H = model.hess(z)
        for i in range(2):
            col = central_hess_col(model, z, i)
            assert np.linalg.norm(H[:, i] - col) / (1 + np.linalg.norm(H)) \
                < 1e-6


@pytest.mark.parametrize("name,params", FAMILIES)
def test_p_invariance_and_gradient_equivariance(name, params, pb_rot):
    model = builtin_family(name, n=1, **params)
    P = pb_rot.P
    rng = np.random.default_rng(1)
    z = rng.normal(scale=2.0, size=(100, 2))
    assert np.max(np.abs(model.value(z @ P.T) - model.value(z))) < 1e-9
    # chain rule on H(Pz) = H(z) for orthogonal P
    assert np.max(np.abs(model.grad(z @ P.T) - model.grad(z) @ P.T)) < 1e-9


def test_unknown_family():
    with pytest.raises(UnknownFamily):
        builtin_family("nope", n=1)


def test_quartic_superquadratic_identity():
    # mu H = H'.z holds with equality for the pure quartic
    model = builtin_family("quartic_radial", n=1, c=1.0)
    rng = np.random.default_rng(2)
    z = rng.normal(scale=3.0, size=(50, 2))
    lhs = model.mu * model.value(z)
    rhs = np.sum(model.grad(z) * z, axis=-1)
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * np.max(np.abs(rhs))


def test_sqrt_model_bounds():
    model = builtin_family("subquadratic_sqrt", n=1)
    assert model.value(np.zeros(2)) == 0.0
    rng = np.random.default_rng(3)
    z = rng.normal(scale=50.0, size=(200, 2))
    assert np.all(np.linalg.norm(model.grad(z), axis=-1) < 1.0)
    assert np.all(model.value(z) > 0)


def test_asymptotically_linear_correction_bounded():
    beta = 0.5
    model = builtin_family("asymptotically_linear", n=1, gamma=1.0,
                           h_inf=beta * np.eye(2))
    rng = np.random.default_rng(4)
    z = rng.normal(scale=30.0, size=(200, 2))
    res = model.grad(z) - beta * z
    assert np.all(np.linalg.norm(res, axis=-1) <= 1.0)
    assert np.allclose(model.h0, beta * np.eye(2) + np.eye(2))


# -- truncation ---------------------------------------------------------------

def test_truncation_identity_for_exact_quartic():
    model = builtin_family("quartic_radial", n=1, c=1.0)
    hk = truncate(model, K=2.0, r_k=0.25)
    rng = np.random.default_rng(5)
    z = rng.normal(scale=3.0, size=(300, 2))
    assert np.max(np.abs(hk.value(z) - model.value(z))) < 1e-12
    assert np.max(np.abs(hk.grad(z) - model.grad(z))) < 1e-10


def test_truncation_regions():
    model = builtin_family("quartic_radial", n=1, c=2.0)
    K = 1.5
    hk = truncate(model, K)
    rk = hk.truncation["R_K"]
    assert rk >= 0.5  # annulus max of H/|z|^4 is c/4 = 0.5, before margin
    rng = np.random.default_rng(6)
    inner = rng.normal(size=(100, 2))
    inner *= (rng.uniform(0, K, 100) / np.linalg.norm(inner, axis=1))[:, None]
    assert np.max(np.abs(hk.value(inner) - model.value(inner))) == 0.0
    outer = rng.normal(size=(100, 2))
    radii = rng.uniform(K + 1.0, 3 * K + 2, 100)
    outer *= (radii / np.linalg.norm(outer, axis=1))[:, None]
    assert np.max(np.abs(hk.value(outer) - rk * radii ** 4)) < 1e-9


def test_truncation_smoothness_and_derivatives():
    model = builtin_family("quartic_radial", n=1, c=1.0)
    hk = truncate(model, K=1.0)
    # finite-difference consistency of the patched gradient and Hessian,
    # including points inside the cutoff band
    rng = np.random.default_rng(7)
    pts = np.concatenate([
        rng.normal(scale=0.5, size=(30, 2)),
        rng.normal(size=(60, 2)) * rng.uniform(1.0, 2.0, (60, 1)),
        rng.normal(scale=3.0, size=(30, 2)),
    ])
    for z in pts:
        g_fd = central_grad(hk, z)
        assert np.linalg.norm(hk.grad(z) - g_fd) \
            / (1 + np.linalg.norm(g_fd)) < 1e-5
    # second differences vary continuously through the band edges: walking a
    # fine grid across |z| = K and |z| = K + 1 shows no spike beyond the
    # smooth third-derivative trend
    def second_diff(r, h=1e-4):
        zs = np.array([[r - h, 0.0], [r, 0.0], [r + h, 0.0]])
        v = hk.value(zs)
        return (v[0] - 2 * v[1] + v[2]) / h ** 2

    for r0 in (1.0, 2.0):  # |z| = K and |z| = K + 1
        grid = r0 + np.linspace(-5e-3, 5e-3, 11)
        d2 = np.array([second_diff(r) for r in grid])
        steps = np.abs(np.diff(d2))
        trend = np.median(steps)
        assert np.max(steps) < 10 * trend + 1e-4 * (1 + abs(d2[0]))


def test_truncation_growth_floor():
    # fitted floor a1 |z|^nu - a2 with positive a1, nu = min(mu, 4)
    model = builtin_family("quartic_radial", n=1, c=1.0)
    K = 2.0
    hk = truncate(model, K)
    nu = min(model.mu, 4.0)
    rng = np.random.default_rng(8)
    dirs = rng.normal(size=(500, 2))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = rng.uniform(0.0, 3 * K, 500)
    z = dirs * radii[:, None]
    vals = hk.value(z)
    a2 = 1.0 + max(0.0, -float(vals.min()))
    a1 = float(np.min((vals + a2) / np.maximum(radii, 1e-9) ** nu))
    assert a1 > 0
    assert np.all(vals >= a1 * radii ** nu - a2 - 1e-12)


# -- hypothesis battery -------------------------------------------------------

def test_hypotheses_quartic(pb_rot):
    model = builtin_family("quartic_radial", n=1, c=1.0)
    rep = check_hypotheses(model, pb_rot, index_ctx={"h0": (0, 0)})
    assert rep.holds("H0") is True
    assert rep.holds("H2") is True
    assert rep.holds("H3") is True
    assert rep.holds("HX3") is True  # 0 + 0 <= dim ker = 0


def test_hypotheses_zero_h0_window(pb_identity):
    # i_P(0) = 0, nu_P(0) = dim ker makes the small-window bound automatic
    model = builtin_family("quartic_radial", n=1, c=1.0)
    rep = check_hypotheses(model, pb_identity,
                           index_ctx={"h0": (0, pb_identity.dim_ker)})
    assert rep.holds("HX3") is True


def test_hypotheses_sqrt(pb_rot):
    model = builtin_family("subquadratic_sqrt", n=1)
    rep = check_hypotheses(model, pb_rot)
    assert rep.holds("H8") is True
    assert rep.holds("H9") is True
    assert rep.holds("HX1") == "indeterminate"
    with pytest.raises(MissingContext):
        require_orbit(rep)


def test_hypotheses_along_orbit(pb_rot):
    model = builtin_family("quartic_radial", n=1, c=1.0)
    ts = np.linspace(0, 2 * np.pi, 64)
    orbit = np.stack([np.cos(ts), np.sin(ts)], axis=1)  # unit circle
    rep = check_hypotheses(model, pb_rot, orbit=orbit)
    assert rep.holds("HX1") is True  # H'' = |x|^2 I + 2 x x^T >= 0
    assert rep.holds("HX2") is True
