import numpy as np
import pytest

from ptwist import (
    gamma_p_path,
    rotation_block_matrix,
    standard_j,
    unitary_identification,
    validate_p,
)
from ptwist.errors import (
    LogarithmBranchAmbiguous,
    NotFiniteOrder,
    NotOrthogonalSymplectic,
    NotSymplectic,
)
from ptwist.symplectic import PBoundary, real_from_complex

from conftest import rotation_2d


def test_standard_j_identities():
    for n in (1, 2, 3):
        J = standard_j(n)
        assert np.allclose(J @ J, -np.eye(2 * n))
        assert np.allclose(J.T, -J)


def test_identity_boundary(pb_identity):
    assert pb_identity.k == 1
    assert pb_identity.dim_ker == 2
    assert np.allclose(pb_identity.angles, [0.0])


def test_rotation_boundary_order_and_kernel(pb_rot):
    # oracle: direct matrix powers
    R = rotation_2d(2 * np.pi / 3)
    assert np.linalg.norm(np.linalg.matrix_power(R, 3) - np.eye(2)) < 1e-14
    assert np.linalg.norm(np.linalg.matrix_power(R, 2) - np.eye(2)) > 1e-6
    assert pb_rot.k == 3
    assert pb_rot.dim_ker == 0
    assert np.allclose(pb_rot.angles, [2 * np.pi / 3])


def test_reflection_boundary(pb_reflection):
    P = np.diag([-1.0, 1.0, -1.0, 1.0])
    assert np.allclose(P @ P, np.eye(4))  # oracle: squares to identity
    assert pb_reflection.k == 2
    assert pb_reflection.dim_ker == 2
    assert np.allclose(sorted(pb_reflection.angles), [0.0, np.pi])


def test_accepted_boundaries_satisfy_tolerances(pb_rot, pb_identity,
                                                pb_reflection):
    for pb in (pb_rot, pb_identity, pb_reflection):
        J = pb.J
        assert np.linalg.norm(pb.P.T @ J @ pb.P - J) <= 1e-12
        assert np.linalg.norm(
            np.linalg.matrix_power(pb.P, pb.k) - np.eye(2 * pb.n)) <= 1e-10
        for j in range(1, pb.k):
            assert np.linalg.norm(
                np.linalg.matrix_power(pb.P, j) - np.eye(2 * pb.n)) > 1e-6


def test_rejects_non_symplectic():
    with pytest.raises(NotSymplectic):
        validate_p(np.diag([2.0, 3.0]), 1.0)


def test_rejects_infinite_order():
    with pytest.raises(NotFiniteOrder):
        validate_p(rotation_2d(1.0), 1.0, k_max=32)  # 1 rad is irrational / pi


def test_unitary_identification_examples(pb_rot, pb_identity, pb_reflection):
    pairs = unitary_identification(pb_rot)
    assert len(pairs) == 1
    theta, xi = pairs[0]
    assert abs(theta - 2 * np.pi / 3) < 1e-12
    assert abs(np.linalg.norm(xi) - 1.0) < 1e-12

    assert all(abs(th) < 1e-12 for th, _ in unitary_identification(pb_identity))
    angles = sorted(th for th, _ in unitary_identification(pb_reflection))
    assert np.allclose(angles, [0.0, np.pi])


def test_unitary_round_trip(pb_rot, pb_reflection):
    for pb in (pb_rot, pb_reflection):
        pairs = unitary_identification(pb)
        U = sum(np.exp(1j * th) * np.outer(xi, xi.conj()) for th, xi in pairs)
        assert np.linalg.norm(real_from_complex(U) - pb.P) < 1e-10


def test_unitary_identification_requires_orthogonal():
    # symplectic but not orthogonal; built by hand since such a matrix has
    # no finite order
    P = np.diag([2.0, 0.5])
    pb = PBoundary(n=1, P=P, tau=1.0, k=1, fixed_basis=np.zeros((2, 0)))
    with pytest.raises(NotOrthogonalSymplectic):
        unitary_identification(pb)


def test_gamma_path_endpoints_and_halfway(pb_rot):
    assert np.linalg.norm(gamma_p_path(pb_rot, 0.0) - np.eye(2)) < 1e-12
    tau = pb_rot.tau
    assert np.linalg.norm(gamma_p_path(pb_rot, tau) - pb_rot.P) < 1e-10
    # half-angle rotation oracle
    assert np.linalg.norm(gamma_p_path(pb_rot, tau / 2)
                          - rotation_2d(np.pi / 3)) < 1e-10


def test_gamma_path_identity_twist(pb_identity):
    for t in (0.0, 0.3, 1.0):
        assert np.linalg.norm(gamma_p_path(pb_identity, t) - np.eye(2)) < 1e-12


def test_gamma_path_symplectic_along_the_way(pb_rot):
    J = pb_rot.J
    for t in np.linspace(0.0, pb_rot.tau, 20):
        G = gamma_p_path(pb_rot, t)
        assert np.linalg.norm(G.T @ J @ G - J) < 1e-10


def test_gamma_path_branch_flag(pb_reflection):
    with pytest.raises(LogarithmBranchAmbiguous):
        gamma_p_path(pb_reflection, 0.5)
    for branch in (+1, -1):
        G = gamma_p_path(pb_reflection, pb_reflection.tau, pi_branch=branch)
        assert np.linalg.norm(G - pb_reflection.P) < 1e-10


def test_rotation_block_matrix_matches_plane_rotation():
    assert np.allclose(rotation_block_matrix([0.7]), rotation_2d(0.7))
