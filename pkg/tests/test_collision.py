import numpy as np
import pytest

from physid.collision import (Environment, HalfSpace, detect, resolve,
                              resolve_all)
from physid.errors import InvalidParameter
from physid.integrator import SoftBodyState


def body(positions, velocities=None):
    positions = np.asarray(positions, float)
    n = len(positions)
    vel = np.zeros((n, 3)) if velocities is None else np.asarray(velocities, float)
    return SoftBodyState(positions.copy(), vel.copy(), np.ones(n))


GROUND = Environment()


class TestDetect:
    def test_above_ground_no_contact(self):
        assert detect(body([[0.0, 0.5, 0.0]]), GROUND) == []

    def test_penetrating_node(self):
        contacts = detect(body([[0.0, -0.1, 0.0]]), GROUND)
        assert len(contacts) == 1
        c = contacts[0]
        assert c.node == 0
        assert c.signed_distance == pytest.approx(-0.1)
        np.testing.assert_allclose(c.normal, [0, 1, 0])

    def test_exactly_on_plane_no_contact(self):
        assert detect(body([[0.0, 0.0, 0.0]]), GROUND) == []

    def test_deepest_half_space_wins(self):
        env = Environment(planes=(
            HalfSpace((0, 0, 0), (0, 1, 0)),
            HalfSpace((0.5, 0, 0), (1, 0, 0)),
        ))
        contacts = detect(body([[0.1, -0.05, 0.0]]), env)
        assert len(contacts) == 1
        np.testing.assert_allclose(contacts[0].normal, [1, 0, 0])
        assert contacts[0].signed_distance == pytest.approx(-0.4)

    def test_unit_normals_enforced(self):
        env = Environment(planes=(HalfSpace((0, 0, 0), (0, 2, 0)),))
        np.testing.assert_allclose(env.planes[0].normal, [0, 1, 0])
        with pytest.raises(InvalidParameter):
            HalfSpace((0, 0, 0), (0, 0, 0))


class TestResolve:
    def test_restitution_reflects_normal_velocity(self):
        s = body([[0.0, -0.01, 0.0]], velocities=[[0.0, -1.0, 0.0]])
        out = resolve(s, detect(s, GROUND), restitution=0.2, friction=0.0)
        np.testing.assert_array_equal(out.velocities[0], [0.0, 0.2, 0.0])

    def test_frictionless_keeps_tangential(self):
        s = body([[0.0, -0.01, 0.0]], velocities=[[1.0, -1.0, 0.0]])
        out = resolve(s, detect(s, GROUND), restitution=0.0, friction=0.0)
        np.testing.assert_allclose(out.velocities[0], [1.0, 0.0, 0.0])

    def test_full_friction_coulomb_clamp(self):
        s = body([[0.0, -0.01, 0.0]], velocities=[[1.0, -1.0, 0.0]])
        out = resolve(s, detect(s, GROUND), restitution=0.0, friction=1.0)
        np.testing.assert_allclose(out.velocities[0], [0.0, 0.0, 0.0], atol=1e-12)

    def test_position_projected_out(self):
        s = body([[0.3, -0.1, 0.2]])
        out = resolve(s, detect(s, GROUND), restitution=0.2, friction=0.5)
        np.testing.assert_allclose(out.positions[0], [0.3, 0.0, 0.2], atol=1e-15)

    def test_no_contacts_bit_identical(self):
        s = body([[0.0, 1.0, 0.0]], velocities=[[0.1, 0.2, 0.3]])
        out = resolve(s, [], restitution=0.2, friction=0.5)
        assert out is s

    def test_separating_velocity_untouched(self):
        # penetrating but already moving out: project position, keep velocity
        s = body([[0.0, -0.05, 0.0]], velocities=[[0.0, 2.0, 0.0]])
        out = resolve(s, detect(s, GROUND), restitution=0.5, friction=1.0)
        np.testing.assert_allclose(out.velocities[0], [0.0, 2.0, 0.0])
        assert out.positions[0, 1] == pytest.approx(0.0, abs=1e-15)

    def test_parameter_validation(self):
        s = body([[0.0, -0.1, 0.0]])
        with pytest.raises(InvalidParameter):
            resolve(s, [], restitution=1.5, friction=0.0)
        with pytest.raises(InvalidParameter):
            resolve(s, [], restitution=0.0, friction=-0.1)


def test_fuzzed_resolution_removes_penetration_and_energy():
    rng = np.random.default_rng(19)
    env = Environment(planes=(
        HalfSpace((0, 0, 0), (0, 1, 0)),
        HalfSpace((0, 0, -1), (0.2, 1.0, 0.3)),
    ))
    for _ in range(50):
        n = rng.integers(1, 30)
        s = body(rng.normal(scale=0.5, size=(n, 3)),
                 velocities=rng.normal(scale=2.0, size=(n, 3)))
        e = float(rng.uniform(0, 1))
        mu = float(rng.uniform(0, 1))
        env_e = Environment(planes=env.planes, restitution=e)
        ke_before = 0.5 * np.sum(s.velocities ** 2)
        out = resolve_all(s, env_e, friction=mu)
        for plane in env.planes:
            d = (out.positions - plane.point) @ plane.normal
            assert d.min() >= -1e-9
        ke_after = 0.5 * np.sum(out.velocities ** 2)
        assert ke_after <= ke_before + 1e-12
