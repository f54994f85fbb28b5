import os
import sys

sys.path.insert(1, os.path.join(sys.path[0], ".."))

import math

import numpy
import pytest

from heed.config import SceneConfig
from heed.exceptions import ShapeError
from heed.sim.physics import step
from heed.sim.scene import ArmState
from heed.sim.scene import DistractorSprite
from heed.sim.scene import Scene
from heed.sim.scene import SceneObject
from heed.sim.scene import forward_kinematics
from heed.sim.scene import inverse_kinematics
from heed.sim.scene import make_scene


def _scene_with_tip_over(x, y, aperture=1.0, objects=None):
    config = SceneConfig()
    joints = inverse_kinematics((x, y), config.link_lengths, (5.0, 0.0))
    arm = ArmState(joints=numpy.append(joints, aperture), link_lengths=numpy.array(config.link_lengths))
    return Scene(objects=objects or [], arm=arm, config=config)


def test_step_does_not_modify_input():
    scene = make_scene(SceneConfig(), 1)
    before = scene.arm.joints.copy()
    nxt = step(scene, numpy.array([0.0, 0.0, 0.0, 0.0]))
    assert numpy.array_equal(scene.arm.joints, before)
    assert nxt.step_index == 1
    assert scene.step_index == 0


def test_rate_limit():
    scene = make_scene(SceneConfig(), 1)
    nxt = step(scene, numpy.array([0.0, 1.0, -1.0, 0.0]))
    delta = nxt.arm.joints - scene.arm.joints
    assert numpy.allclose(numpy.abs(delta), [0.15, 0.15, 0.15, 0.25])


def test_holding_still_changes_nothing():
    scene = make_scene(SceneConfig(), 2)
    nxt = step(scene, scene.arm.joints.copy())
    assert numpy.array_equal(nxt.arm.joints, scene.arm.joints)
    for a, b in zip(scene.objects, nxt.objects):
        assert numpy.array_equal(a.position, b.position)


def test_out_of_limit_command_is_clamped_and_logged():
    scene = make_scene(SceneConfig(), 1)
    events = []
    nxt = step(scene, numpy.array([math.pi / 2, 0.0, 0.0, 5.0]), events)
    assert nxt.arm.joints[3] == 1.0
    assert events[0]["event"] == "clamped"
    assert events[0]["step"] == 1


def test_wrong_command_shape():
    scene = make_scene(SceneConfig(), 1)
    with pytest.raises(ShapeError):
        step(scene, numpy.zeros(3))


def test_grasp_on_closing():
    obj = SceneObject(0, 0, numpy.array([6.0, 0.8]), 0.8)
    scene = _scene_with_tip_over(6.0, 0.8, aperture=0.4, objects=[obj])
    events = []
    nxt = step(scene, numpy.append(scene.arm.joints[:3], 0.0), events)
    assert nxt.arm.closed
    assert nxt.objects[0].held
    assert [e["event"] for e in events] == ["grasp"]
    assert events[0]["object"] == 0


def test_already_closed_gripper_does_not_grasp():
    obj = SceneObject(0, 0, numpy.array([6.0, 0.8]), 0.8)
    scene = _scene_with_tip_over(6.0, 0.8, aperture=0.1, objects=[obj])
    nxt = step(scene, scene.arm.joints.copy())
    assert not nxt.objects[0].held


def test_held_object_follows_tip_and_drops_on_release():
    obj = SceneObject(0, 0, numpy.array([6.0, 0.8]), 0.8, held=True)
    scene = _scene_with_tip_over(6.0, 0.8, aperture=0.0, objects=[obj])
    lift = inverse_kinematics((6.0, 3.0), scene.config.link_lengths, (5.0, 0.0), scene.arm.joints)
    for _ in range(30):
        scene = step(scene, numpy.append(lift, 0.0))
    assert scene.objects[0].held
    assert numpy.allclose(scene.objects[0].position, forward_kinematics(scene.arm, scene.base))
    assert scene.objects[0].position[1] > 2.0

    events = []
    for _ in range(5):
        scene = step(scene, numpy.append(lift, 1.0), events)
    assert not scene.objects[0].held
    assert scene.objects[0].position[1] == scene.objects[0].size
    assert "release" in [e["event"] for e in events]


def test_closed_tip_pushes_object_left():
    obj = SceneObject(0, 0, numpy.array([5.8, 0.8]), 0.8)
    scene = _scene_with_tip_over(6.5, 0.8, aperture=0.0, objects=[obj])
    target = inverse_kinematics((5.5, 0.8), scene.config.link_lengths, (5.0, 0.0), scene.arm.joints)
    for _ in range(20):
        scene = step(scene, numpy.append(target, 0.0))
    tip = forward_kinematics(scene.arm, scene.base)
    assert scene.objects[0].position[0] < 5.8
    assert scene.objects[0].position[0] < tip[0]
    assert not scene.objects[0].held


def test_open_gripper_never_pushes():
    obj = SceneObject(0, 0, numpy.array([5.8, 0.8]), 0.8)
    scene = _scene_with_tip_over(6.5, 0.8, aperture=1.0, objects=[obj])
    target = inverse_kinematics((5.5, 0.8), scene.config.link_lengths, (5.0, 0.0), scene.arm.joints)
    for _ in range(20):
        scene = step(scene, numpy.append(target, 1.0))
    assert numpy.array_equal(scene.objects[0].position, [5.8, 0.8])


def test_untouched_objects_never_move():
    scene = make_scene(SceneConfig(), 4)
    start = [o.position.copy() for o in scene.objects]
    rng = numpy.random.default_rng(0)
    for _ in range(30):
        # swing high above the table with the gripper open
        scene = step(scene, numpy.array([rng.uniform(1.2, 1.9), rng.uniform(-0.3, 0.3), 0.0, 1.0]))
    for before, obj in zip(start, scene.objects):
        assert numpy.array_equal(before, obj.position)


def test_sprites_advance_by_velocity():
    scene = make_scene(SceneConfig(), 4)
    scene.distractors.append(DistractorSprite("hand", (10.0, 5.0), (-0.5, 0.0)))
    for _ in range(4):
        scene = step(scene, scene.arm.joints.copy())
    assert numpy.allclose(scene.distractors[0].position, [8.0, 5.0])


if __name__ == "__main__":  # pragma: no cover
    from tests import run_tests

    run_tests()
