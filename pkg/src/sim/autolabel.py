"""
Ground-truth grasp labels for synthetic scenes
"""

import math

from src.dataset.sample import GraspRectangle, Sample
from src.grasping.camera import world_point_to_pixel, world_to_image_angle
from src.perception.preprocess import RgbdFrame
from src.sim.corrupt import corrupt_depth
from src.sim.render import render_ideal

OPENING_MARGIN_MM = 20.0
DEFAULT_MAX_OPENING_MM = 110.0

# Round objects get this many evenly spaced grasp angles.
ROUND_GRASPS = 4


def autolabel(scene, max_opening=DEFAULT_MAX_OPENING_MM, margin=OPENING_MARGIN_MM):
    """
    Antipodal grasps across the minor axis of every object

    The rectangle is centered on the projected center of the object's top face.
    Width and length both equal the gripper opening (minor dimension + margin)
    projected at the top height.

    Returns:
        list: GraspRectangle labels; empty when the object is wider than max_opening
    """
    camera = scene.camera
    grasps = []
    for obj in scene.objects:
        opening_mm = obj.minor_dimension + margin
        if opening_mm > max_opening:
            continue
        x, y, z_depth = world_point_to_pixel((obj.center[0], obj.center[1], obj.height), camera)
        opening_px = opening_mm * camera.fx / z_depth
        if obj.is_round:
            yaws = [obj.minor_axis_yaw + k * math.pi / ROUND_GRASPS for k in range(ROUND_GRASPS)]
        else:
            yaws = [obj.minor_axis_yaw]
        for yaw in yaws:
            grasps.append(
                GraspRectangle(
                    x=x,
                    y=y,
                    angle=world_to_image_angle(yaw, camera),
                    width=opening_px,
                    length=opening_px,
                    height_label=obj.height,
                )
            )
    return grasps


def labeled_sample(scene, rng, sample_id="sample", corruption=None, max_opening=DEFAULT_MAX_OPENING_MM):
    """
    Render, corrupt and label one scene

    Returns:
        tuple: (Sample with fuzzy depth, RenderResult of the ideal scene)
    """
    rendered = render_ideal(scene)
    materials = [obj.material for obj in scene.objects]
    depth, valid = corrupt_depth(
        rendered.depth, rendered.instance_mask, materials, rng, table_depth=rendered.table_depth, config=corruption
    )
    frame = RgbdFrame(rgb=rendered.rgb, depth=depth, valid_mask=valid, camera=scene.camera)
    grasps = autolabel(scene, max_opening=max_opening)
    return Sample(frame=frame, grasps=grasps, d_t=scene.camera.d_t, id=sample_id), rendered
