"""
Unit tests for the synthetic world: scenes, rendering, corruption, labels and the oracle
"""

import math

import numpy as np
import pytest

from src.grasping.camera import CameraModel
from src.grasping.extract import ImageGrasp
from src.grasping.planner import GraspPlan, PrimitiveKind, Waypoint, plan_grasp
from src.sim.autolabel import autolabel, labeled_sample
from src.sim.benchmark import scene_rngs
from src.sim.corrupt import corrupt_depth
from src.sim.oracle import GripperModel, evaluate_plan
from src.sim.render import render_ideal
from src.sim.scene import MATERIALS, CatalogParams, Scene, SceneObject, generate_scene
from src.utils.errors import ConfigurationError, GenerationError, ParameterError


def make_plan(x=0.0, y=0.0, z=20.0, theta=0.0, opening=60.0, close_on_retreat=False, primitive=None):
    if primitive is None:
        primitive = PrimitiveKind.FLAT_SMALL if close_on_retreat else PrimitiveKind.NORMAL_SIZED
    return GraspPlan(
        primitive=primitive,
        approach=Waypoint(x, y, 150.0),
        grasp=Waypoint(x, y, z),
        retreat=Waypoint(x, y, 150.0),
        theta_w=theta,
        open_width_mm=opening,
        close_on_retreat=close_on_retreat,
    )


def box_scene(size=(80.0, 40.0, 60.0), center=(0.0, 0.0), yaw=0.0, material="opaque", camera=None):
    obj = SceneObject("box", center, yaw, size, material)
    return Scene(objects=[obj], camera=camera or CameraModel.default())


class TestGenerateScene:
    """Test cases for generate_scene"""

    def test_deterministic(self):
        """Test that one seed yields one scene"""
        a = generate_scene(np.random.default_rng(12))
        b = generate_scene(np.random.default_rng(12))
        assert a.target.to_dict() == b.target.to_dict()
        assert a.target.albedo == b.target.albedo

    def test_flat_objects_are_thin(self):
        """Test that flat_textured draws stay within 2-10 mm"""
        params = CatalogParams(material_mix={"flat_textured": 1.0})
        for rng in scene_rngs(3, 50):
            scene = generate_scene(rng, params)
            assert scene.target.material == "flat_textured"
            assert 2.0 <= scene.target.height <= 10.0

    def test_material_mixture(self):
        """Test material counts over 1000 scenes against binomial 99.9% bounds"""
        counts = {m: 0 for m in MATERIALS}
        for rng in scene_rngs(0, 1000):
            counts[generate_scene(rng).target.material] += 1
        for material, count in counts.items():
            assert 205 <= count <= 295, f"{material}: {count}"

    def test_objects_in_view(self):
        """Test that the object top outline projects inside the image"""
        params = CatalogParams()
        for rng in scene_rngs(5, 20):
            scene = generate_scene(rng, params)
            rendered = render_ideal(scene)
            mask = rendered.instance_mask > 0
            assert mask.any()
            assert not mask[0].any() and not mask[-1].any()
            assert not mask[:, 0].any() and not mask[:, -1].any()

    def test_impossible_placement(self):
        """Test that an unreachable workspace raises GenerationError"""
        params = CatalogParams(workspace_radius=1e5, max_retries=3)
        with pytest.raises(GenerationError):
            generate_scene(np.random.default_rng(0), params)

    def test_bad_catalog(self):
        """Test catalog validation"""
        with pytest.raises(ConfigurationError):
            CatalogParams(material_mix={"glass": 1.0})
        with pytest.raises(ConfigurationError):
            CatalogParams(flat_height_range=(2.0, 12.0))


class TestRenderIdeal:
    """Test cases for render_ideal"""

    def test_empty_scene(self):
        """Test that an empty scene is the table plane at d_t"""
        rendered = render_ideal(Scene(objects=[], camera=CameraModel.default()))
        np.testing.assert_allclose(rendered.depth, 1000.0, rtol=1e-6)
        assert not rendered.instance_mask.any()
        assert rendered.rgb.shape == (300, 300, 3) and rendered.rgb.dtype == np.uint8

    def test_box_top_depth(self):
        """Test that a centered box shows its top face at d_t - h"""
        rendered = render_ideal(box_scene())
        assert rendered.depth.min() == pytest.approx(940.0, abs=1e-3)
        assert rendered.depth[150, 150] == pytest.approx(940.0, abs=1e-3)
        assert rendered.instance_mask[150, 150] == 1
        assert rendered.table_depth[150, 150] == pytest.approx(1000.0, abs=1e-3)

    def test_box_area(self):
        """Test the instance mask area against the projected top face"""
        camera = CameraModel.default(image_size=400, focal=1500.0)
        rendered = render_ideal(box_scene(size=(60.0, 40.0, 50.0), yaw=0.3, camera=camera))
        scale = 1500.0 / 950.0
        expected = 60.0 * scale * 40.0 * scale
        assert rendered.instance_mask.sum() == pytest.approx(expected, rel=0.02)

    def test_cylinder_area(self):
        """Test the instance mask area of an upright cylinder"""
        camera = CameraModel.default(image_size=400, focal=1500.0)
        obj = SceneObject("cylinder", (0.0, 0.0), 0.0, (50.0, 50.0, 80.0), "opaque")
        rendered = render_ideal(Scene(objects=[obj], camera=camera))
        expected = math.pi * (25.0 * 1500.0 / 920.0) ** 2
        assert rendered.instance_mask.sum() == pytest.approx(expected, rel=0.02)
        assert rendered.depth[200, 200] == pytest.approx(920.0, abs=1e-3)

    def test_transparent_shows_table(self):
        """Test that transparent objects blend with the table color"""
        opaque = render_ideal(box_scene(material="opaque"))
        clear = render_ideal(box_scene(material="transparent"))
        table = render_ideal(Scene(objects=[], camera=CameraModel.default()))
        a = np.abs(clear.rgb[150, 150].astype(int) - table.rgb[150, 150].astype(int)).sum()
        b = np.abs(opaque.rgb[150, 150].astype(int) - table.rgb[150, 150].astype(int)).sum()
        assert a < b


class TestCorruptDepth:
    """Test cases for corrupt_depth"""

    def setup_method(self):
        """Setup test fixtures"""
        self.depth = np.full((60, 60), 1000.0, dtype=np.float32)
        self.mask = np.zeros((60, 60), dtype=np.int32)
        self.mask[20:40, 20:40] = 1
        self.depth[20:40, 20:40] = 900.0
        self.table = np.full((60, 60), 1000.0, dtype=np.float32)

    def corrupt(self, material, seed=0):
        return corrupt_depth(self.depth, self.mask, [material], np.random.default_rng(seed), table_depth=self.table)

    def test_opaque_keeps_every_pixel(self):
        """Test that opaque objects only get noise"""
        depth, valid = self.corrupt("opaque")
        assert valid.all()
        assert abs(depth[20:40, 20:40].mean() - 900.0) < 1.0

    def test_specular_dropout(self):
        """Test that specular objects lose 40-80% of their pixels"""
        _, valid = self.corrupt("specular")
        invalid = 1.0 - valid[20:40, 20:40].mean()
        assert 0.4 <= invalid <= 0.8
        assert valid[self.mask == 0].all()

    def test_transparent_reads_table(self):
        """Test that a transparent object reads through to the table"""
        depth, valid = self.corrupt("transparent")
        on_object = valid[20:40, 20:40]
        assert 0.65 <= on_object.mean() <= 0.96
        assert abs(depth[20:40, 20:40][on_object].mean() - 1000.0) < 12.0

    def test_flat_blends_into_table(self):
        """Test that flat object depth moves toward the table"""
        self.depth[20:40, 20:40] = 995.0
        depth, valid = self.corrupt("flat_textured")
        assert valid.all()
        assert abs(depth[20:40, 20:40].mean() - 1000.0) < 3.0

    def test_background_only_sensor_noise(self):
        """Test that table pixels see only global noise"""
        depth, _ = self.corrupt("specular")
        background = self.mask == 0
        assert np.abs(depth[background] - 1000.0).max() <= 9.0
        assert np.all(depth == np.round(depth))

    def test_deterministic(self):
        """Test that one seed yields identical corruption"""
        a, va = self.corrupt("transparent", seed=7)
        b, vb = self.corrupt("transparent", seed=7)
        np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(va, vb)


class TestAutolabel:
    """Test cases for autolabel"""

    def test_box_minor_axis(self):
        """Test that an 80 x 40 box is grasped across its 40 mm side"""
        grasps = autolabel(box_scene())
        assert len(grasps) == 1
        assert abs(grasps[0].angle) == pytest.approx(math.pi / 2)
        assert grasps[0].width == pytest.approx(60.0 * 600.0 / 940.0)
        assert grasps[0].height_label == 60.0
        assert (grasps[0].x, grasps[0].y) == pytest.approx((149.5, 149.5))

    def test_rotation_equivariance(self):
        """Test that rotating the box by phi rotates the label by phi"""
        base = autolabel(box_scene(size=(40.0, 80.0, 30.0)))[0].angle
        for phi in (0.2, 0.7, -1.1):
            turned = autolabel(box_scene(size=(40.0, 80.0, 30.0), yaw=phi))[0].angle
            delta = math.remainder(turned - base - phi, math.pi)
            assert delta == pytest.approx(0.0, abs=1e-9)

    def test_cylinder_four_angles(self):
        """Test that round objects get four grasps 45 degrees apart"""
        obj = SceneObject("cylinder", (10.0, -20.0), 0.3, (50.0, 50.0, 90.0), "specular")
        grasps = autolabel(Scene(objects=[obj], camera=CameraModel.default()))
        angles = sorted(g.angle for g in grasps)
        assert len(grasps) == 4
        np.testing.assert_allclose(np.diff(angles), math.pi / 4, atol=1e-9)

    def test_too_wide(self):
        """Test that objects wider than the gripper get no label"""
        assert autolabel(box_scene(size=(110.0, 100.0, 40.0))) == []

    def test_labeled_sample(self):
        """Test the rendered, corrupted and labeled sample"""
        sample, rendered = labeled_sample(box_scene(material="specular"), np.random.default_rng(1), "s")
        assert sample.shape == (300, 300)
        assert not sample.frame.valid_mask.all()
        assert sample.grasps and sample.d_t == 1000.0
        assert rendered.depth[150, 150] == pytest.approx(940.0, abs=1e-3)


class TestOracle:
    """Test cases for evaluate_plan"""

    def setup_method(self):
        """Setup test fixtures"""
        self.scene = Scene(objects=[SceneObject("box", (0.0, 0.0), 0.0, (40.0, 80.0, 60.0), "opaque")], camera=None)
        self.gripper = GripperModel()

    def test_centered_plan_succeeds(self):
        """Test a perfect plan across the 40 mm side"""
        result = evaluate_plan(self.scene, make_plan(z=45.0, opening=60.0), self.gripper)
        assert result.success and result.failure_reason is None

    def test_offset_plan_misses(self):
        """Test that a plan far off the footprint misses"""
        result = evaluate_plan(self.scene, make_plan(x=100.0, z=45.0), self.gripper)
        assert result.to_dict() == {"success": False, "failure_reason": "misses_object"}

    def test_small_opening_lands_on_object(self):
        """Test that fingers starting inside the footprint fail"""
        assert evaluate_plan(self.scene, make_plan(opening=30.0), self.gripper).failure_reason == "finger_on_object"

    def test_depth_fooled_height(self):
        """Test that a grasp far above the top makes no contact"""
        assert evaluate_plan(self.scene, make_plan(z=80.0), self.gripper).failure_reason == "no_contact"
        assert evaluate_plan(self.scene, make_plan(z=75.0), self.gripper).success

    def test_gripper_limits(self):
        """Test opening and table checks"""
        assert evaluate_plan(self.scene, make_plan(opening=120.0), self.gripper).failure_reason == "opening_too_wide"
        assert evaluate_plan(self.scene, make_plan(z=-1.0), self.gripper).failure_reason == "below_table"

    def test_flat_plan_on_thin_object_needs_close_on_retreat(self):
        """Test that a FlatSmall plan on a card fails unless it closes on retreat"""
        card = Scene(objects=[SceneObject("box", (0.0, 0.0), 0.0, (50.0, 80.0, 3.0), "flat_textured")], camera=None)
        flat = make_plan(z=5.0, opening=70.0, primitive=PrimitiveKind.FLAT_SMALL)
        assert evaluate_plan(card, flat, self.gripper).failure_reason == "thin_object_not_lifted"
        assert evaluate_plan(card, make_plan(z=5.0, opening=70.0, close_on_retreat=True), self.gripper).success

    def test_other_primitives_on_thin_object(self):
        """Test that NormalSized and Direct plans on a 5 mm card succeed"""
        card = Scene(objects=[SceneObject("box", (0.0, 0.0), 0.0, (50.0, 80.0, 5.0), "flat_textured")], camera=None)
        for primitive in (PrimitiveKind.NORMAL_SIZED, PrimitiveKind.DIRECT):
            plan = make_plan(z=10.0, opening=70.0, primitive=primitive)
            assert evaluate_plan(card, plan, self.gripper).to_dict() == {"success": True, "failure_reason": None}

    def test_rigid_motion_invariance(self):
        """Test that moving scene and plan together keeps every outcome"""
        plans = [make_plan(z=45.0), make_plan(x=15.0, z=45.0), make_plan(opening=30.0), make_plan(z=80.0, theta=0.4)]
        phi, shift = 0.9, np.array([30.0, -25.0])
        c, s = math.cos(phi), math.sin(phi)
        moved_center = tuple(float(v) for v in shift)
        moved = Scene(objects=[SceneObject("box", moved_center, phi, (40.0, 80.0, 60.0), "opaque")], camera=None)
        for plan in plans:
            x, y = plan.grasp.x_mm, plan.grasp.y_mm
            mx, my = c * x - s * y + shift[0], s * x + c * y + shift[1]
            moved_plan = make_plan(mx, my, plan.z_grasp, plan.theta_w + phi, plan.open_width_mm)
            assert evaluate_plan(moved, moved_plan).to_dict() == evaluate_plan(self.scene, plan).to_dict()

    def test_ground_truth_plans_succeed(self):
        """Test that planning from autolabel labels with true depth succeeds on 100 scenes"""
        for rng in scene_rngs(21, 100):
            scene = generate_scene(rng)
            rendered = render_ideal(scene)
            for label in autolabel(scene):
                g_p = ImageGrasp(label.x, label.y, label.angle, label.width, 1.0, label.height_label)
                plan = plan_grasp(g_p, rendered.depth, scene.camera)
                result = evaluate_plan(scene, plan, self.gripper)
                assert result.success, (scene.target.to_dict(), result.failure_reason)

    def test_invalid_gripper(self):
        """Test that non-positive gripper dimensions are rejected"""
        with pytest.raises(ParameterError):
            GripperModel(finger_thickness=0.0)
