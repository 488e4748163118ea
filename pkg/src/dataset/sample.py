"""
Labeled RGBD samples
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from src.grasping.camera import normalize_angle
from src.perception.preprocess import RgbdFrame
from src.utils.errors import ValidationError


@dataclass
class GraspRectangle:
    """
    Grasp rectangle in image pixels

    The angle follows the image convention used everywhere else (y axis up,
    principal interval (-pi/2, pi/2]). width is the gripper opening (the value
    regressed by the width head); length is the rectangle's span along the
    closing axis, of which the center third becomes the label mask.
    """

    x: float
    y: float
    angle: float
    width: float
    length: float
    height_label: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.width) and self.width > 0):
            raise ValidationError(f"Grasp width must be positive, got {self.width}")
        if not (math.isfinite(self.length) and self.length > 0):
            raise ValidationError(f"Grasp length must be positive, got {self.length}")
        if not (math.isfinite(self.height_label) and self.height_label >= 0):
            raise ValidationError(f"Grasp height label must be >= 0, got {self.height_label}")
        self.angle = normalize_angle(self.angle)

    @property
    def center(self):
        return self.x, self.y

    def inside(self, shape):
        height, width = shape[:2]
        return 0.0 <= self.x <= width - 1 and 0.0 <= self.y <= height - 1

    def to_dict(self):
        return {
            "x_px": float(self.x),
            "y_px": float(self.y),
            "theta_rad": float(self.angle),
            "width_px": float(self.width),
            "length_px": float(self.length),
            "height_mm": float(self.height_label),
        }

    @classmethod
    def from_dict(cls, values):
        return cls(
            x=float(values["x_px"]),
            y=float(values["y_px"]),
            angle=float(values["theta_rad"]),
            width=float(values["width_px"]),
            length=float(values["length_px"]),
            height_label=float(values["height_mm"]),
        )


@dataclass
class Sample:
    """One training example: frame, grasp labels and table depth"""

    frame: RgbdFrame
    grasps: list = field(default_factory=list)
    d_t: float = 1000.0
    id: str = "sample"

    @property
    def shape(self):
        return self.frame.shape

    def validate(self):
        """
        Check that every grasp center lies in the image

        Raises:
            ValidationError: Naming the first offending grasp
        """
        for index, grasp in enumerate(self.grasps):
            if not grasp.inside(self.shape):
                raise ValidationError(
                    f"Sample {self.id}: grasp {index} center ({grasp.x:.1f}, {grasp.y:.1f}) "
                    f"is outside the {self.shape[1]} x {self.shape[0]} image"
                )
        return self

    def copy(self):
        frame = replace(
            self.frame,
            rgb=self.frame.rgb.copy(),
            depth=self.frame.depth.copy(),
            valid_mask=np.array(self.frame.valid_mask, copy=True),
        )
        return Sample(frame=frame, grasps=[replace(g) for g in self.grasps], d_t=self.d_t, id=self.id)
