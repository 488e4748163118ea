"""
Sample persistence: {id}_rgb.png, {id}_depth.png (uint16 mm) and {id}_meta.json
"""

import json
import os

import cv2
import numpy as np

from src.dataset.sample import GraspRectangle, Sample
from src.grasping.camera import CameraModel
from src.perception.preprocess import RgbdFrame
from src.utils.errors import (
    BitDepthError,
    DataError,
    GeometryError,
    ImageSizeMismatchError,
    MetadataError,
    MissingFileError,
    SampleFormatError,
    ValidationError,
)

MANIFEST_NAME = "manifest.json"
_DEPTH_MAX = np.iinfo(np.uint16).max


def sample_paths(directory, sample_id):
    base = os.path.join(str(directory), sample_id)
    return {"rgb": f"{base}_rgb.png", "depth": f"{base}_depth.png", "meta": f"{base}_meta.json"}


def save_sample(directory, sample):
    """
    Write a sample triple

    Depth is rounded to whole millimeters.

    Args:
        directory (str): Output directory (created if missing)
        sample (Sample): Sample with a camera attached to its frame
    """
    os.makedirs(str(directory), exist_ok=True)
    paths = sample_paths(directory, sample.id)
    depth = np.round(np.asarray(sample.frame.depth, dtype=np.float64))
    if depth.min() < 0 or depth.max() > _DEPTH_MAX:
        raise DataError(f"Sample {sample.id}: depth outside the 16-bit millimeter range")
    camera = sample.frame.camera or CameraModel.default(image_size=sample.shape[0], height_mm=sample.d_t)

    if not cv2.imwrite(paths["rgb"], cv2.cvtColor(sample.frame.rgb.astype(np.uint8), cv2.COLOR_RGB2BGR)):
        raise OSError(f"Failed to write {paths['rgb']}")
    if not cv2.imwrite(paths["depth"], depth.astype(np.uint16)):
        raise OSError(f"Failed to write {paths['depth']}")

    meta = {
        "id": sample.id,
        "camera": camera.to_dict(),
        "d_t_mm": float(sample.d_t),
        "grasps": [grasp.to_dict() for grasp in sample.grasps],
    }
    with open(paths["meta"], "w", encoding="utf-8") as f:
        f.write(json.dumps(meta, indent=2, sort_keys=True))


def _require(path):
    if not os.path.isfile(path):
        raise MissingFileError(f"Missing sample file: {path}", path=path)


def _read_rgb(path):
    image = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if image is None:
        raise SampleFormatError(f"Failed to decode image {path}")
    if image.dtype != np.uint8 or image.ndim != 3 or image.shape[2] != 3:
        raise BitDepthError(f"{path}: expected 8-bit 3-channel RGB, got {image.dtype} with shape {image.shape}")
    return cv2.cvtColor(image, cv2.COLOR_BGR2RGB)


def _read_depth(path):
    image = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if image is None:
        raise SampleFormatError(f"Failed to decode image {path}")
    if image.dtype != np.uint16 or image.ndim != 2:
        raise BitDepthError(f"{path}: expected 16-bit single-channel depth, got {image.dtype} with shape {image.shape}")
    return image.astype(np.float32)


def _read_meta(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            meta = json.load(f)
        camera = meta["camera"]
        d_t = float(meta["d_t_mm"])
        grasps = meta["grasps"]
    except (ValueError, KeyError, TypeError) as e:
        raise MetadataError(f"Failed to parse metadata {path}: {str(e)}")
    try:
        camera = CameraModel.from_dict(camera, d_t)
    except (KeyError, TypeError, ValueError) as e:
        raise MetadataError(f"Failed to parse camera in {path}: {str(e)}")
    except GeometryError as e:
        raise ValidationError(f"Invalid camera in {path}: {str(e)}")
    parsed = []
    for index, values in enumerate(grasps):
        try:
            parsed.append(GraspRectangle.from_dict(values))
        except (KeyError, TypeError, ValueError) as e:
            raise MetadataError(f"Failed to parse grasp {index} in {path}: {str(e)}")
        except ValidationError as e:
            raise ValidationError(f"{path}: grasp {index}: {str(e)}")
    if d_t <= 0:
        raise ValidationError(f"{path}: table depth must be positive, got {d_t}")
    return camera, d_t, parsed


def load_sample(directory, sample_id):
    """
    Read a sample triple

    Raises:
        MissingFileError, BitDepthError, ImageSizeMismatchError, MetadataError, ValidationError
    """
    paths = sample_paths(directory, sample_id)
    for path in paths.values():
        _require(path)
    rgb = _read_rgb(paths["rgb"])
    depth = _read_depth(paths["depth"])
    if rgb.shape[:2] != depth.shape:
        raise ImageSizeMismatchError(
            f"Sample {sample_id}: RGB {rgb.shape[:2]} and depth {depth.shape} differ in size"
        )
    camera, d_t, grasps = _read_meta(paths["meta"])
    frame = RgbdFrame(rgb=rgb, depth=depth, camera=camera)
    return Sample(frame=frame, grasps=grasps, d_t=d_t, id=sample_id).validate()


def save_manifest(directory, entries, seed=None):
    """Write manifest.json listing sample ids with their generation seeds"""
    manifest = {"seed": seed, "samples": list(entries)}
    path = os.path.join(str(directory), MANIFEST_NAME)
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def list_sample_ids(directory):
    """Ids from the manifest, or from the *_meta.json files when there is none"""
    directory = str(directory)
    if not os.path.isdir(directory):
        raise MissingFileError(f"Dataset directory not found: {directory}", path=directory)
    manifest_path = os.path.join(directory, MANIFEST_NAME)
    if os.path.isfile(manifest_path):
        try:
            with open(manifest_path, "r", encoding="utf-8") as f:
                return [entry["id"] for entry in json.load(f)["samples"]]
        except (ValueError, KeyError, TypeError) as e:
            raise MetadataError(f"Failed to parse manifest {manifest_path}: {str(e)}")
    suffix = "_meta.json"
    return sorted(name[: -len(suffix)] for name in os.listdir(directory) if name.endswith(suffix))


def load_dataset(directory):
    """
    Load every sample of a dataset directory

    Raises:
        DataError: If the directory holds no sample
    """
    ids = list_sample_ids(directory)
    if not ids:
        raise DataError(f"No samples found in {directory}")
    return [load_sample(directory, sample_id) for sample_id in ids]


def split(dataset, eval_fraction=0.1, seed=0):
    """
    Seeded train/eval partition

    Returns:
        tuple: (train list, eval list)

    Raises:
        DataError: If the dataset has fewer than 10 samples
    """
    dataset = list(dataset)
    if len(dataset) < 10:
        raise DataError(f"Splitting needs at least 10 samples, got {len(dataset)}")
    if not 0.0 < eval_fraction < 1.0:
        raise DataError(f"Eval fraction must be in (0, 1), got {eval_fraction}")
    n_eval = min(len(dataset) - 1, max(1, int(round(len(dataset) * eval_fraction))))
    order = np.random.default_rng(seed).permutation(len(dataset))
    eval_set = [dataset[i] for i in order[:n_eval]]
    train_set = [dataset[i] for i in order[n_eval:]]
    return train_set, eval_set
