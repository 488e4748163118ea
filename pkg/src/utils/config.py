"""
Run configuration: defaults < flat YAML file < command-line overrides
"""

from dataclasses import asdict, dataclass, fields

import yaml

from src.utils.errors import ConfigurationError


@dataclass
class RunConfig:
    """Every tunable of the command-line tool, flat"""

    seed: int = 0
    # network and training
    layer_table: str = "default"
    input_size: int = 300
    epochs: int = 100
    batch_size: int = 32
    micro_batch: int = 8
    learning_rate: float = 1e-3
    mode: str = "fsg"
    augment: bool = True
    eval_fraction: float = 0.1
    # synthetic data
    n_samples: int = 200
    n_scenes: int = 100
    image_size: int = 300
    focal: float = 600.0
    camera_height: float = 1000.0
    material_mix: str = "opaque:0.25,specular:0.25,transparent:0.25,flat_textured:0.25"
    # preprocessing
    sigma_s: float = 25.0
    sigma_r: float = 30.0
    filter_iterations: int = 3
    temporal_alpha: float = 0.4
    temporal_delta: float = 20.0
    inpaint_radius: int = 3
    # extraction and planning
    quality_sigma: float = 2.0
    plateau_epsilon: float = 1e-4
    h_c: float = 15.0
    z1: float = 5.0
    z_pre: float = 150.0
    # gripper
    max_opening: float = 110.0
    finger_thickness: float = 8.0
    compliance_band: float = 15.0

    def to_dict(self):
        return asdict(self)

    def material_weights(self):
        """Parse 'name:weight,name:weight' into a dict"""
        weights = {}
        for item in self.material_mix.split(","):
            item = item.strip()
            if not item:
                continue
            name, sep, value = item.partition(":")
            if not sep:
                raise ConfigurationError(f"Material mix entry '{item}' is not name:weight")
            try:
                weights[name.strip()] = float(value)
            except ValueError:
                raise ConfigurationError(f"Material mix weight '{value}' is not a number")
        if not weights:
            raise ConfigurationError("Material mix is empty")
        return weights


def _coerce(name, value, kind):
    if isinstance(value, (dict, list, tuple)):
        raise ConfigurationError(f"Config key '{name}' must be a scalar, got {type(value).__name__}")
    try:
        if kind is bool:
            if isinstance(value, str):
                lowered = value.strip().lower()
                if lowered not in ("true", "false", "yes", "no", "1", "0"):
                    raise ValueError(value)
                return lowered in ("true", "yes", "1")
            return bool(value)
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"Config key '{name}' expects {kind.__name__}, got {value!r}")


def _apply(config, values, source):
    kinds = {f.name: type(f.default) for f in fields(RunConfig)}
    for name, value in values.items():
        if name not in kinds:
            raise ConfigurationError(f"Unknown config key '{name}' in {source}")
        if value is None:
            continue
        setattr(config, name, _coerce(name, value, kinds[name]))


def load_run_config(path=None, overrides=None):
    """
    Resolve the run configuration

    Args:
        path (str): Optional flat YAML file
        overrides (dict): Values from command-line flags; None entries are ignored

    Returns:
        RunConfig: Resolved configuration

    Raises:
        ConfigurationError: Unknown keys, non-scalar values or unreadable file
    """
    config = RunConfig()
    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                values = yaml.safe_load(f) or {}
        except OSError as e:
            raise ConfigurationError(f"Failed to read config file {path}: {str(e)}")
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Failed to parse config file {path}: {str(e)}")
        if not isinstance(values, dict):
            raise ConfigurationError(f"Config file {path} must hold a flat key-value mapping")
        _apply(config, {str(k).replace("-", "_"): v for k, v in values.items()}, path)
    if overrides:
        _apply(config, overrides, "command-line flags")
    return config
