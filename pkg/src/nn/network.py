"""
FSG network: encoder-decoder of DO-Conv layers with five 1 x 1 output heads
"""

from dataclasses import dataclass, field, asdict

import numpy as np

from src.nn.doconv import DoConvParams, doconv_fold, doconv_fold_backward
from src.nn.functional import (
    ConvSpec,
    check_finite,
    conv2d,
    conv2d_backward,
    conv2d_fft,
    get_default_dtype,
    max_pool2,
    max_pool2_backward,
    relu,
    relu_backward,
    upsample_bilinear,
    upsample_bilinear_backward,
)
from src.utils.errors import ConfigurationError, DimensionError

INPUT_CHANNELS = 4
HEAD_NAMES = ("q", "sin2", "cos2", "width", "height")

# Width and height maps are normalized by these constants (pixels, millimeters).
WIDTH_SCALE_PX = 150.0
HEIGHT_SCALE_MM = 150.0


@dataclass(frozen=True)
class LayerSpec:
    """One row of the layer table"""

    name: str
    out_channels: int
    kernel_size: int
    padding: int = 0
    dilation: int = 1
    upsample: int = 1  # factor applied before the convolution
    pool: bool = False  # 2 x 2 max pool after the activation

    @property
    def conv_spec(self):
        return ConvSpec(self.kernel_size, 1, self.padding, self.dilation)


DEFAULT_LAYERS = (
    LayerSpec("conv1", 16, 11, padding=5),
    LayerSpec("conv2", 16, 5, padding=2, pool=True),
    LayerSpec("conv3", 32, 5, padding=2),
    LayerSpec("conv4", 32, 5, padding=2, pool=True),
    LayerSpec("dilated1", 64, 5, padding=4, dilation=2),
    LayerSpec("dilated2", 64, 5, padding=8, dilation=4),
    LayerSpec("up1", 16, 5, padding=2, upsample=2),
    LayerSpec("up2", 16, 11, padding=5, upsample=2),
)

# Same topology with narrow layers and small kernels, for quick runs and tests
COMPACT_LAYERS = (
    LayerSpec("conv1", 4, 5, padding=2),
    LayerSpec("conv2", 4, 3, padding=1, pool=True),
    LayerSpec("conv3", 8, 3, padding=1),
    LayerSpec("conv4", 8, 3, padding=1, pool=True),
    LayerSpec("dilated1", 8, 3, padding=2, dilation=2),
    LayerSpec("dilated2", 8, 3, padding=4, dilation=4),
    LayerSpec("up1", 8, 3, padding=1, upsample=2),
    LayerSpec("up2", 4, 5, padding=2, upsample=2),
)

LAYER_TABLES = {"default": DEFAULT_LAYERS, "compact": COMPACT_LAYERS}


@dataclass
class NetworkConfig:
    """Architecture and training hyper-parameters"""

    layers: tuple = DEFAULT_LAYERS
    input_size: int = 300
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 100
    seed: int = 0

    def to_dict(self):
        values = asdict(self)
        values["layers"] = [asdict(layer) for layer in self.layers]
        return values

    @classmethod
    def from_dict(cls, values):
        values = dict(values)
        values["layers"] = tuple(LayerSpec(**layer) for layer in values.get("layers", []))
        return cls(**values)


@dataclass
class GraspMaps:
    """The five per-pixel output maps of one image"""

    q: np.ndarray
    sin2: np.ndarray
    cos2: np.ndarray
    width: np.ndarray
    height: np.ndarray

    @classmethod
    def from_tensor(cls, tensor):
        if tensor.ndim != 3 or tensor.shape[0] != len(HEAD_NAMES):
            raise DimensionError(f"GraspMaps need a (5, H, W) tensor, got {tensor.shape}", axis="maps")
        return cls(*(tensor[i] for i in range(len(HEAD_NAMES))))

    def to_tensor(self):
        return np.stack([self.q, self.sin2, self.cos2, self.width, self.height])

    @property
    def shape(self):
        return self.q.shape

    def clamped(self):
        """Clamp every map into its valid range"""
        return GraspMaps(
            q=np.clip(self.q, 0.0, 1.0),
            sin2=np.clip(self.sin2, -1.0, 1.0),
            cos2=np.clip(self.cos2, -1.0, 1.0),
            width=np.clip(self.width, 0.0, 1.0),
            height=np.clip(self.height, 0.0, 1.0),
        )


def validate_layer_table(config):
    """
    Trace shapes through the layer table

    Returns:
        list: (in_channels, spatial size after the layer) per layer

    Raises:
        ConfigurationError: If the table does not map input_size back to input_size
    """
    if not config.layers:
        raise ConfigurationError("Layer table is empty")
    names = [layer.name for layer in config.layers]
    if len(set(names)) != len(names):
        raise ConfigurationError(f"Duplicate layer names in table: {names}")
    size = config.input_size
    channels = INPUT_CHANNELS
    trace = []
    for layer in config.layers:
        if layer.out_channels < 1 or layer.kernel_size < 1:
            raise ConfigurationError(f"Layer {layer.name} has non-positive channels or kernel size")
        if layer.upsample < 1:
            raise ConfigurationError(f"Layer {layer.name} has upsample factor {layer.upsample}")
        size *= layer.upsample
        try:
            size = layer.conv_spec.output_size(size)
        except DimensionError as e:
            raise ConfigurationError(f"Layer {layer.name}: {e}")
        if layer.pool:
            if size % 2:
                raise ConfigurationError(f"Layer {layer.name} pools an odd spatial size {size}")
            size //= 2
        trace.append((channels, size))
        channels = layer.out_channels
    if size != config.input_size:
        raise ConfigurationError(
            f"Layer table maps {config.input_size} x {config.input_size} input to {size} x {size} output"
        )
    return trace


class FSGNet:
    """Trainable network; parameters are DO-Conv triples (W, D, bias)"""

    def __init__(self, config, layers, heads):
        self.config = config
        self.layers = layers
        self.heads = heads
        self._folded = None

    @property
    def named_layers(self):
        names = [spec.name for spec in self.config.layers] + [f"head_{name}" for name in HEAD_NAMES]
        return list(zip(names, self.layers + self.heads))

    def parameters(self):
        """Flat parameter list: W, D, bias for each layer then each head"""
        return [tensor for _, params in self.named_layers for tensor in params.tensors()]

    def set_parameters(self, tensors):
        tensors = list(tensors)
        expected = self.parameters()
        if len(tensors) != len(expected):
            raise DimensionError(f"Expected {len(expected)} tensors, got {len(tensors)}", axis="params")
        for index, (new, old) in enumerate(zip(tensors, expected)):
            if new.shape != old.shape:
                raise DimensionError(
                    f"Parameter {index} has shape {new.shape}, expected {old.shape}", axis=f"param[{index}]"
                )
        it = iter(tensors)
        for params in self.layers + self.heads:
            params.W, params.D, params.bias = next(it), next(it), next(it)
        self._folded = None

    def parameter_count(self, folded=False):
        if folded:
            return sum(p.W.size + p.bias.size for p in self.layers + self.heads)
        return sum(t.size for t in self.parameters())

    def fold(self):
        """Compute and cache the inference kernels"""
        if self._folded is None:
            self._folded = [doconv_fold(params) for params in self.layers + self.heads]
        return self._folded

    def forward_tensor(self, input, keep_cache=False):
        """
        Raw forward pass

        Args:
            input (np.ndarray): (N, 4, S, S) with S = config.input_size
            keep_cache (bool): Keep intermediates for backward()

        Returns:
            tuple: (raw maps (N, 5, S, S), cache or None)
        """
        size = self.config.input_size
        if input.ndim != 4 or input.shape[1:] != (INPUT_CHANNELS, size, size):
            raise DimensionError(
                f"Network input must be (N, {INPUT_CHANNELS}, {size}, {size}), got {input.shape}",
                axis="input",
            )
        check_finite(input, "network input")
        kernels = self.fold() if not keep_cache else [doconv_fold(p) for p in self.layers + self.heads]
        conv = conv2d if keep_cache else conv2d_fft
        x = input.astype(self.layers[0].W.dtype, copy=False)
        cache = []
        for spec, (kernel, bias) in zip(self.config.layers, kernels):
            step = {"input": x}
            if spec.upsample > 1:
                x = upsample_bilinear(x, spec.upsample)
            step["conv_input"] = x
            x = conv(x, kernel, bias, spec.conv_spec)
            step["pre_activation"] = x
            x = relu(x)
            if spec.pool:
                step["pool_input"] = x
                x = max_pool2(x)
            if keep_cache:
                step["kernel"] = kernel
                cache.append(step)
        features = x
        head_spec = ConvSpec(1)
        outputs = [conv2d(features, kernel, bias, head_spec) for kernel, bias in kernels[len(self.layers) :]]
        out = np.concatenate(outputs, axis=1)
        check_finite(out, "network output")
        if keep_cache:
            return out, {"layers": cache, "features": features, "head_kernels": kernels[len(self.layers) :]}
        return out, None

    def backward(self, cache, grad_output):
        """
        Backpropagate a gradient of the raw output maps

        Returns:
            list: Gradients aligned with parameters()
        """
        features = cache["features"]
        grad_features = np.zeros_like(features)
        head_grads = []
        for index, (params, (kernel, _)) in enumerate(zip(self.heads, cache["head_kernels"])):
            g_in, g_kernel, g_bias = conv2d_backward(grad_output[:, index : index + 1], features, kernel, ConvSpec(1))
            grad_features += g_in
            g_W, g_D = doconv_fold_backward(g_kernel, params)
            head_grads.append([g_W, g_D, g_bias])

        layer_grads = []
        grad = grad_features
        for spec, params, step in reversed(list(zip(self.config.layers, self.layers, cache["layers"]))):
            if spec.pool:
                grad = max_pool2_backward(grad, step["pool_input"])
            grad = relu_backward(grad, step["pre_activation"])
            grad, g_kernel, g_bias = conv2d_backward(grad, step["conv_input"], step["kernel"], spec.conv_spec)
            if spec.upsample > 1:
                grad = upsample_bilinear_backward(grad, step["input"].shape, spec.upsample)
            g_W, g_D = doconv_fold_backward(g_kernel, params)
            layer_grads.append([g_W, g_D, g_bias])
        layer_grads.reverse()
        return [g for triple in layer_grads + head_grads for g in triple]

    def predict(self, input):
        """
        Inference: clamped GraspMaps for each batch item

        Returns:
            list: One GraspMaps per input image
        """
        out, _ = self.forward_tensor(input)
        return [GraspMaps.from_tensor(item).clamped() for item in out]


def forward(net, input):
    """Module-level alias of FSGNet.predict"""
    return net.predict(input)


def build_network(config=None, rng_seed=None):
    """
    Build a network from its layer table

    Args:
        config (NetworkConfig): Architecture; defaults to the standard table
        rng_seed (int): Initialization seed; defaults to config.seed

    Returns:
        FSGNet: Freshly initialized network
    """
    config = config or NetworkConfig()
    trace = validate_layer_table(config)
    rng = np.random.default_rng(config.seed if rng_seed is None else rng_seed)
    dtype = get_default_dtype()
    layers = [
        DoConvParams.initialize(rng, spec.out_channels, in_channels, spec.kernel_size, dtype)
        for spec, (in_channels, _) in zip(config.layers, trace)
    ]
    features = config.layers[-1].out_channels
    heads = [DoConvParams.initialize(rng, 1, features, 1, dtype) for _ in HEAD_NAMES]
    return FSGNet(config, layers, heads)
