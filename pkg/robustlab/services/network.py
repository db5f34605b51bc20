"""
The three-headed network: encoder f, classifier g and projector h.

Encoder: a stack of 3x3 conv + ReLU layers followed by global average pooling.
Classifier: one dense layer to the class logits. Projector: dense, ReLU, dense
to the latent vector used by the contrastive loss. The heads own disjoint
parameter sets so each can be optimized (or frozen) on its own.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from robustlab.core.exceptions import DimensionError
from robustlab.engine import ops
from robustlab.engine.optim import ParameterSet
from robustlab.engine.tensor import Tensor, as_tensor
from robustlab.models.architecture import Architecture
from robustlab.utils.helpers import make_rng

logger = logging.getLogger(__name__)

HEAD_NAMES = ("encoder", "classifier", "projector")
# rng stream offset for parameter initialization, one stream per layer
_INIT_STREAM = 1000


@dataclass
class ModelBundle:
    """Encoder, classifier and projector parameters plus their architecture."""
    architecture: Architecture
    encoder: ParameterSet
    classifier: ParameterSet
    projector: ParameterSet
    seed: int = 0

    def heads(self) -> Dict[str, ParameterSet]:
        return {"encoder": self.encoder, "classifier": self.classifier, "projector": self.projector}

    def named_tensors(self) -> Iterator[Tuple[str, Tensor]]:
        for head, params in self.heads().items():
            for name, tensor in params.named_tensors():
                yield f"{head}.{name}", tensor

    def parameter_count(self) -> int:
        return sum(p.parameter_count() for p in self.heads().values())

    def zero_grad(self) -> None:
        for params in self.heads().values():
            params.zero_grad()

    def detached(self) -> "ModelBundle":
        """Read-only view whose forward passes record no parameter gradients."""
        return ModelBundle(
            architecture=self.architecture,
            encoder=self.encoder.detached(),
            classifier=self.classifier.detached(),
            projector=self.projector.detached(),
            seed=self.seed,
        )

    def copy(self) -> "ModelBundle":
        return ModelBundle(
            architecture=self.architecture,
            encoder=self.encoder.copy(),
            classifier=self.classifier.copy(),
            projector=self.projector.copy(),
            seed=self.seed,
        )

    def state_equal(self, other: "ModelBundle") -> bool:
        return (
            self.architecture == other.architecture
            and self.seed == other.seed
            and all(self.heads()[h].state_equal(other.heads()[h]) for h in HEAD_NAMES)
        )


def _kaiming_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


def _dense(rng: np.random.Generator, fan_in: int, fan_out: int) -> Tuple[Tensor, Tensor]:
    weight = Tensor(_kaiming_uniform(rng, (fan_out, fan_in), fan_in))
    bias = Tensor(np.zeros(fan_out, dtype=np.float32))
    return weight, bias


def layer_shapes(architecture: Architecture) -> Dict[str, Dict[str, Tuple[int, ...]]]:
    """Expected tensor shapes per head, keyed like ``ParameterSet.named_tensors``."""
    shapes: Dict[str, Dict[str, Tuple[int, ...]]] = {head: {} for head in HEAD_NAMES}
    k = architecture.kernel_size
    c_in = architecture.input_shape[2]
    for i, c_out in enumerate(architecture.conv_channels, start=1):
        shapes["encoder"][f"conv{i}.weight"] = (k, k, c_in, c_out)
        shapes["encoder"][f"conv{i}.bias"] = (c_out,)
        c_in = c_out
    shapes["classifier"]["fc.weight"] = (architecture.num_classes, architecture.feature_dim)
    shapes["classifier"]["fc.bias"] = (architecture.num_classes,)
    shapes["projector"]["proj1.weight"] = (architecture.projector_hidden, architecture.feature_dim)
    shapes["projector"]["proj1.bias"] = (architecture.projector_hidden,)
    shapes["projector"]["proj2.weight"] = (architecture.projection_dim, architecture.projector_hidden)
    shapes["projector"]["proj2.bias"] = (architecture.projection_dim,)
    return shapes


def init_bundle(architecture: Optional[Architecture] = None, seed: int = 0) -> ModelBundle:
    """
    Build a bundle with Kaiming-uniform weights and zero biases.

    Args:
        architecture: layer sizes; defaults to the desk-scale network
        seed: initialization seed, recorded on the bundle

    Returns:
        Freshly initialized ModelBundle
    """
    architecture = architecture or Architecture()
    stream = _INIT_STREAM

    encoder = ParameterSet()
    k = architecture.kernel_size
    c_in = architecture.input_shape[2]
    for i, c_out in enumerate(architecture.conv_channels, start=1):
        rng = make_rng(seed, stream)
        stream += 1
        fan_in = k * k * c_in
        kernel = Tensor(_kaiming_uniform(rng, (k, k, c_in, c_out), fan_in))
        encoder.add_layer(f"conv{i}", kernel, Tensor(np.zeros(c_out, dtype=np.float32)))
        c_in = c_out

    classifier = ParameterSet()
    classifier.add_layer("fc", *_dense(make_rng(seed, stream), architecture.feature_dim, architecture.num_classes))
    stream += 1

    projector = ParameterSet()
    projector.add_layer(
        "proj1", *_dense(make_rng(seed, stream), architecture.feature_dim, architecture.projector_hidden)
    )
    projector.add_layer(
        "proj2", *_dense(make_rng(seed, stream + 1), architecture.projector_hidden, architecture.projection_dim)
    )

    bundle = ModelBundle(architecture, encoder, classifier, projector, seed=seed)
    logger.debug(f"Initialized bundle with {bundle.parameter_count()} parameters (seed={seed})")
    return bundle


def encode(bundle: ModelBundle, x) -> Tensor:
    """
    Features f(x) of one image (H, W, 3) or a batch (B, H, W, 3).

    Raises:
        DimensionError: if the image shape differs from the architecture's input shape
    """
    x = as_tensor(x)
    expected = tuple(bundle.architecture.input_shape)
    single = x.data.ndim == 3
    if tuple(x.shape[-3:]) != expected or x.data.ndim not in (3, 4):
        raise DimensionError("encoder input shape mismatch", expected=expected, actual=x.shape)

    h = ops.reshape(x, (1,) + expected) if single else x
    arch = bundle.architecture
    for i, stride in enumerate(arch.conv_strides, start=1):
        h = ops.conv2d_forward(bundle.encoder[f"conv{i}"], h, stride=stride, padding=arch.padding)
        h = ops.relu_forward(h)
    features = ops.global_avg_pool(h)
    if single:
        features = ops.reshape(features, (arch.feature_dim,))
    return features


def _check_features(bundle: ModelBundle, features: Tensor) -> Tensor:
    features = as_tensor(features)
    if features.data.ndim not in (1, 2) or features.shape[-1] != bundle.architecture.feature_dim:
        raise DimensionError(
            "feature vector length mismatch", expected=(bundle.architecture.feature_dim,), actual=features.shape
        )
    return features


def classify(bundle: ModelBundle, features) -> Tensor:
    """Logits g(features), one per class."""
    features = _check_features(bundle, features)
    return ops.dense_forward(bundle.classifier["fc"], features)


def project(bundle: ModelBundle, features) -> Tensor:
    """Latent z = h(features); not normalized."""
    features = _check_features(bundle, features)
    hidden = ops.relu_forward(ops.dense_forward(bundle.projector["proj1"], features))
    return ops.dense_forward(bundle.projector["proj2"], hidden)


def predict(bundle: ModelBundle, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Argmax class of every image, computed without recording gradients."""
    view = bundle.detached()
    predictions = []
    for start in range(0, images.shape[0], batch_size):
        logits = classify(view, encode(view, Tensor(images[start:start + batch_size])))
        predictions.append(np.argmax(logits.data, axis=1))
    if not predictions:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(predictions).astype(np.int64)
