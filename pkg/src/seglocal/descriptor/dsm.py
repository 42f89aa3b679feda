"""Down-sampling point-convolution descriptor network (inference only).

The network consumes a canonical 256-point segment and emits a 16-value
descriptor plus a scalar feature-quality score. Each layer first shrinks the
point set with farthest-point sampling (256 -> 160 -> 96 -> 16 -> 4), then
runs an X-conv step on the surviving representative points: gather dilated
k-nearest neighbors, lift their local coordinates through a small per-point
MLP, mix the neighborhood with a learned KxK transform, and convolve down to
the layer's output channels. Down-sampling between layers is what cuts the
k-NN and convolution work relative to an architecture that keeps all points
at every layer.

Weight init and the weight-file layout are fixed here so inference is fully
reproducible; training is out of scope (models are random-initialized for
property testing or loaded from files).
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..errors import (
    CorruptFile,
    InsufficientNeighbors,
    InvalidArgument,
    ModelNotLoaded,
    ShapeMismatch,
    VersionMismatch,
)
from ..preprocess import CanonicalSegment
from .base import Descriptor, DescriptorKind

DESCRIPTOR_DIM = 16
INPUT_POINTS = 256

# (points_out, neighbors K, dilation D) per layer.
DSM_LAYER_SCHEDULE = ((160, 8, 1), (96, 10, 2), (16, 12, 3), (4, 16, 1))

WEIGHTS_MAGIC = b"DSMW"
WEIGHTS_VERSION = 1


def full_resolution_schedule(input_points: int = INPUT_POINTS):
    """Reference schedule that keeps every point at every layer (no
    down-sampling); used for footprint and timing comparisons."""
    return tuple((input_points, k, d) for _, k, d in DSM_LAYER_SCHEDULE)


@dataclass(frozen=True)
class LayerConfig:
    points_out: int
    neighbors_k: int
    dilation_d: int
    channels_in: int
    channels_delta: int
    channels_out: int

    def __post_init__(self):
        for name in ("points_out", "neighbors_k", "dilation_d", "channels_delta", "channels_out"):
            if getattr(self, name) < 1:
                raise InvalidArgument(f"{name} must be >= 1")
        if self.channels_in < 0:
            raise InvalidArgument("channels_in must be >= 0")


@dataclass(frozen=True)
class ChannelConfig:
    """Width schedule; the published constraint is only the rough total
    parameter count (~280K), so the per-layer widths live here."""

    delta: tuple = (16, 24, 32, 48)
    out: tuple = (32, 48, 64, 64)
    fc1: int = 160
    fc2: int = 64


DEFAULT_CHANNELS = ChannelConfig()


@dataclass(frozen=True, eq=False)
class XConvWeights:
    lift_w1: np.ndarray   # (3, c_delta)
    lift_b1: np.ndarray   # (c_delta,)
    lift_w2: np.ndarray   # (c_delta, c_delta)
    lift_b2: np.ndarray   # (c_delta,)
    trans_w1: np.ndarray  # (3K, K)
    trans_b1: np.ndarray  # (K,)
    trans_w2: np.ndarray  # (K, K*K)
    trans_b2: np.ndarray  # (K*K,)
    conv_w: np.ndarray    # (K*(c_delta+c_in), c_out)
    conv_b: np.ndarray    # (c_out,)

    def tensors(self):
        yield from (
            ("lift_w1", self.lift_w1), ("lift_b1", self.lift_b1),
            ("lift_w2", self.lift_w2), ("lift_b2", self.lift_b2),
            ("trans_w1", self.trans_w1), ("trans_b1", self.trans_b1),
            ("trans_w2", self.trans_w2), ("trans_b2", self.trans_b2),
            ("conv_w", self.conv_w), ("conv_b", self.conv_b),
        )


@dataclass(frozen=True, eq=False)
class HeadWeights:
    fc1_w: np.ndarray
    fc1_b: np.ndarray
    fc2_w: np.ndarray
    fc2_b: np.ndarray
    fc3_w: np.ndarray  # (fc2, 16): descriptor read-out
    fc3_b: np.ndarray
    fc4_w: np.ndarray  # (16, 1): quality head on the descriptor activations
    fc4_b: np.ndarray

    def tensors(self):
        yield from (
            ("fc1_w", self.fc1_w), ("fc1_b", self.fc1_b),
            ("fc2_w", self.fc2_w), ("fc2_b", self.fc2_b),
            ("fc3_w", self.fc3_w), ("fc3_b", self.fc3_b),
            ("fc4_w", self.fc4_w), ("fc4_b", self.fc4_b),
        )


def _expected_shapes(layer: LayerConfig):
    k, cd, ci, co = layer.neighbors_k, layer.channels_delta, layer.channels_in, layer.channels_out
    return {
        "lift_w1": (3, cd), "lift_b1": (cd,),
        "lift_w2": (cd, cd), "lift_b2": (cd,),
        "trans_w1": (3 * k, k), "trans_b1": (k,),
        "trans_w2": (k, k * k), "trans_b2": (k * k,),
        "conv_w": (k * (cd + ci), co), "conv_b": (co,),
    }


@dataclass(frozen=True, eq=False)
class DsmModel:
    input_points: int
    layers: tuple
    layer_weights: tuple
    head: HeadWeights

    def __post_init__(self):
        prev_points = self.input_points
        prev_channels = 0
        for i, (cfg, w) in enumerate(zip(self.layers, self.layer_weights)):
            if cfg.points_out > prev_points:
                raise ShapeMismatch(f"layer {i}: cannot sample {cfg.points_out} from {prev_points} points")
            if cfg.neighbors_k * cfg.dilation_d > prev_points:
                raise ShapeMismatch(f"layer {i}: K*D = {cfg.neighbors_k * cfg.dilation_d} exceeds {prev_points} points")
            if cfg.channels_in != prev_channels:
                raise ShapeMismatch(f"layer {i}: channels_in {cfg.channels_in} != previous output {prev_channels}")
            for name, arr in w.tensors():
                expected = _expected_shapes(cfg)[name]
                if arr.shape != expected or arr.dtype != np.float32:
                    raise ShapeMismatch(f"layer {i} tensor {name}: expected float32 {expected}, got {arr.dtype} {arr.shape}")
            prev_points = cfg.points_out
            prev_channels = cfg.channels_out
        flat_in = self.layers[-1].points_out * self.layers[-1].channels_out
        head_shapes = {
            "fc1_w": (flat_in, self.head.fc1_b.shape[0]), "fc1_b": self.head.fc1_b.shape,
            "fc2_w": (self.head.fc1_b.shape[0], self.head.fc2_b.shape[0]), "fc2_b": self.head.fc2_b.shape,
            "fc3_w": (self.head.fc2_b.shape[0], DESCRIPTOR_DIM), "fc3_b": (DESCRIPTOR_DIM,),
            "fc4_w": (DESCRIPTOR_DIM, 1), "fc4_b": (1,),
        }
        for name, arr in self.head.tensors():
            if arr.shape != head_shapes[name] or arr.dtype != np.float32:
                raise ShapeMismatch(f"head tensor {name}: expected float32 {head_shapes[name]}, got {arr.dtype} {arr.shape}")

    def tensors(self):
        """All learnable tensors in the documented serialization order."""
        for i, w in enumerate(self.layer_weights):
            for name, arr in w.tensors():
                yield f"layer{i}.{name}", arr
        yield from self.head.tensors()

    def schedule(self):
        return tuple((c.points_out, c.neighbors_k, c.dilation_d) for c in self.layers)


def param_count(model: DsmModel) -> int:
    """Total number of learnable scalars."""
    return int(sum(arr.size for _, arr in model.tensors()))


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _pairwise_sq(points: np.ndarray) -> np.ndarray:
    """All-pairs squared distances, accumulated x, y, z like the samplers."""
    pts = points.astype(np.float64)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    dist = (x[:, None] - x[None, :]) ** 2
    buf = y[:, None] - y[None, :]
    np.multiply(buf, buf, out=buf)
    dist += buf
    np.subtract(z[:, None], z[None, :], out=buf)
    np.multiply(buf, buf, out=buf)
    dist += buf
    return dist


def _fps_from_matrix(dist_sq: np.ndarray, m: int) -> np.ndarray:
    """Farthest-point selection over a precomputed distance matrix, seeded at
    row 0. Same greedy rule, tie-breaking, and float64 values as
    :func:`seglocal.sampling.fps_per_segment`, so selections are identical."""
    indices = np.empty(m, dtype=np.int64)
    indices[0] = 0
    nearest = dist_sq[0].copy()
    nearest[0] = -1.0
    for i in range(1, m):
        j = int(np.argmax(nearest))
        indices[i] = j
        np.minimum(nearest, dist_sq[j], out=nearest)
        nearest[j] = -1.0
    return indices


def _dilated_ranks(dist_block: np.ndarray, k: int, d: int) -> np.ndarray:
    """Every d-th of the k*d nearest columns per row, lowest index on ties."""
    order = np.argsort(dist_block, axis=1, kind="stable")
    return order[:, : k * d : d]


def dilated_neighbor_indices(rep_points: np.ndarray, in_points: np.ndarray, k: int, d: int) -> np.ndarray:
    """For each representative point: indices of its K dilated neighbors.

    Takes the K*D nearest input points by distance (ties broken by lowest
    index) and keeps every D-th, i.e. distance ranks 0, D, ..., (K-1)*D.
    """
    n = in_points.shape[0]
    if k * d > n:
        raise InsufficientNeighbors(f"K*D = {k * d} exceeds {n} input points")
    rep64 = rep_points.astype(np.float64)
    in64 = in_points.astype(np.float64)
    dist_sq = ((rep64[:, None, :] - in64[None, :, :]) ** 2).sum(axis=2)
    return _dilated_ranks(dist_sq, k, d)


def xconv_layer(rep_points: np.ndarray, in_points: np.ndarray, in_feats: np.ndarray | None,
                cfg: LayerConfig, weights: XConvWeights, *,
                neighbor_indices: np.ndarray | None = None) -> np.ndarray:
    """One X-conv step: (M, 3) representatives over (N, 3) inputs -> (M, c_out).

    Steps per representative: gather dilated neighbors, localize coordinates,
    lift them through the per-point MLP, concatenate gathered input features,
    apply the learned KxK transform computed from the localized coordinates,
    and reduce with the final convolution. ``neighbor_indices`` may carry a
    precomputed gather (it must equal what ``dilated_neighbor_indices`` would
    return); otherwise neighbors are found here.
    """
    rep = np.ascontiguousarray(rep_points, dtype=np.float32)
    pts = np.ascontiguousarray(in_points, dtype=np.float32)
    if in_feats is None:
        if cfg.channels_in != 0:
            raise ShapeMismatch(f"layer expects {cfg.channels_in} input channels, got none")
    else:
        if in_feats.shape != (pts.shape[0], cfg.channels_in):
            raise ShapeMismatch(
                f"input features must have shape {(pts.shape[0], cfg.channels_in)}, got {in_feats.shape}"
            )
    k = cfg.neighbors_k
    if neighbor_indices is None:
        idx = dilated_neighbor_indices(rep, pts, k, cfg.dilation_d)
    else:
        idx = np.asarray(neighbor_indices, dtype=np.int64)

    local = pts[idx] - rep[:, None, :]                          # (M, K, 3)
    lifted = _relu(local @ weights.lift_w1 + weights.lift_b1)
    lifted = _relu(lifted @ weights.lift_w2 + weights.lift_b2)  # (M, K, c_delta)
    feats = lifted if in_feats is None else np.concatenate([lifted, in_feats[idx]], axis=2)

    flat_local = local.reshape(rep.shape[0], 3 * k)
    hidden = _relu(flat_local @ weights.trans_w1 + weights.trans_b1)
    x_trans = (hidden @ weights.trans_w2 + weights.trans_b2).reshape(rep.shape[0], k, k)

    mixed = np.einsum("mij,mjc->mic", x_trans, feats)           # (M, K, c_delta + c_in)
    out = mixed.reshape(rep.shape[0], -1) @ weights.conv_w + weights.conv_b
    return _relu(out)


def describe_dsm(segment: CanonicalSegment, model: DsmModel) -> Descriptor:
    """Run the network on one canonical segment.

    Deterministic: the per-layer FPS that picks representative points is
    seeded at index 0, so the same segment and model always produce a
    bit-identical descriptor.
    """
    if model is None:
        raise ModelNotLoaded("no descriptor model loaded")
    if len(segment) != model.input_points:
        raise ShapeMismatch(f"model expects {model.input_points} points, segment has {len(segment)}")

    all_points = segment.points.astype(np.float32)
    # Every layer works on a subset of the canonical points, so one pairwise
    # distance matrix serves both the per-layer FPS and the k-NN gathers
    # (bit-identical to recomputing per layer).
    dist_all = _pairwise_sq(all_points)
    current = np.arange(all_points.shape[0])
    feats = None
    for cfg, weights in zip(model.layers, model.layer_weights):
        if cfg.points_out < current.shape[0]:
            local = _fps_from_matrix(dist_all[np.ix_(current, current)], cfg.points_out)
            rep_idx = current[local]
        else:
            rep_idx = current
        kd = cfg.neighbors_k * cfg.dilation_d
        if kd > current.shape[0]:
            raise InsufficientNeighbors(f"K*D = {kd} exceeds {current.shape[0]} input points")
        neighbor_idx = _dilated_ranks(dist_all[np.ix_(rep_idx, current)],
                                      cfg.neighbors_k, cfg.dilation_d)
        feats = xconv_layer(all_points[rep_idx], all_points[current], feats, cfg, weights,
                            neighbor_indices=neighbor_idx)
        current = rep_idx

    flat = feats.reshape(-1)
    h = _relu(flat @ model.head.fc1_w + model.head.fc1_b)
    h = _relu(h @ model.head.fc2_w + model.head.fc2_b)
    descriptor = h @ model.head.fc3_w + model.head.fc3_b
    logit = descriptor @ model.head.fc4_w + model.head.fc4_b
    quality = float(1.0 / (1.0 + np.exp(-float(logit[0]))))
    return Descriptor(descriptor, DescriptorKind.LEARNED16, quality=quality)


# --- construction ---------------------------------------------------------

def _glorot(rng, shape):
    limit = np.sqrt(6.0 / (shape[0] + shape[-1]))
    return rng.uniform(-limit, limit, size=shape).astype(np.float32)


def init_model(channel_config: ChannelConfig | None = None, rng_seed: int = 0, *,
               schedule=DSM_LAYER_SCHEDULE, input_points: int = INPUT_POINTS) -> DsmModel:
    """Random-initialized model, deterministic per seed."""
    channels = channel_config or DEFAULT_CHANNELS
    if len(channels.delta) != len(schedule) or len(channels.out) != len(schedule):
        raise ShapeMismatch("channel config must provide one width pair per layer")
    rng = np.random.default_rng(rng_seed)

    configs, layer_weights = [], []
    prev_channels = 0
    for (points_out, k, d), c_delta, c_out in zip(schedule, channels.delta, channels.out):
        cfg = LayerConfig(points_out, k, d, prev_channels, c_delta, c_out)
        # X-transform bias starts at the identity matrix so an untrained
        # network begins as a plain neighborhood convolution.
        layer_weights.append(XConvWeights(
            lift_w1=_glorot(rng, (3, c_delta)), lift_b1=np.zeros(c_delta, dtype=np.float32),
            lift_w2=_glorot(rng, (c_delta, c_delta)), lift_b2=np.zeros(c_delta, dtype=np.float32),
            trans_w1=_glorot(rng, (3 * k, k)), trans_b1=np.zeros(k, dtype=np.float32),
            trans_w2=_glorot(rng, (k, k * k)), trans_b2=np.eye(k, dtype=np.float32).reshape(-1),
            conv_w=_glorot(rng, (k * (c_delta + prev_channels), c_out)),
            conv_b=np.zeros(c_out, dtype=np.float32),
        ))
        configs.append(cfg)
        prev_channels = c_out

    flat_in = configs[-1].points_out * configs[-1].channels_out
    head = HeadWeights(
        fc1_w=_glorot(rng, (flat_in, channels.fc1)), fc1_b=np.zeros(channels.fc1, dtype=np.float32),
        fc2_w=_glorot(rng, (channels.fc1, channels.fc2)), fc2_b=np.zeros(channels.fc2, dtype=np.float32),
        fc3_w=_glorot(rng, (channels.fc2, DESCRIPTOR_DIM)), fc3_b=np.zeros(DESCRIPTOR_DIM, dtype=np.float32),
        fc4_w=_glorot(rng, (DESCRIPTOR_DIM, 1)), fc4_b=np.zeros(1, dtype=np.float32),
    )
    return DsmModel(input_points, tuple(configs), tuple(layer_weights), head)


# --- weight file ----------------------------------------------------------

def save_model(model: DsmModel, path) -> None:
    """Write the DSMW container: header, raw little-endian float32 tensors
    in documented order, trailing CRC32 of everything before it."""
    chunks = [WEIGHTS_MAGIC, struct.pack("<II", WEIGHTS_VERSION, model.input_points)]
    chunks.append(struct.pack("<I", len(model.layers)))
    for cfg in model.layers:
        chunks.append(struct.pack(
            "<6I", cfg.points_out, cfg.neighbors_k, cfg.dilation_d,
            cfg.channels_in, cfg.channels_delta, cfg.channels_out,
        ))
    chunks.append(struct.pack(
        "<4I", model.head.fc1_b.shape[0], model.head.fc2_b.shape[0], DESCRIPTOR_DIM, 1,
    ))
    for _, arr in model.tensors():
        chunks.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    blob = b"".join(chunks)
    with open(path, "wb") as fh:
        fh.write(blob)
        fh.write(struct.pack("<I", zlib.crc32(blob) & 0xFFFFFFFF))


def load_model(path) -> DsmModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16 or blob[:4] != WEIGHTS_MAGIC:
        raise CorruptFile(f"{path}: not a DSMW weight file")
    if zlib.crc32(blob[:-4]) & 0xFFFFFFFF != struct.unpack("<I", blob[-4:])[0]:
        raise CorruptFile(f"{path}: checksum failure (truncated or corrupted)")
    version, input_points = struct.unpack_from("<II", blob, 4)
    if version != WEIGHTS_VERSION:
        raise VersionMismatch(f"{path}: weight file version {version}, expected {WEIGHTS_VERSION}")

    offset = 12
    (n_layers,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    configs = []
    for _ in range(n_layers):
        fields = struct.unpack_from("<6I", blob, offset)
        offset += 24
        configs.append(LayerConfig(*fields))
    fc1, fc2, desc_dim, quality_dim = struct.unpack_from("<4I", blob, offset)
    offset += 16
    if desc_dim != DESCRIPTOR_DIM or quality_dim != 1:
        raise ShapeMismatch(f"{path}: unsupported head dimensions {desc_dim}/{quality_dim}")

    def take(shape):
        nonlocal offset
        count = int(np.prod(shape))
        end = offset + 4 * count
        if end > len(blob) - 4:
            raise ShapeMismatch(f"{path}: tensor data shorter than the declared configuration")
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset).reshape(shape).copy()
        offset = end
        return arr

    layer_weights = []
    for cfg in configs:
        shapes = _expected_shapes(cfg)
        layer_weights.append(XConvWeights(**{name: take(shape) for name, shape in shapes.items()}))
    flat_in = configs[-1].points_out * configs[-1].channels_out
    head = HeadWeights(
        fc1_w=take((flat_in, fc1)), fc1_b=take((fc1,)),
        fc2_w=take((fc1, fc2)), fc2_b=take((fc2,)),
        fc3_w=take((fc2, DESCRIPTOR_DIM)), fc3_b=take((DESCRIPTOR_DIM,)),
        fc4_w=take((DESCRIPTOR_DIM, 1)), fc4_b=take((1,)),
    )
    if offset != len(blob) - 4:
        raise ShapeMismatch(f"{path}: {len(blob) - 4 - offset} unexpected trailing bytes")
    return DsmModel(input_points, tuple(configs), tuple(layer_weights), head)


# --- activation accounting -------------------------------------------------

@dataclass(frozen=True)
class FootprintReport:
    """Per-schedule activation totals: how many points survive each layer and
    how many neighbor gathers the layers perform in aggregate."""

    points_total: int
    knn_ops_total: int


def activation_footprint(layer_schedule) -> FootprintReport:
    points = 0
    knn_ops = 0
    for entry in layer_schedule:
        points_out, k = (entry.points_out, entry.neighbors_k) if isinstance(entry, LayerConfig) else entry[:2]
        points += points_out
        knn_ops += points_out * k
    return FootprintReport(points_total=points, knn_ops_total=knn_ops)


class DsmEncoder(TransformerMixin, BaseEstimator):
    """Transformer mapping canonical segments to (n, 16) descriptors.

    Provide either a loaded model, a weight-file path, or a seed for a
    random-initialized model (property testing / smoke runs).
    """

    def __init__(self, model=None, model_path=None, rng_seed=0):
        self.model = model
        self.model_path = model_path
        self.rng_seed = rng_seed

    def fit(self, X=None, y=None):
        if self.model is not None:
            self.model_ = self.model
        elif self.model_path is not None:
            self.model_ = load_model(self.model_path)
        else:
            self.model_ = init_model(rng_seed=self.rng_seed)
        return self

    def _require_model(self) -> DsmModel:
        model = getattr(self, "model_", None)
        if model is None:
            raise ModelNotLoaded("call fit() (or pass model=...) before describing segments")
        return model

    def describe(self, segments) -> list[Descriptor]:
        model = self._require_model()
        return [describe_dsm(seg, model) for seg in segments]

    def transform(self, X) -> np.ndarray:
        return np.vstack([d.values for d in self.describe(X)])
