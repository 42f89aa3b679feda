"""Segment descriptors: the learned down-sampling network and the
engineered eigenvalue baseline."""

from .base import Descriptor, DescriptorKind
from .dsm import (
    DEFAULT_CHANNELS,
    DESCRIPTOR_DIM,
    DSM_LAYER_SCHEDULE,
    INPUT_POINTS,
    ChannelConfig,
    DsmEncoder,
    DsmModel,
    FootprintReport,
    HeadWeights,
    LayerConfig,
    XConvWeights,
    activation_footprint,
    describe_dsm,
    dilated_neighbor_indices,
    full_resolution_schedule,
    init_model,
    load_model,
    param_count,
    save_model,
    xconv_layer,
)
from .eigen import EigenvalueFeatures, eigenvalue_descriptor, eigenvalue_features

__all__ = [
    "Descriptor",
    "DescriptorKind",
    "DEFAULT_CHANNELS",
    "DESCRIPTOR_DIM",
    "DSM_LAYER_SCHEDULE",
    "INPUT_POINTS",
    "ChannelConfig",
    "DsmEncoder",
    "DsmModel",
    "FootprintReport",
    "HeadWeights",
    "LayerConfig",
    "XConvWeights",
    "activation_footprint",
    "describe_dsm",
    "dilated_neighbor_indices",
    "full_resolution_schedule",
    "init_model",
    "load_model",
    "param_count",
    "save_model",
    "xconv_layer",
    "EigenvalueFeatures",
    "eigenvalue_descriptor",
    "eigenvalue_features",
]
