from .layers import AvgPool2d, Conv2d, Dense, Flatten, Layer, MaxPool2d, ReLU
from .losses import cross_entropy
from .network import ActivationTrace, Gradients, Network, backward, build_network, forward
from .optim import OptimizerState, lr_schedule, sgd_step
from .serialize import load_network, save_network

__all__ = [
    "ActivationTrace",
    "AvgPool2d",
    "Conv2d",
    "Dense",
    "Flatten",
    "Gradients",
    "Layer",
    "MaxPool2d",
    "Network",
    "OptimizerState",
    "ReLU",
    "backward",
    "build_network",
    "cross_entropy",
    "forward",
    "load_network",
    "lr_schedule",
    "save_network",
    "sgd_step",
]
