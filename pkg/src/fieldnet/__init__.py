from src.fieldnet.checkpoint import load_network, save_network
from src.fieldnet.jets import (
    FieldJet,
    ParamGradient,
    eval_jet,
    function_jet,
    param_grad,
    parameter_gradients,
)
from src.fieldnet.network import DTYPE, FieldNetwork, init_network

__all__ = [
    "DTYPE",
    "FieldJet",
    "FieldNetwork",
    "ParamGradient",
    "eval_jet",
    "function_jet",
    "init_network",
    "load_network",
    "param_grad",
    "parameter_gradients",
    "save_network",
]
