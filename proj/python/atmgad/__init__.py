"""Temporal-motif graph anomaly detection (bindings to the C++ core)."""

from ._atmgad import (
    FormatError,
    Graph,
    InputError,
    Model,
    NumericError,
    ParseError,
    ValidationError,
    auc,
    auprc,
    catalog,
    enumerate_instances,
    load_edge_list,
    load_graph,
    load_model,
    make_splits,
    sparsemax,
    synth_burst_graph,
    train,
)

__all__ = [
    "FormatError",
    "Graph",
    "InputError",
    "Model",
    "NumericError",
    "ParseError",
    "ValidationError",
    "auc",
    "auprc",
    "catalog",
    "enumerate_instances",
    "load_edge_list",
    "load_graph",
    "load_model",
    "make_splits",
    "sparsemax",
    "synth_burst_graph",
    "train",
]
