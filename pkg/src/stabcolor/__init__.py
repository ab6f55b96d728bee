"""Deterministic simulator for self-stabilizing DAG orientation and (Delta+1)-coloring.

Two message-passing layers run fairly composed on every node: a bit-serial
identifier comparison that orients each edge toward the greater identifier,
and a coloring layer that lets the lower endpoint of a clash keep its
color.  Nodes start from arbitrary states and links from arbitrary content;
monitors track the potential functions that certify convergence.
"""

from .core import Topology, bit_index, build_topology, dif, from_edges
from .monitors import coloring_oracle, dag_oracle, readout
from .simnet import Schedule, Simulation, TrialReport, run_trial, seed_adversary

__all__ = [
    "Schedule",
    "Simulation",
    "Topology",
    "TrialReport",
    "bit_index",
    "build_topology",
    "coloring_oracle",
    "dag_oracle",
    "dif",
    "from_edges",
    "readout",
    "run_trial",
    "seed_adversary",
]

__version__ = "0.1.0"
