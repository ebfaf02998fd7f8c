"""Networked model-free control testbed.

An "intelligent proportional" controller with online lumped-dynamics
estimation, a PI baseline, two simulated plants (tank level, 1-DOF
aero rig), a UDP measurement/control transport with fault injection,
and a scenario runner with QoS reporting.
"""

__version__ = "0.1.0"
