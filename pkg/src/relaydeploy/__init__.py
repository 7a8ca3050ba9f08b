"""Measurement-based relay placement along a line.

Solvers for the placement MDP/SMDP, model-free learners, a Monte-Carlo
deployment simulator, and a deployment-assistant HTTP service.
"""

__version__ = "0.1.0"
