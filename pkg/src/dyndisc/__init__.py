"""Fully-dynamic discrepancy minimization.

Vector balancing under inserts/deletes via a hierarchical near-integral
signing tree, and dynamic graph edge orientation via expander
decomposition plus potential-function local search, together with
workload generators, lower-bound instances, verifiers, and a replay
harness.
"""

__version__ = "0.1.0"
