"""
Numerical rigidity analysis of hyperbolic cone-manifolds on the model cone tube
"""

__version__ = "0.1.0"
