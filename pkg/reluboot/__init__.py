"""ReluBoot - variance estimation and bootstrap confidence intervals with dense ReLU networks.

Residual-based and direct conditional-variance estimators, a robust
residual-bootstrap confidence interval for the conditional mean, synthetic
benchmark scenarios and a real-data prediction-interval study, all built
on a from-scratch numpy ReLU network.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
