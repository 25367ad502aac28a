"""Reserve-capacity bidding for stochastic flexible demand portfolios.

Simulates EV-fleet baseline consumption, forms bootstrap day samples,
computes distributionally robust capacity bids that honour a P90-style
availability requirement, evaluates delivered compliance, and sweeps
the (epsilon, theta) parameter grid from a TSO point of view.
"""

__version__ = "0.1.0"
