"""Balancer domain exceptions."""


class BalancerUsageError(ValueError):
    """Invalid input to flow assignment or load balancing."""
