"""
Command-line interface for s-mate.

Scenario-driven commands that run simulations, render schedules, verify
protection schemes and capture wire traces.
"""
