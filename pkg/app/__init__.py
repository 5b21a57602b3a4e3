"""
s-mate - protection coding engine and multipath simulator.
"""

__version__ = "0.1.0"
