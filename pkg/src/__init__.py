"""
qsynth Package
Oracle-driven quantum state synthesis and search-to-decision simulators.
"""

__version__ = "0.1.0"

# Import configuration
from . import config

__all__ = ['config', '__version__']
