"""
The `simulst_latency` APIs.
"""

__version__ = "0.3.0"
