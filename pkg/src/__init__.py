"""
DataFlow Ethernet fabric simulator
"""

__version__ = "0.1.0"
