"""
Test suite for IT Ops Agent System
"""

