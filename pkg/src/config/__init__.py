"""
Configuration management
"""
