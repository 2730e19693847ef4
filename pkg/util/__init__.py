"""Phi4LDP - Util module
Container module for all general purpose / widely used
functions throughout the project.
"""
