"""
PETE - Utils Package
"""
