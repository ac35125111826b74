"""
Utility helpers: logging, errors, report output
"""
