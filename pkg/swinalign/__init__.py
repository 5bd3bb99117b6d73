"""
swinalign: hierarchical windowed-attention grading with stage-feature alignment.
"""

__version__ = "0.1.0"
