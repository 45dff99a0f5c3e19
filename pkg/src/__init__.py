"""
GP Occupancy Mapping Package
"""

__version__ = "1.0.0"
__author__ = "Mapping Team"
__description__ = "Continuous occupancy mapping with warped GPs under pose uncertainty"
