"""
DFF Core: package containing the job runner and the toy system and job
plugins
"""

from .jobs import *
