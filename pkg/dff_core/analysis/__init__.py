"""
DFF Core: evaluation of sampled and simulated ensembles

Histograms and free energies, Jensen-Shannon divergences, structural
observables of bead chains, TICA, k-means state decomposition, Markov
transition analysis, and report writers.
"""

from .histograms import *
from .structure import *
from .tica import *
from .msm import *
from .reports import *
