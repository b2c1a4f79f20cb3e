# Default DFF Core Configuration
#
# Override by pointing DFF_CORE_CONFIG to a Python file that redefines any of
# the options below, or set single options via DFF_CORE_<OPTION> environment
# variables (values are parsed as JSON when possible, e.g. DFF_CORE_WORKERS=4)

################################################################################
# General
################################################################################

# Location of the generated data files, checkpoints, and reports
DATA_ROOT = '.'

# Number of torch worker threads; 0 = all available cores
WORKERS = 0

# Show tqdm progress bars on standard error for long-running loops
PROGRESS = True


################################################################################
# Logging
################################################################################

LOG_LEVEL = 'INFO'

LOG_FORMAT = '%(asctime)s %(levelname)s [%(name)s] %(message)s'


################################################################################
# Diffusion process options
################################################################################

# Default number of noise levels
SCHEDULE_LEVELS = 1000

# Cosine schedule offset "s" and the upper clip for individual betas
COSINE_OFFSET = 0.008
MAX_BETA = 0.999


################################################################################
# Training options
################################################################################

# Default train/validation/test fractions for frame-level dataset splits
SPLIT_FRACTIONS = (0.7, 0.1, 0.2)

# Final learning rate of the cosine decay
MIN_LEARNING_RATE = 1e-5


################################################################################
# Simulation options
################################################################################

# A replica is considered diverged once any coordinate exceeds this magnitude
# (length units) or becomes non-finite
DIVERGENCE_THRESHOLD = 1e6


################################################################################
# Analysis options
################################################################################

# Histogram resolution per axis for 1D/2D distributions
HISTOGRAM_BINS = 64

# TICA lag time in saved frames and the C0 regularization added to the
# diagonal
TICA_LAG = 10
TICA_EPSILON = 1e-10

# Number of k-means++ restarts; the lowest-inertia clustering is kept
KMEANS_RESTARTS = 10

# Contact threshold in internal length units (nm); 1 nm = 10 Angstrom
CONTACT_THRESHOLD = 1.0

# Minimum sequence offset of bead pairs entering pairwise distance statistics
PWD_MIN_OFFSET = 3
