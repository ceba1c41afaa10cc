"""Numerical tolerances and shared defaults.

Every hard-coded tolerance used across the package lives here so that
tests and callers can reference a single authoritative value.
"""

# Columns of a dataset count as centered when every column mean is below this.
CENTERING_ATOL = 1e-8

# Symmetry requirement for precision matrices and networks.
SYMMETRY_ATOL = 1e-10

# Tolerance for the noise-split identity gamma + eta == psi on model objects.
SPLIT_IDENTITY_ATOL = 1e-10

# Relative singular-value cutoff when checking full column rank of the
# stacked loading matrix [Phi, Lambda_1, ..., Lambda_S].
RANK_RTOL = 1e-8

# Diagonal ridge added before inverting nearly singular matrices.
DEFAULT_RIDGE = 1e-8

# Lower bound applied to noise variances during estimation.
PSI_FLOOR = 1e-8

# EM iterations may decrease the observed log-likelihood by at most this
# much (floating-point slack); larger drops indicate a bug.
EM_MONOTONE_SLACK = 1e-6

# Agreement required between the penalty-free graphical lasso and a direct
# matrix inverse.
GLASSO_ZERO_ATOL = 1e-6

# Default penalty grid for the graphical-lasso benchmark.
DEFAULT_LAMBDA_GRID = (0.0, 0.001, 0.01, 0.1, 1.0)

# A shared factor is retained when its eigenvalue explains more than this
# fraction of the estimated shared covariance.
SHARED_EIG_FRACTION = 0.05

# Family-wise error rate for the Fisher edge-detection threshold.
DEFAULT_FAMILY_ALPHA = 0.05

# Environment variable naming the default output directory of the CLI.
OUTPUT_DIR_ENV = "MSFAX_OUTPUT_DIR"

# Environment variable forcing the pure-Python coordinate-descent kernel.
PURE_PYTHON_ENV = "MSFAX_PURE_PYTHON"
