"""Package-wide constants, defaults and tolerances.

This module centralizes the numeric defaults used throughout loopforge so that
suites, commands and tests agree on the same values.
"""

# Finite differences
FD_STEP = 1e-2
"""Base step for first and second derivatives."""

FD_STEP_THIRD = 5e-2
"""Base step for third-order mixed derivatives."""

FD_LEVELS = 2
"""Number of Richardson extrapolation levels."""

FD_TOLERANCE = 1e-8
"""Default tolerance carried by a DiffConfig."""

FD_NOISE_FACTOR = 1e2
"""Multiple of the rounding estimate below which a difference is treated as noise."""

# Linear algebra
NULLSPACE_RCOND = 1e-10
"""Relative singular value cut for float nullspaces."""

LIFT_RESIDUAL_TOLERANCE = 1e-9
"""Maximum residual of the spin lift linear system for a valid so(7) element."""

# Sampling
SAMPLE_NUMERATOR_BOUND = 9
"""Rational sample numerators are drawn from [-9, 9]."""

SAMPLE_DENOMINATOR_BOUND = 9
"""Rational sample denominators are drawn from [1, 9]."""

DEFAULT_SAMPLES = 1000
"""Samples per identity in the exact algebra suite."""

FLOAT_SAMPLES = 50
"""Samples per identity in float-mode suites (random unit base points)."""

# ODE integration
ODE_MAX_STEP = 1e-3
"""Largest RK4 step for exponential flows."""

# Tangent algebra constants for the unit octonions
OCTONION_K = -0.25
"""Expected proportionality of phi_1 against the G2 3-form."""

OCTONION_LAMBDA = 3.0 / 8.0
"""Expected eigenvalue of phi_s phi_s^t on the unit octonions."""

OCTONION_KILLING = -24.0
"""Expected diagonal of the Killing form at s = 1 on Im O."""

OCTONION_KERNEL_DIM = 14
"""Dimension of the g2 kernel of phi_s inside so(7)."""

# Tolerances
TOL_EXACT = 0.0
"""Exact-mode identities must vanish identically."""

TOL_ALGEBRAIC = 1e-10
"""Float identities evaluated purely algebraically."""

TOL_CONSTANT_K = 1e-12
"""Tolerance on the recovered k constant."""

TOL_FD_BRACKET = 1e-6
"""Finite-difference bracket against the algebraic commutator."""

TOL_FD_ASSOCIATOR = 1e-5
"""Third-order finite-difference associator and Akivis residuals."""

TOL_FIELD = 1e-8
"""Pointwise structural and Bianchi residuals on analytic fields."""

TOL_GAUGE = 1e-7
"""Gauge, left translation and calculus identity residuals."""

TOL_VARIATION = 1e-5
"""Relative tolerance on first-variation checks."""

MIN_FD_ORDER = 1.9
"""Minimum observed convergence order accepted for finite differences."""

# Fields and domains
DEFAULT_DIMENSION = 3
"""Default torus dimension."""

DEFAULT_MAX_FREQUENCY = 2
"""Largest wave-vector component in random trigonometric fields."""

DEFAULT_AMPLITUDE = 0.5
"""Coefficient scale of random trigonometric fields."""

DEFAULT_SAMPLE_POINTS = 125
"""Number of seeded sample points for field identity suites."""

CS_GRID = 16
"""Uniform quadrature points per axis for Chern-Simons integrals."""

GRID_SIZES = (8, 16, 32)
"""Grid resolutions for the convergence-order check."""

# Energy flow
FLOW_GRID = 32
"""Grid points per axis for the energy flow."""

FLOW_DIMENSION = 2
"""Torus dimension for the energy flow."""

FLOW_INITIAL_STEP = 1e-2
"""Initial (and largest) Euler step of the energy flow."""

FLOW_STEP_GROWTH = 1.25
"""Step enlargement after an accepted step."""

FLOW_ARMIJO = 1e-4
"""Sufficient-decrease constant of the backtracking line search."""

FLOW_MAX_BACKTRACKS = 30
"""Step halvings before the line search gives up."""

FLOW_TOLERANCE = 1e-4
"""Stop when the sup norm of the torsion divergence drops below this."""

FLOW_MAX_ITERATIONS = 5000
"""Iteration cap of the energy flow."""

FLOW_LOG_EVERY = 100
"""Log progress every this many iterations."""

NORM_DRIFT_WARNING = 1e-10
"""Unit-norm drift above which a renormalization warning is logged."""

# Command line
EXIT_OK = 0
"""All identities passed."""

EXIT_FAILURE = 1
"""At least one identity failed."""

EXIT_USAGE = 2
"""Bad flags or configuration."""

REPORT_FLOAT_DIGITS = 12
"""Significant digits kept for floats written to reports."""
