"""Constants for the ReluBoot package."""

# Network defaults (two hidden layers of 64 ReLU units, Adam at 1e-3)
DEFAULT_DEPTH = 2
DEFAULT_WIDTH = 64
DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_EPOCHS = 200
DEFAULT_BATCH_SIZE = 64
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

# Gradient checking
GRADCHECK_STEP = 1e-5
GRADCHECK_TOLERANCE = 1e-4
GRADCHECK_MAX_WIDTH = 8
GRADCHECK_MAX_DEPTH = 3

# Variance handling
VARIANCE_FLOOR = 1e-8  # added under sqrt|g| before dividing

# Bootstrap defaults
DEFAULT_B = 1500
DEFAULT_B_TILDE = 1000
DEFAULT_ALPHA = 0.1
DEFAULT_LOG_POWER = 2.0
MIN_SPLIT_SIZE = 8

# Quantile convention: ceil(level * m) with this slack against float noise
QUANTILE_SLACK = 1e-9

# Estimation strategies and estimator kinds
STRATEGIES = ("full", "split")
VARIANCE_KINDS = ("residual", "direct", "homoscedastic")
A0_VARIANTS = ("theoretical", "empirical", "homoscedastic")
B_VARIANTS = ("theoretical", "empirical")
CI_METHODS = ("nn", "nn_emp", "nn_hom", "naive", "standard")
PI_METHODS = ("nn_res", "nn_dir")

# Network binary format
NETWORK_MAGIC = b"RBNT"
NETWORK_FORMAT_VERSION = 1

# Environment variables
ENV_LOG_LEVEL = "RELUBOOT_LOG_LEVEL"
ENV_THREADS = "RELUBOOT_THREADS"
ENV_RUN_SLOW = "RELUBOOT_RUN_SLOW"

# Seed stream labels
SEED_HASH_PERSON = b"reluboot-seed"

# CSV schemas (column order is part of the output contract)
CSV_COLUMNS = {
    "variance": ["scenario", "n", "method", "strategy", "trial", "mse"],
    "coverage": ["scenario", "n", "alpha", "method", "dataset", "coverage", "prange"],
    "real_data_pi": ["split", "method", "alpha", "coverage"],
    "real_data_ci": ["split", "method", "alpha", "length"],
    "gradcheck": ["input_dim", "depth", "width", "seed", "max_rel_error"],
}

# Exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# Error messages - Actionable and specific
ERROR_MESSAGES = {
    "dimension_mismatch": (
        "Dimension mismatch in {where}: expected {expected}, got {actual}. "
        "To fix: make sure covariate rows have the network's input_dim columns "
        "and that xs and ys have the same number of rows"
    ),
    "training_diverged": (
        "Training diverged at epoch {epoch}: loss became {loss}. "
        "To fix: 1) Lower the learning rate, 2) Rescale the responses, "
        "3) Check the data for non-finite values"
    ),
    "non_positive_bound": (
        "Clip bound must be positive, got {bound}. "
        "Use the maximum absolute response (mean) or maximum squared residual (variance)"
    ),
    "split_too_small": (
        "Cannot split {n} observations into four blocks: need at least {minimum}. "
        "Increase the sample size"
    ),
    "degenerate_distribution": (
        "Standardized residuals are degenerate: {detail}. "
        "This happens when every residual on the block is identical; "
        "check the mean fit or use a larger block"
    ),
    "missing_context": (
        "Variant '{variant}' needs {missing} but it was not provided. "
        "Provide the replicate B+1 fits and the I4 block, or pick the 'theoretical' variant"
    ),
    "invalid_variant": (
        "Invalid {what}: '{value}'. Must be one of: {allowed}"
    ),
    "invalid_alpha": (
        "Invalid alpha: {alpha}. Must lie strictly between 0 and 1 (e.g. 0.1 for a 90% interval)"
    ),
    "invalid_bootstrap_counts": (
        "Invalid bootstrap counts B={B}, B_tilde={B_tilde}. "
        "Both must be positive and B_tilde must be smaller than B"
    ),
    "empty_values": (
        "Cannot take a quantile of an empty collection in {where}"
    ),
    "file_not_found": (
        "Dataset file not found: '{path}'. "
        "To fix: check the path, or use the bundled stand-in reluboot/data/housing_standin.csv"
    ),
    "unknown_column": (
        "Unknown column '{column}' in '{path}'. Available columns: {available}"
    ),
    "malformed_cell": (
        "Malformed value {value!r} at row {row}, column '{column}' in '{path}'. "
        "Every feature and target cell must parse as a real number"
    ),
    "non_positive_target": (
        "Target column '{column}' has non-positive values (row {row}); "
        "a log transform needs strictly positive responses"
    ),
    "bad_network_blob": (
        "Not a ReluBoot network blob: {detail}"
    ),
    "unknown_scenario": (
        "Unknown scenario id {scenario}. Valid scenario ids are 1, 2, 3, 4 and 5"
    ),
    "unknown_estimator": (
        "Unknown variance estimator '{name}'. Registered estimators: {available}"
    ),
    "degenerate_range": (
        "True mean function is constant over the evaluation covariates of dataset {dataset}; "
        "PRange is undefined"
    ),
    "stage_failed": (
        "Stage '{stage}' failed: {error}"
    ),
    "empty_seed_label": (
        "Seed stream label must be a non-empty string"
    ),
    "invalid_config": (
        "Invalid configuration for '{command}': {error}. "
        "Check the --config file and command-line flags"
    ),
}
