"""Application configuration management.

This module handles environment-specific configuration loading, parsing, and management
for the analyzer. It includes environment detection, .env file loading, and
configuration value parsing.
"""

import os
from enum import Enum
from pathlib import Path
from typing import (
    List,
    Optional,
)

from dotenv import load_dotenv


# Define environment types
class Environment(str, Enum):
    """Application environment types.

    Defines the possible environments the analyzer can run in:
    development, staging, production, and test.
    """

    DEVELOPMENT = "development"
    STAGING = "staging"
    PRODUCTION = "production"
    TEST = "test"


# Determine environment
def get_environment() -> Environment:
    """Get the current environment.

    Returns:
        Environment: The current environment (development, staging, production, or test)
    """
    match os.getenv("APP_ENV", "development").lower():
        case "production" | "prod":
            return Environment.PRODUCTION
        case "staging" | "stage":
            return Environment.STAGING
        case "test":
            return Environment.TEST
        case _:
            return Environment.DEVELOPMENT


# Load appropriate .env file based on environment
def load_env_file() -> Optional[str]:
    """Load environment-specific .env file."""
    env = get_environment()
    base_dir = os.path.dirname(os.path.dirname(os.path.dirname(__file__)))

    # Define env files in priority order
    env_files = [
        os.path.join(base_dir, f".env.{env.value}.local"),
        os.path.join(base_dir, f".env.{env.value}"),
        os.path.join(base_dir, ".env.local"),
        os.path.join(base_dir, ".env"),
    ]

    # Load the first env file that exists
    for env_file in env_files:
        if os.path.isfile(env_file):
            load_dotenv(dotenv_path=env_file)
            return env_file

    return None


ENV_FILE = load_env_file()


# Parse list values from environment variables
def parse_list_from_env(env_key: str, default: Optional[List[str]] = None) -> List[str]:
    """Parse a comma-separated list from an environment variable."""
    value = os.getenv(env_key)
    if not value:
        return default or []

    # Remove quotes if they exist
    value = value.strip("\"'")
    # Handle single value case
    if "," not in value:
        return [value]
    # Split comma-separated values
    return [item.strip() for item in value.split(",") if item.strip()]


def parse_bool_from_env(env_key: str, default: str = "false") -> bool:
    """Parse a boolean flag from an environment variable."""
    return os.getenv(env_key, default).lower() in ("true", "1", "t", "yes")


class Settings:
    """Analyzer settings without using pydantic."""

    def __init__(self):
        """Initialize analyzer settings from environment variables.

        Loads and sets all configuration values from environment variables,
        with appropriate defaults for each setting. Also applies
        environment-specific overrides based on the current environment.
        """
        # Set the environment
        self.ENVIRONMENT = get_environment()

        # Application Settings
        self.PROJECT_NAME = os.getenv("PROJECT_NAME", "Configuration Complexity Analyzer")
        self.VERSION = os.getenv("VERSION", "0.1.0")
        self.DEBUG = parse_bool_from_env("DEBUG")

        # Logging Configuration
        self.LOG_DIR = Path(os.getenv("LOG_DIR", "logs"))
        self.LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
        self.LOG_FORMAT = os.getenv("LOG_FORMAT", "json")  # "json" or "console"
        self.LOG_TO_FILE = parse_bool_from_env("LOG_TO_FILE", "true")

        # Presence conditions and scanning
        self.PC_OPTION_LIMIT = int(os.getenv("PC_OPTION_LIMIT", "24"))
        self.CALL_STOPLIST = parse_list_from_env("CALL_STOPLIST")

        # Centralities
        self.EIGEN_TOLERANCE = float(os.getenv("EIGEN_TOLERANCE", "1e-12"))
        self.EIGEN_MAX_ITERATIONS = int(os.getenv("EIGEN_MAX_ITERATIONS", "10000"))
        self.BETWEENNESS_MODE = os.getenv("BETWEENNESS_MODE", "inverse")

        # Statistics
        self.BOOTSTRAP_REPLICATES = int(os.getenv("BOOTSTRAP_REPLICATES", "1000"))
        self.BOOTSTRAP_MAX_REDRAWS = int(os.getenv("BOOTSTRAP_MAX_REDRAWS", "100"))
        self.RANDOM_SEED = int(os.getenv("RANDOM_SEED", "0"))
        self.IRLS_TOLERANCE = float(os.getenv("IRLS_TOLERANCE", "1e-8"))
        self.IRLS_MAX_ITERATIONS = int(os.getenv("IRLS_MAX_ITERATIONS", "50"))
        self.SIGNIFICANCE_LEVELS = [float(v) for v in parse_list_from_env("SIGNIFICANCE_LEVELS", ["0.01", "0.001"])]

        # Artifacts
        self.FLOAT_SIGNIFICANT_DIGITS = int(os.getenv("FLOAT_SIGNIFICANT_DIGITS", "12"))
        self.REPORT_BIN_WIDTH = float(os.getenv("REPORT_BIN_WIDTH", "0.25"))
        self.SHOW_PROGRESS = parse_bool_from_env("SHOW_PROGRESS", "true")

        # Apply environment-specific settings
        self.apply_environment_settings()

    def apply_environment_settings(self):
        """Apply environment-specific settings based on the current environment."""
        env_settings = {
            Environment.DEVELOPMENT: {
                "DEBUG": True,
                "LOG_LEVEL": "DEBUG",
                "LOG_FORMAT": "console",
            },
            Environment.STAGING: {
                "DEBUG": False,
                "LOG_LEVEL": "INFO",
            },
            Environment.PRODUCTION: {
                "DEBUG": False,
                "LOG_LEVEL": "WARNING",
                "SHOW_PROGRESS": False,
            },
            Environment.TEST: {
                "DEBUG": True,
                "LOG_LEVEL": "WARNING",
                "LOG_FORMAT": "console",
                "LOG_TO_FILE": False,
                "SHOW_PROGRESS": False,
            },
        }

        # Get settings for current environment
        current_env_settings = env_settings.get(self.ENVIRONMENT, {})

        # Apply settings if not explicitly set in environment variables
        for key, value in current_env_settings.items():
            env_var_name = key.upper()
            # Only override if environment variable wasn't explicitly set
            if env_var_name not in os.environ:
                setattr(self, key, value)


# Create settings instance
settings = Settings()
