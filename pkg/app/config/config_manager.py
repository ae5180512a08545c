"""
ConfigManager - Handles loading, saving, and reading well-echo settings
"""

import json
import logging
import os

logger = logging.getLogger(__name__)

DEFAULT_SETTINGS = {
    # Model and series
    "model.lambda": 1.5,
    "series.epsilon": 1e-6,
    "grid.points": 4096,

    # Output
    "output.format": "csv",
    "output.directory": "output",

    # Detectors
    "analysis.plateau_min_width": 0.05,
    "analysis.cusp_kappa": 20.0,
    "analysis.zero_tolerance": 1e-8,

    # Commands
    "timetrace.samples": 400,
    "verify.lambdas": [1.5, 2.5, 3.0, 5.5, 8.0],
    "verify.epsilon": 1e-6,
    "scan.divisor": 12,
    "scan.sweep": [1.5, 2.5, 3.5, 4.5, 5.5, 6.0, 6.5, 7.0],

    # Worker threads, 0 meaning one per CPU
    "threads": 0,
}


class ConfigManager:
    """
    Manages the settings file shared by every command
    """

    def __init__(self, config_file_name):
        """
        Initialize the configuration manager

        Args:
            config_file_name: Name of the configuration file
        """
        self.config_file_name = config_file_name
        self.settings = {}

    def initialize(self):
        """Install the default settings and overlay the settings file when present"""
        self.settings = dict(DEFAULT_SETTINGS)

        if os.path.exists(self.config_file_name):
            self.load_configuration()

        logger.info("ConfigManager initialized")

    def load_configuration(self):
        """
        Load configuration from file

        Returns:
            dict: The loaded settings dictionary
        """
        try:
            if os.path.exists(self.config_file_name):
                with open(self.config_file_name, "r", encoding="utf-8") as f:
                    loaded_settings = json.load(f)
                # Unknown keys are kept so older files still load
                for key, value in loaded_settings.items():
                    self.settings[key] = value
                logger.info("Settings loaded from %s", self.config_file_name)
            else:
                logger.info("Config file not found: %s, using defaults", self.config_file_name)
        except (json.JSONDecodeError, OSError) as e:
            logger.error("Error loading configuration: %s", e)

        return self.settings

    def save_configuration(self):
        """
        Save current configuration to file

        Returns:
            bool: True if successful, False otherwise
        """
        try:
            with open(self.config_file_name, "w", encoding="utf-8") as f:
                json.dump(self.settings, f, indent=4)
            logger.info("Settings saved to %s", self.config_file_name)
            return True
        except OSError as e:
            logger.error("Error saving configuration: %s", e)
            return False

    def get_setting(self, key, default=None):
        """
        Get a setting value by key

        Args:
            key: The setting key
            default: Default value if setting not found

        Returns:
            The setting value or default if not found
        """
        return self.settings.get(key, default)

    def set_setting(self, key, value):
        """
        Set a setting value

        Args:
            key: The setting key
            value: The value to set
        """
        self.settings[key] = value
