"""
WellEchoApp - Main application controller for the expanded-well simulations
"""

import logging

from app.commands.arguments import build_parser
from app.commands.command_manager import (EXIT_CHECK_FAILED, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE,
                                          CommandManager)
from app.commands.scan_command import ScanCommand
from app.commands.snapshot_command import SnapshotCommand
from app.commands.timetrace_command import TimetraceCommand
from app.commands.verify_command import VerifyCommand
from app.config.config_manager import ConfigManager
from app.config.run_config import build_run_config
from app.errors import ConfigurationError, WellEchoError
from app.util.parallel import configure_workers

logger = logging.getLogger(__name__)


class WellEchoApp:
    """
    Main application controller that parses the command line and runs one command
    """

    def __init__(self, config_file_name="settings.json"):
        """Initialize class attributes"""
        self.config_file_name = config_file_name
        self.config_manager = None
        self.command_manager = None
        self.settings_changed = False
        self.parser = build_parser()

    def initialize(self):
        """
        Load configurations and register the commands
        """
        self.config_manager = ConfigManager(self.config_file_name)
        self.config_manager.initialize()

        self.command_manager = CommandManager(self.config_manager)
        self._register_commands()

        logger.info("Application initialized successfully")

    def _register_commands(self):
        """
        Register all sub-commands with the command manager
        """
        self.command_manager.register_command("snapshot", SnapshotCommand)
        self.command_manager.register_command("timetrace", TimetraceCommand)
        self.command_manager.register_command("verify", VerifyCommand)
        self.command_manager.register_command("scan", ScanCommand)

    def run(self, argv=None):
        """
        Parse argv, validate the configuration and run the selected command

        Args:
            argv: Arguments without the program name, sys.argv[1:] when None

        Returns:
            int: 0 on success, 1 for failed checks or I/O errors, 2 for usage errors,
            3 when the computation itself fails
        """
        try:
            args = self.parser.parse_args(argv)
        except SystemExit as e:
            return EXIT_USAGE if e.code else 0

        try:
            run_config = build_run_config(args, self.config_manager)
        except (ConfigurationError, WellEchoError) as e:
            logger.error("Invalid configuration: %s", e)
            return EXIT_USAGE

        configure_workers(run_config.threads or None)
        try:
            code = self.command_manager.run_command(run_config)
        except WellEchoError as e:
            logger.error("%s failed: %s", run_config.command, e)
            return EXIT_RUNTIME
        except OSError as e:
            logger.error("I/O failure: %s", e)
            return EXIT_CHECK_FAILED

        if code == EXIT_OK and run_config.save_config:
            self._remember_settings(run_config)
        return code

    def _remember_settings(self, run_config):
        """
        Store the settings of a successful run so the next invocation starts from them

        Args:
            run_config: The RunConfig that was just run
        """
        self.config_manager.set_setting("model.lambda", run_config.lam)
        self.config_manager.set_setting("grid.points", run_config.grid_points)
        self.config_manager.set_setting("series.epsilon", run_config.epsilon)
        self.config_manager.set_setting("output.format", run_config.output_format)
        self.settings_changed = True

    def exit(self):
        """
        Clean up resources and prepare for application shutdown
        """
        if self.command_manager:
            self.command_manager.cleanup()

        # Save settings before exiting
        if self.config_manager and self.settings_changed:
            self.config_manager.save_configuration()
            self.settings_changed = False

        logger.info("Application shutdown complete")
