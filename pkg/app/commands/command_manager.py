"""
CommandManager - Registers the sub-commands and runs the selected one
"""

import logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


class Command:
    """
    Base interface for all sub-commands
    Each command computes one kind of dataset and writes it to disk
    """

    def initialize(self, run_config, config_manager):
        """
        Initialize the command with its configuration

        Args:
            run_config: The validated RunConfig of this invocation
            config_manager: The application's configuration manager
        """
        self.run_config = run_config
        self.config_manager = config_manager

    def run(self):
        """
        Perform the computation and write the outputs

        Returns:
            int: exit code, EXIT_OK unless a numeric check failed
        """
        return EXIT_OK

    def cleanup(self):
        """Release command resources"""
        pass


class CommandManager:
    """
    Maps sub-command names to command classes
    """

    def __init__(self, config_manager):
        """
        Initialize the command manager

        Args:
            config_manager: The application's configuration manager
        """
        self.config_manager = config_manager
        self.commands = {}  # Maps command names to command classes
        self.current_command = None

    def register_command(self, name, command_class):
        """
        Register a command with the command manager

        Args:
            name: Unique name for the command
            command_class: Class of the command to register
        """
        self.commands[name] = command_class
        logger.debug("Registered command: %s", name)

    def run_command(self, run_config):
        """
        Instantiate and run the command named by run_config.command

        Args:
            run_config: The validated RunConfig

        Returns:
            int: the command's exit code, EXIT_USAGE if the command is unknown
        """
        name = run_config.command
        if name not in self.commands:
            logger.error("Command not found: %s", name)
            return EXIT_USAGE

        # Clean up the previous command if one exists
        if self.current_command is not None:
            self.current_command.cleanup()

        self.current_command = self.commands[name]()
        self.current_command.initialize(run_config, self.config_manager)

        logger.info("Running command: %s", name)
        try:
            return self.current_command.run()
        finally:
            self.current_command.cleanup()

    def cleanup(self):
        """Clean up the current command"""
        if self.current_command is not None:
            self.current_command.cleanup()
            self.current_command = None
