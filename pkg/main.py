"""
well-echo
Spectral simulation of a particle released into a suddenly expanded infinite square well
"""

import logging
import sys

from app.well_echo_app import WellEchoApp


def main(argv=None):
    """
    Application entry point
    """
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(
        level=logging.DEBUG if "--verbose" in argv else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    # Create and initialize the application
    app = WellEchoApp()
    app.initialize()

    try:
        # Run the selected command
        return app.run(argv)
    finally:
        # Clean up resources
        app.exit()


if __name__ == "__main__":
    sys.exit(main())
