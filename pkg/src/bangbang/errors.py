class ConfigurationError(ValueError):
    """Invalid problem, mesh, solver or optimizer settings."""

    def __init__(self, message: str, section: str | None = None):
        self.section = section
        super().__init__(f"{section}: {message}" if section else message)


class NumericalError(RuntimeError):
    """A linear solve or iteration broke down."""
