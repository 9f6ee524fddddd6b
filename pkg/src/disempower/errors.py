"""Exception types shared across the package.

Two broad failure classes: bad values fed to an operation (plain
``ValueError`` with the offending argument named in the message) and bad
configuration (``ConfigurationError`` and its subclasses, which the CLI
maps to exit code 2).
"""


class ConfigurationError(ValueError):
    """Invalid parameters, scenario config, or run setup."""


class OutOfRangeError(ConfigurationError):
    """A named field violates its declared range."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class UnknownKeyError(ConfigurationError):
    """A config document contains a key the schema does not define."""

    def __init__(self, key: str, where: str = ""):
        loc = f" in {where}" if where else ""
        super().__init__(f"unknown key {key!r}{loc}")
        self.key = key


class ScenarioFormatError(ConfigurationError):
    """Scenario text is not syntactically valid JSON."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"syntax error at line {line}, column {column}: {message}")
        self.line = line
        self.column = column
