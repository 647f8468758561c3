"""Exception hierarchy shared across the package."""


class PrioritizerError(Exception):
    """Base class for every error raised by uca_prioritizer."""


class FileError(PrioritizerError):
    """An input file is missing or unreadable."""


class FormatError(PrioritizerError):
    """A row or field could not be parsed.

    ``line`` is the 1-based physical line number in the source file when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class DatasetError(PrioritizerError):
    """A dataset violates a structural invariant (duplicate ids, duplicate PMS...)."""


class LinkError(DatasetError):
    """A record references an id that does not resolve."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class UnknownIntensity(PrioritizerError, ValueError):
    pass


class NoExperts(PrioritizerError, ValueError):
    pass


class EmptyLinks(PrioritizerError, ValueError):
    pass


class UnresolvedLink(PrioritizerError, LookupError):
    pass


class UnresolvedController(PrioritizerError, LookupError):
    pass


class DuplicateLevel(PrioritizerError, ValueError):
    pass


class ConfigError(PrioritizerError, ValueError):
    pass


class AxisDegenerate(PrioritizerError, ValueError):
    pass


class EmptyInput(PrioritizerError, ValueError):
    pass


class UnsupportedFormat(PrioritizerError, ValueError):
    pass


class MissingResults(PrioritizerError):
    pass
