"""Exception types raised by the exporter."""


class ExportError(Exception):
    """Base class for every error the exporter raises on purpose."""


class ManifestError(ExportError):
    """The name-mapping manifest is malformed or incomplete."""


class FormatError(ExportError):
    """A binary artifact does not follow its documented layout."""
