"""Single source of the version baked into reports and sidecar metadata."""

__version__ = "0.1.0"
TOOL_VERSION = f"specmosaic {__version__}"
