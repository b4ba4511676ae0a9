class ResourceLimitError(RuntimeError):
    """A requested object would exceed a configured memory or qubit budget."""
