"""Error types shared across the package.

InputError covers anything wrong with user-supplied data or configuration
(CLI exit code 2); DivergenceError covers numeric blow-ups during training
(CLI exit code 3).
"""


class InputError(ValueError):
    """Bad input data, file, or configuration."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, message, epoch=None, client_id=None):
        if epoch is not None:
            message = f"{message} (epoch {epoch})"
        if client_id is not None:
            message = f"{message} [client {client_id}]"
        super().__init__(message)
        self.epoch = epoch
        self.client_id = client_id
