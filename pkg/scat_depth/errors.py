"""Exception hierarchy. The CLI maps each class to its process exit code."""

from typing import Literal


CheckpointErrorCode = Literal[
    "version_mismatch",
    "truncated_blob",
    "blob_size_mismatch",
    "malformed_manifest",
]


class SCATError(Exception):
    exit_code = 1


class ConfigError(SCATError, ValueError):
    exit_code = 3


class DataError(SCATError):
    exit_code = 4


class CheckpointError(DataError):
    def __init__(self, code: CheckpointErrorCode, message: str):
        super().__init__(f"[{code}] {message}")
        self.code = code


class NumericalAbort(SCATError):
    exit_code = 5
