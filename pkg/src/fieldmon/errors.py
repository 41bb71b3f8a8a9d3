"""Domain errors shared across the platform.

Every error carries a stable ``error_code`` (the class name) and the HTTP
status the API layer maps it to. Modules raise these directly; the API
layer only translates them into ``{error_code, detail}`` documents.
"""


class PlatformError(Exception):
    http_status = 400

    @property
    def error_code(self) -> str:
        return type(self).__name__


# -- study registry -----------------------------------------------------

class UnknownStudy(PlatformError):
    http_status = 404


class DuplicateStudyId(PlatformError):
    http_status = 409


class InvalidConfig(PlatformError):
    http_status = 400


class AlreadyClosed(PlatformError):
    http_status = 409


class StudyClosed(PlatformError):
    http_status = 409


# -- enrollment ---------------------------------------------------------

class DuplicateSubjectLabel(PlatformError):
    http_status = 409


class UnknownToken(PlatformError):
    http_status = 404


class TokenAlreadyUsed(PlatformError):
    http_status = 409


class MalformedPayload(PlatformError):
    http_status = 400


class NotRegistered(PlatformError):
    http_status = 404


class AlreadyLeft(PlatformError):
    http_status = 409


class UnknownRegistration(PlatformError):
    http_status = 404


class AuthFailure(PlatformError):
    http_status = 401


# -- ingestion ----------------------------------------------------------

class ChecksumMismatch(PlatformError):
    http_status = 422


class SensorNotInStudy(PlatformError):
    http_status = 400


# -- datastore ----------------------------------------------------------

class EmptyObject(PlatformError):
    http_status = 400


class AlreadyInitialized(PlatformError):
    http_status = 409


class UnknownObject(PlatformError):
    http_status = 404


class PathCollision(PlatformError):
    http_status = 409


# -- quality control ----------------------------------------------------

class NegativeInterval(PlatformError):
    http_status = 400


# -- notifications ------------------------------------------------------

class UnknownSubject(PlatformError):
    http_status = 404


# -- device simulation --------------------------------------------------

class InvalidSpec(PlatformError):
    http_status = 400


class ScenarioInvalid(PlatformError):
    http_status = 400
