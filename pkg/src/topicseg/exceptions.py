"""Exception hierarchy shared across the package."""


class TopicSegError(Exception):
    """Base class for all package errors."""


class ConfigError(TopicSegError, ValueError):
    """Invalid or unresolvable configuration."""


# text core
class EmptyInput(TopicSegError, ValueError):
    pass


class RangeOutOfBounds(TopicSegError, IndexError):
    pass


class InvalidSegmentation(TopicSegError, ValueError):
    pass


# windowing
class SentenceTooLarge(TopicSegError, ValueError):
    """A single sentence does not fit in the prompt window budget."""


# llm gateway
class GatewayError(TopicSegError):
    """Failure talking to a chat-completion provider."""


class TransportError(GatewayError):
    pass


class AuthError(GatewayError):
    pass


class GatewayTimeout(TransportError):
    pass


class MalformedResponse(GatewayError):
    pass


class MissingCredentials(GatewayError, ConfigError):
    """The configured auth environment variable is unset."""


class NoIndicesFound(TopicSegError, ValueError):
    pass


class NoValidIndex(TopicSegError, ValueError):
    pass


# llm segmenter
class PromptTooLarge(TopicSegError, ValueError):
    pass


# baselines
class ProviderFailure(TopicSegError):
    """An embedding source could not supply vectors."""


class DimensionMismatch(TopicSegError, ValueError):
    pass


# metrics
class SentenceCountMismatch(TopicSegError, ValueError):
    pass


# corpus
class NoSections(TopicSegError, ValueError):
    pass


class InsufficientPool(TopicSegError, ValueError):
    pass


class ParseError(TopicSegError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SchemaViolation(ParseError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.field = field
        super().__init__(message, line)


class IdMismatch(TopicSegError, ValueError):
    def __init__(self, message: str, ids: list[str] | None = None):
        self.ids = ids or []
        super().__init__(message)
