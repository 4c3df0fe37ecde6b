from enum import StrEnum
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from pysupplygame.misc.routers import Router


class SupplyGameError(Exception):
    """Base class for exceptions raised by pysupplygame."""
    pass

class ConfigurationError(SupplyGameError):
    """Raised when an experiment config, a distribution spec or a policy spec is invalid."""
    def __init__(self, message="Invalid configuration [{field}]: {reason}.", field: str = None, reason: Any = None, line: int = None):
        self.field = field
        self.reason = reason
        self.line = line
        if line is not None:
            message = message.rstrip('.') + " (line {line})."
        super().__init__(message.format(field=field, reason=reason, line=line))

class DomainError(SupplyGameError):
    """Raised when a function is evaluated outside the interval where it is defined."""
    def __init__(self, message="{name}({value}) is undefined: argument must lie in {domain}.", name: str = None, value: float = None, domain: str = None):
        self.name = name
        self.value = value
        self.domain = domain
        super().__init__(message.format(name=name, value=value, domain=domain))

class PreconditionError(SupplyGameError):
    """Raised when an operation is called with arguments violating its preconditions."""
    def __init__(self, message="Precondition violated: {reason}.", reason: str = None):
        self.reason = reason
        super().__init__(message.format(reason=reason))

class ProtocolViolationError(SupplyGameError):
    """Raised when a policy or the environment breaks the repeated-game protocol."""
    def __init__(self, message="Protocol violation at round {t}: {reason}.", t: int = None, reason: str = None):
        self.t = t
        self.reason = reason
        super().__init__(message.format(t=t, reason=reason))

class AnalysisError(SupplyGameError):
    """Raised when a numerical analysis cannot produce a result."""
    def __init__(self, message="Analysis failed: {reason}.", reason: str = None):
        self.reason = reason
        super().__init__(message.format(reason=reason))

class StorageOperationError(SupplyGameError):
    """Raised when a storage operation fails."""
    def __init__(self, message="Storage operation failed: {exception}.", exception=None):
        self.message = message
        self.exception = exception
        super().__init__(self.message.format(exception=exception))

class ManifestNotFoundError(SupplyGameError):
    """Raised when a run directory holds no manifest."""
    def __init__(self, message="no manifest found in {run_dir}", run_dir: str = None):
        self.run_dir = run_dir
        super().__init__(message.format(run_dir=run_dir))

class OutputExistsError(SupplyGameError):
    """Raised when the output directory already holds files and overwriting was not forced."""
    def __init__(self, message="Output directory {output_dir} is not empty. Pass --force to overwrite it.", output_dir: str = None):
        self.output_dir = output_dir
        super().__init__(message.format(output_dir=output_dir))


class RouterError(SupplyGameError):
    """Base class for router exceptions."""
    def __init__(self, message="Router error: {exception}.", exception=None):
        self.message = message
        self.exception = exception
        super().__init__(self.message.format(exception=exception))

class HandlerAlreadyRegisteredError(RouterError):
    """Raised when a handler is already registered."""
    def __init__(self, message="Handler [{handler}] already registered.", handler: callable = None):
        self.handler = handler
        super().__init__(message.format(handler=getattr(handler, '__name__', handler)))

class HandlerNotRegisteredError(RouterError):
    """Raised when a handler is not registered."""
    def __init__(self, message="Handler [{handler}] not registered.", handler: callable = None):
        self.handler = handler
        super().__init__(message.format(handler=getattr(handler, '__name__', handler)))

class EventNotExistsError(RouterError):
    """Raised when an event does not exist in the router."""
    def __init__(self, message="Event [{event}] does not exist in the router {router}.", event: str = None, router: 'Router' = None):
        self.event = event
        super().__init__(message.format(event=event, router=router.__class__.__name__))

class EventEnumExistsError(RouterError):
    """Raised when an event enum already exists in the router."""
    def __init__(self, message="Event enum [{enum}] already exists in the router {router}.", enum: StrEnum = None, router: 'Router' = None):
        self.enum = enum
        super().__init__(message.format(enum=getattr(enum, '__name__', enum), router=router.__class__.__name__))


class DispatcherError(SupplyGameError):
    """Base class for dispatcher exceptions."""
    def __init__(self, message="Dispatcher error: {exception}.", exception=None):
        self.message = message
        self.exception = exception
        super().__init__(self.message.format(exception=exception))

class DispatcherIsRunningError(DispatcherError):
    """Raised when jobs are submitted to a dispatcher that is already running a batch."""
    def __init__(self, message="Dispatcher is running. You must perform this operation while the dispatcher is not running."):
        super().__init__(message)

class JobFailedError(DispatcherError):
    """Raised when too many consecutive jobs fail and the dispatcher gives up."""
    def __init__(self, message="Job {key} failed: {exception}.", key: Any = None, exception=None):
        self.key = key
        self.message = message
        self.exception = exception
        SupplyGameError.__init__(self, message.format(key=key, exception=exception))
