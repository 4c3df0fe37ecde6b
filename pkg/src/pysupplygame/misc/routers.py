import threading
from enum import StrEnum
from typing import Callable, Dict, List

from pysupplygame import exceptions


class Router:
    event_enums: List[StrEnum]

    def __init__(self, *event_enums: StrEnum):
        """
        Route run events to the handlers registered for them.

        Only events declared by the given enums can be handled or triggered. Registration and
        triggering are serialized by a lock, so worker threads may trigger events concurrently.

        Args:
            *event_enums (StrEnum): The enums declaring the routable events.

        Raises:
            EventEnumExistsError: If two enums declare the same event.
        """
        self.event_enums = []
        self._handlers: Dict[str, List[Callable]] = {}
        self._lock = threading.Lock()
        self.add_event_enums(*event_enums)

    def add_event_enums(self, *event_enums: StrEnum, raise_on_exist: bool = True):
        """
        Declare more routable events.

        Args:
            *event_enums (StrEnum): The enums to add.
            raise_on_exist (bool): Whether an enum already added (or overlapping one) is an error. Defaults to True.

        Raises:
            EventEnumExistsError: If raise_on_exist and an enum or one of its events is already routed.
        """
        for enum in event_enums:
            if enum in self.event_enums or set(enum) & set(self._handlers):
                if raise_on_exist:
                    raise exceptions.EventEnumExistsError(enum=enum, router=self)
                continue
            self.event_enums.append(enum)
            self._handlers.update({event: [] for event in enum})

    def handle(self, *events: str, raise_on_exist: bool = True) -> Callable:
        """
        Decorator registering a handler for events.

        Args:
            *events (str): The events routed to the handler.
            raise_on_exist (bool): Whether re-registering the handler is an error. Defaults to True.

        Returns:
            Callable: The decorator; it returns the handler unchanged.
        """
        def decorator(handler: Callable) -> Callable:
            self.add_handler(handler, *events, raise_on_exist=raise_on_exist)
            return handler
        return decorator

    def add_handler(self, handler: Callable, *events: str, raise_on_exist: bool = True):
        """
        Register handler(event, update) for events.

        Raises:
            HandlerAlreadyRegisteredError: When raise_on_exist and the handler is already registered.
            EventNotExistsError: When an event is not routed by this router.
        """
        with self._lock:
            for event in events:
                if event not in self._handlers:
                    raise exceptions.EventNotExistsError(event=event, router=self)
                if handler not in self._handlers[event]:
                    self._handlers[event].append(handler)
                elif raise_on_exist:
                    raise exceptions.HandlerAlreadyRegisteredError(handler=handler)

    def remove_handler(self, handler: Callable, *events: str, raise_on_not_exist: bool = True):
        """
        Unregister handler for events.

        Raises:
            HandlerNotRegisteredError: When raise_on_not_exist and the handler is not registered.
            EventNotExistsError: When an event is not routed by this router.
        """
        with self._lock:
            for event in events:
                if event not in self._handlers:
                    raise exceptions.EventNotExistsError(event=event, router=self)
                if handler in self._handlers[event]:
                    self._handlers[event].remove(handler)
                elif raise_on_not_exist:
                    raise exceptions.HandlerNotRegisteredError(handler=handler)

    def get_handlers(self, *events: str) -> List[Callable]:
        with self._lock:
            handlers = []
            for event in events:
                if event not in self._handlers:
                    raise exceptions.EventNotExistsError(event=event, router=self)
                handlers.extend(self._handlers[event])
            return handlers

    def trigger_event(self, event: str, *args, **kwargs):
        """
        Call every handler registered for event, in registration order.

        Raises:
            EventNotExistsError: When the event is not routed by this router.
        """
        with self._lock:
            if event not in self._handlers:
                raise exceptions.EventNotExistsError(event=event, router=self)
            handlers = list(self._handlers[event])
        for handler in handlers:
            handler(event, *args, **kwargs)
