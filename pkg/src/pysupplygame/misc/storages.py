import sqlite3
from abc import ABC, abstractmethod
from copy import deepcopy
from threading import Lock
from typing import Any, Dict, Iterator, List, Optional, Union

import msgpack

from pysupplygame import exceptions
from pysupplygame.models import EpisodeSummary

Value = Union[Dict, List, str, int, bytes, float, bool, None]


class StorageBaseClass(ABC):
    @abstractmethod
    def get(self, key: str) -> Value:
        pass

    @abstractmethod
    def set(self, key: str, value: Value) -> None:
        pass

    @abstractmethod
    def unset(self, key: str) -> None:
        pass

    @abstractmethod
    def exists(self, key: str) -> bool:
        pass

    @abstractmethod
    def keys(self) -> List[str]:
        pass

    @abstractmethod
    def close(self) -> None:
        pass

    @property
    @abstractmethod
    def closed(self) -> bool:
        pass


class ByteStorage(StorageBaseClass, ABC):
    """A key-value store that keeps msgpack-encoded values in a byte-oriented backend."""

    def get(self, key: str) -> Value:
        """
        Retrieve and decode the value stored under key.

        Args:
            key (str): The key to retrieve the value for.

        Returns:
            Value: The decoded value, or None if the key does not exist.

        Raises:
            StorageOperationError: If any error occurs while retrieving the key.
        """
        try:
            value = self._get(str(key))
            if value is None:
                return None
            return msgpack.unpackb(value, strict_map_key=False)
        except Exception as e:
            raise exceptions.StorageOperationError(exception=e)

    def set(self, key: str, value: Value) -> None:
        """
        Encode and store value under key, replacing any previous value.

        Raises:
            StorageOperationError: If the value cannot be encoded or stored.
        """
        try:
            self._set(str(key), msgpack.packb(value))
        except Exception as e:
            raise exceptions.StorageOperationError(exception=e)

    def unset(self, key: str) -> None:
        try:
            self._unset(str(key))
        except Exception as e:
            raise exceptions.StorageOperationError(exception=e)

    def exists(self, key: str) -> bool:
        try:
            return self._get(str(key)) is not None
        except Exception as e:
            raise exceptions.StorageOperationError(exception=e)

    def keys(self) -> List[str]:
        """All stored keys, sorted."""
        try:
            return sorted(self._keys())
        except Exception as e:
            raise exceptions.StorageOperationError(exception=e)

    @abstractmethod
    def _get(self, key: str) -> Optional[bytes]:
        pass

    @abstractmethod
    def _set(self, key: str, value: bytes) -> None:
        pass

    @abstractmethod
    def _unset(self, key: str) -> None:
        pass

    @abstractmethod
    def _keys(self) -> Iterator[str]:
        pass


class InMemoryStorage(StorageBaseClass):
    """A dictionary-backed store; values are deep-copied on the way in."""

    def __init__(self):
        self._store = {}
        self._lock = Lock()
        self._is_closed = False

    def _raise_if_closed(self):
        if self._is_closed:
            raise exceptions.StorageOperationError(exception="storage is closed")

    def get(self, key: Any) -> Optional[Any]:
        self._raise_if_closed()
        with self._lock:
            return deepcopy(self._store.get(key, None))

    def set(self, key: Any, value: Any) -> None:
        self._raise_if_closed()
        with self._lock:
            self._store[key] = deepcopy(value)

    def unset(self, key: Any) -> None:
        self._raise_if_closed()
        with self._lock:
            self._store.pop(key, None)

    def exists(self, key: Any) -> bool:
        self._raise_if_closed()
        with self._lock:
            return key in self._store

    def keys(self) -> List[Any]:
        self._raise_if_closed()
        with self._lock:
            return sorted(self._store)

    def close(self) -> None:
        """Drop every entry; the store cannot be used afterwards."""
        self._raise_if_closed()
        with self._lock:
            self._store.clear()
            self._is_closed = True

    @property
    def closed(self) -> bool:
        return self._is_closed


class SQLiteStorage(ByteStorage):
    def __init__(self, db_path: str):
        """
        Open (or create) a single-table SQLite key-value store.

        The connection is shared between worker threads and serialized by a lock.

        Args:
            db_path (str): Path of the database file, or ':memory:'.

        Raises:
            StorageOperationError: If the connection to the database fails.
        """
        try:
            self._connection = sqlite3.connect(db_path, check_same_thread=False)
            self._cursor = self._connection.cursor()
            self._lock = Lock()
            with self._lock:
                self._cursor.execute("CREATE TABLE IF NOT EXISTS storage (key TEXT PRIMARY KEY, value BLOB)")
                self._connection.commit()
        except Exception as e:
            raise exceptions.StorageOperationError("Failed to open SQLite database: {exception}.", exception=e)

    def _get(self, key: str) -> Optional[bytes]:
        with self._lock:
            self._cursor.execute("SELECT value FROM storage WHERE key = ?", (key,))
            row = self._cursor.fetchone()
            return row[0] if row else None

    def _set(self, key: str, value: bytes) -> None:
        with self._lock:
            self._cursor.execute("REPLACE INTO storage (key, value) VALUES (?, ?)", (key, value))
            self._connection.commit()

    def _unset(self, key: str) -> None:
        with self._lock:
            self._cursor.execute("DELETE FROM storage WHERE key = ?", (key,))
            self._connection.commit()

    def _keys(self) -> Iterator[str]:
        with self._lock:
            self._cursor.execute("SELECT key FROM storage")
            return [row[0] for row in self._cursor.fetchall()]

    def close(self) -> None:
        with self._lock:
            self._connection.close()

    @property
    def closed(self) -> bool:
        try:
            self._connection.execute("SELECT 1")
            return False
        except sqlite3.ProgrammingError:
            return True


class ResultStore:
    """
    Episode summaries of one run directory, keyed by run key (T<horizon>-seed<seed>).

    Args:
        storage (StorageBaseClass): The backend; SQLiteStorage for run directories, InMemoryStorage in tests.
    """
    def __init__(self, storage: StorageBaseClass):
        self.storage = storage

    def put(self, summary: EpisodeSummary):
        self.storage.set(summary.key, summary.to_dict())

    def get(self, key: str) -> Optional[EpisodeSummary]:
        data = self.storage.get(key)
        return EpisodeSummary.from_dict(data) if data is not None else None

    def __contains__(self, key: str) -> bool:
        return self.storage.exists(key)

    def keys(self) -> List[str]:
        return self.storage.keys()

    def summaries(self) -> List[EpisodeSummary]:
        return [self.get(key) for key in self.keys()]

    def close(self):
        if not self.storage.closed:
            self.storage.close()
