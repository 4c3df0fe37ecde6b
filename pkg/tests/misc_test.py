import threading
from enum import StrEnum

import pytest
from icecream import ic

from pysupplygame import exceptions
from pysupplygame.misc import dispatchers, routers, storages
from pysupplygame.misc.events import RunEvents
from pysupplygame.models import EpisodeSummary

storage_test_data = {
    "simple_string": "T100-seed3",
    "simple_int": 42,
    "simple_float": 0.1125,
    "simple_bool_true": True,
    "simple_none_free_list": [1, 2, 3],
    "empty_dict": {},
    "empty_list": [],
    "nested_metrics": {
        "supplier_avg_regret": 0.0123,
        "bounds": {"etc-supplier": {"value": 0.3, "metric": 0.0123, "compliant": True}},
    },
    "large_number": 10**18,
    "negative_float": -0.123456,
    "bytes": b"\x00\x01\x02\x03",
    "unicode_string": "w★ q★",
}

summary = EpisodeSummary(
    mode='simulate', horizon=100, seed=3, regret=0.0123, bound=0.3, compliant=True,
    metrics={'supplier_avg_regret': 0.0123, 'l1_last_iterate': 0.02}, trajectory_file='trajectories/T100-seed3.csv',
)


def storage_tst(storage: storages.StorageBaseClass):
    for key in storage_test_data:
        storage.unset(key)

    for key in storage_test_data:
        assert storage.get(key) is None
        assert not storage.exists(key)

    for key in storage_test_data:
        storage.set(key, storage_test_data[key])

    for key in storage_test_data:
        assert storage.get(key) == storage_test_data[key]
    assert storage.keys() == sorted(storage_test_data)

    for key in storage_test_data:
        storage.unset(key)

    for key in storage_test_data:
        assert storage.get(key) is None


def storage_close(storage: storages.StorageBaseClass):
    storage.close()
    assert storage.closed


def test_storages(tmp_path):
    in_memory = storages.InMemoryStorage()
    sqlite = storages.SQLiteStorage(str(tmp_path / 'store.sqlite'))

    storage_tst(in_memory)
    storage_close(in_memory)
    with pytest.raises(exceptions.StorageOperationError):
        in_memory.get('simple_int')
    ic("InMemoryStorage: OK")

    storage_tst(sqlite)
    storage_close(sqlite)
    with pytest.raises(exceptions.StorageOperationError):
        sqlite.get('simple_int')
    ic("SQLiteStorage: OK")


def test_result_store(tmp_path):
    path = str(tmp_path / 'results.sqlite')
    store = storages.ResultStore(storages.SQLiteStorage(path))
    store.put(summary)
    store.close()

    store = storages.ResultStore(storages.SQLiteStorage(path))
    assert 'T100-seed3' in store
    assert store.keys() == ['T100-seed3']
    assert store.get('T100-seed3') == summary
    assert store.get('T100-seed4') is None
    assert store.summaries() == [summary]
    store.close()
    store.close()


class ExtraEvents(StrEnum):
    REPLAYED = 'job.replayed'


class OverlappingEvents(StrEnum):
    FINISHED = 'job.finished'


def test_router():
    router = routers.Router(RunEvents)
    seen = []

    @router.handle(RunEvents.JOB_FINISHED, RunEvents.RUN_FINISHED)
    def handler(event: str, update):
        seen.append((event, update))

    router.trigger_event(RunEvents.JOB_FINISHED, 1)
    router.trigger_event(RunEvents.JOB_FAILED, 2)
    router.trigger_event(RunEvents.RUN_FINISHED, 3)
    assert seen == [(RunEvents.JOB_FINISHED, 1), (RunEvents.RUN_FINISHED, 3)]
    assert router.get_handlers(RunEvents.JOB_FINISHED) == [handler]

    with pytest.raises(exceptions.HandlerAlreadyRegisteredError):
        router.add_handler(handler, RunEvents.JOB_FINISHED)
    router.add_handler(handler, RunEvents.JOB_FINISHED, raise_on_exist=False)
    assert router.get_handlers(RunEvents.JOB_FINISHED) == [handler]

    router.remove_handler(handler, RunEvents.JOB_FINISHED)
    with pytest.raises(exceptions.HandlerNotRegisteredError):
        router.remove_handler(handler, RunEvents.JOB_FINISHED)
    router.trigger_event(RunEvents.JOB_FINISHED, 4)
    assert len(seen) == 2

    with pytest.raises(exceptions.EventNotExistsError):
        router.trigger_event(ExtraEvents.REPLAYED, 5)
    router.add_event_enums(ExtraEvents)
    router.trigger_event(ExtraEvents.REPLAYED, 5)
    with pytest.raises(exceptions.EventEnumExistsError):
        router.add_event_enums(ExtraEvents)
    with pytest.raises(exceptions.EventEnumExistsError):
        router.add_event_enums(OverlappingEvents)
    router.add_event_enums(OverlappingEvents, raise_on_exist=False)
    assert OverlappingEvents not in router.event_enums


def failing_job(message: str):
    def job():
        raise exceptions.ConfigurationError(field='job', reason=message)
    return job


def test_dispatcher_orders_results_and_reports_events():
    router = routers.Router(RunEvents)
    events = []
    lock = threading.Lock()

    @router.handle(*RunEvents)
    def handler(event: str, update):
        with lock:
            events.append((event, update))

    dispatcher = dispatchers.JobDispatcher(router, workers=3)
    for key in (4, 0, 3, 1):
        dispatcher.submit(key, lambda key=key: key * key, on_success=lambda result: result)
    dispatcher.submit(2, failing_job("boom"), on_failure=lambda e: e.reason)
    with pytest.raises(exceptions.DispatcherError):
        dispatcher.submit(2, failing_job("again"))

    results = dispatcher.run()
    ic(results, events)
    assert list(results) == [0, 1, 3, 4]
    assert results[3] == 9
    assert dispatcher.errors == 1
    assert sorted(update for event, update in events if event == RunEvents.JOB_FINISHED) == [0, 1, 9, 16]
    assert [update for event, update in events if event == RunEvents.JOB_FAILED] == ["boom"]
    assert dispatcher.run() == {}


def test_dispatcher_gives_up_after_consecutive_failures():
    dispatcher = dispatchers.JobDispatcher(workers=1, errors_treshold=2)
    assert dispatcher.errors_treshold == 2
    for key in range(5):
        dispatcher.submit(key, failing_job(f"job {key}"))
    with pytest.raises(exceptions.JobFailedError) as error:
        dispatcher.run()
    assert error.value.key == 1
    assert dispatcher.errors == 2

    dispatcher.errors_treshold = 3
    dispatcher.submit('a', failing_job("first"))
    dispatcher.submit('b', lambda: 'ok')
    dispatcher.submit('c', failing_job("second"))
    dispatcher.submit('d', failing_job("third"))
    assert dispatcher.run() == {'b': 'ok'}

    router = routers.Router(RunEvents)
    failures = []
    router.add_handler(lambda event, update: failures.append(update), RunEvents.JOB_FAILED)
    dispatcher.add_router(router)
    with pytest.raises(exceptions.DispatcherError):
        dispatcher.add_router(router)
    dispatcher.submit('e', failing_job("routed"), on_failure=lambda e: e.reason)
    assert dispatcher.run() == {}
    assert failures == ["routed"]

    with pytest.raises(exceptions.ConfigurationError):
        dispatchers.JobDispatcher(workers=0)
    with pytest.raises(TypeError):
        dispatchers.JobDispatcher(routers=[object()])


def test_dispatcher_counts_unexpected_exceptions():
    def disk_full():
        raise OSError("disk full")

    router = routers.Router(RunEvents)
    failures = []
    router.add_handler(lambda event, update: failures.append(update), RunEvents.JOB_FAILED)
    dispatcher = dispatchers.JobDispatcher(router, workers=2, errors_treshold=2)
    dispatcher.submit(0, disk_full, on_failure=lambda e: e)
    dispatcher.submit(1, lambda: 'ok')
    assert dispatcher.run() == {1: 'ok'}
    assert dispatcher.errors == 1
    assert len(failures) == 1
    assert isinstance(failures[0], exceptions.JobFailedError)
    assert failures[0].key == 0
    assert "disk full" in str(failures[0])

    dispatcher = dispatchers.JobDispatcher(workers=1, errors_treshold=2)
    dispatcher.submit(0, disk_full)
    dispatcher.submit(1, disk_full)
    dispatcher.submit(2, lambda: 'never')
    with pytest.raises(exceptions.JobFailedError) as error:
        dispatcher.run()
    assert error.value.key == 1
    assert isinstance(error.value.__cause__, OSError)
    assert dispatcher.errors == 2
