"""Concurrent task orchestration with a gapless notification feed.

Long operations run on a fixed worker pool; every lifecycle step (started,
progress, finished, failed, stopped) publishes a sequence-numbered
Notification atomically with the state change, so a reader never sees a state
without its event.  Cancellation is cooperative: running tasks poll a probe
at work-unit boundaries and stop with their partial result.  Task records
persist as JSON files under the workspace; records that were queued or
running when the process died come back as "failed: interrupted".
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from collections import deque
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

__all__ = [
    "TASK_KINDS",
    "TERMINAL_STATES",
    "TaskError",
    "TaskRecord",
    "Notification",
    "TaskContext",
    "TaskHub",
]

TASK_KINDS = ("import", "train", "extract", "test", "export")
TERMINAL_STATES = ("succeeded", "failed", "stopped")
_TRANSITIONS = {
    "queued": {"running", "stopped", "failed"},
    "running": {"succeeded", "failed", "stopped"},
}


class TaskError(ValueError):
    pass


@dataclass
class TaskRecord:
    id: str
    kind: str
    state: str  # queued | running | succeeded | failed | stopped
    description: dict
    progress: float = 0.0
    eta_seconds: float = 0.0
    created: float = 0.0
    started: float | None = None
    finished: float | None = None
    result: dict | None = None
    error: str | None = None

    def to_json(self) -> dict:
        return {"schema_version": 1, **asdict(self)}


@dataclass(frozen=True)
class Notification:
    sequence: int
    task_id: str
    event: str  # started | progress | finished | failed | stopped
    payload: dict
    timestamp: float

    def to_json(self) -> dict:
        return asdict(self)


class _Cancelled(Exception):
    pass


@dataclass
class _Task:
    record: TaskRecord
    fn: object
    cancel_flag: threading.Event = field(default_factory=threading.Event)


class TaskContext:
    """Handed to task bodies: progress reporting plus the cancellation probe."""

    def __init__(self, hub: "TaskHub", task: _Task):
        self._hub = hub
        self._task = task

    @property
    def task_id(self) -> str:
        return self._task.record.id

    def progress(self, fraction: float, payload: dict | None = None, eta: float | None = None):
        self._hub._publish_progress(self._task, fraction, payload or {}, eta)

    def cancelled(self) -> bool:
        return self._task.cancel_flag.is_set()

    def check_cancelled(self):
        """Raise if cancellation was requested; for loops without results."""
        if self.cancelled():
            raise _Cancelled()


def default_worker_count() -> int:
    return max(1, (os.cpu_count() or 2) - 1)


class TaskHub:
    def __init__(self, workspace_dir=None, workers: int | None = None, feed_capacity: int = 10000):
        self._lock = threading.RLock()
        self._feed_cond = threading.Condition(self._lock)
        self._work_cond = threading.Condition(self._lock)
        self._tasks: dict[str, _Task] = {}
        self._order: list[str] = []
        self._queue: deque[str] = deque()
        self._feed: deque[Notification] = deque()
        self._capacity = feed_capacity
        self._sequence = 0
        self._floor = 0
        self._shutdown = False
        self._dir = Path(workspace_dir) / "tasks" if workspace_dir else None
        if self._dir is not None:
            self._dir.mkdir(parents=True, exist_ok=True)
            self._recover()
        count = workers if workers is not None else default_worker_count()
        self._threads = [
            threading.Thread(target=self._worker, name=f"taskhub-{i}", daemon=True)
            for i in range(max(1, count))
        ]
        for t in self._threads:
            t.start()

    # -- public API ---------------------------------------------------------

    def submit(self, kind: str, fn, description: dict) -> TaskRecord:
        if kind not in TASK_KINDS:
            raise TaskError(f"unknown task kind '{kind}' (one of {', '.join(TASK_KINDS)})")
        if not callable(fn):
            raise TaskError("task body must be callable")
        if not isinstance(description, dict):
            raise TaskError("task description must be a JSON object")
        try:
            json.dumps(description)
        except (TypeError, ValueError) as exc:
            raise TaskError(f"task description is not JSON-serializable: {exc}") from exc
        record = TaskRecord(
            id=uuid.uuid4().hex[:12],
            kind=kind,
            state="queued",
            description=description,
            created=time.time(),
        )
        task = _Task(record=record, fn=fn)
        with self._lock:
            if self._shutdown:
                raise TaskError("hub is shut down")
            self._tasks[record.id] = task
            self._order.append(record.id)
            self._queue.append(record.id)
            self._persist(record)
            self._work_cond.notify()
            return replace(record)

    def cancel(self, task_id: str) -> bool:
        with self._lock:
            task = self._tasks.get(task_id)
            if task is None:
                raise TaskError(f"unknown task '{task_id}'")
            state = task.record.state
            if state in TERMINAL_STATES:
                return False
            task.cancel_flag.set()
            if state == "queued":
                self._transition(task, "stopped", event="stopped", payload={"note": "cancelled before start"})
            return True

    def get(self, task_id: str) -> TaskRecord:
        with self._lock:
            task = self._tasks.get(task_id)
            if task is None:
                raise TaskError(f"unknown task '{task_id}'")
            return replace(task.record)

    def list(self) -> list[TaskRecord]:
        with self._lock:
            return [replace(self._tasks[tid].record) for tid in self._order]

    def poll_feed(self, after_sequence: int) -> tuple[list[Notification], int]:
        """Notifications with sequence > after_sequence, and the feed floor
        (largest evicted sequence; cursors below it have missed events)."""
        if after_sequence < 0:
            raise TaskError("after_sequence must be >= 0")
        with self._lock:
            events = [n for n in self._feed if n.sequence > after_sequence]
            return events, self._floor

    def wait_feed(self, after_sequence: int, timeout: float) -> tuple[list[Notification], int]:
        """Long-poll variant of poll_feed: blocks up to `timeout` seconds for
        a first matching event."""
        deadline = time.monotonic() + timeout
        with self._feed_cond:
            while True:
                events = [n for n in self._feed if n.sequence > after_sequence]
                if events:
                    return events, self._floor
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return [], self._floor
                self._feed_cond.wait(remaining)

    def latest_sequence(self) -> int:
        with self._lock:
            return self._sequence

    def wait_task(self, task_id: str, timeout: float = 300.0) -> TaskRecord:
        """Block until the task reaches a terminal state."""
        deadline = time.monotonic() + timeout
        while True:
            record = self.get(task_id)
            if record.state in TERMINAL_STATES:
                return record
            if time.monotonic() > deadline:
                raise TaskError(f"timed out waiting for task '{task_id}'")
            time.sleep(0.005)

    def idle(self) -> bool:
        with self._lock:
            return not self._queue and all(
                t.record.state in TERMINAL_STATES for t in self._tasks.values()
            )

    def shutdown(self, wait: bool = True, timeout: float = 10.0):
        with self._lock:
            self._shutdown = True
            for tid in self._queue:
                task = self._tasks[tid]
                if task.record.state == "queued":
                    task.cancel_flag.set()
                    self._transition(task, "stopped", event="stopped", payload={"note": "hub shut down"})
            self._queue.clear()
            self._work_cond.notify_all()
        if wait:
            deadline = time.monotonic() + timeout
            for t in self._threads:
                t.join(max(0.0, deadline - time.monotonic()))

    # -- internals ----------------------------------------------------------

    def _worker(self):
        while True:
            with self._lock:
                while not self._queue and not self._shutdown:
                    self._work_cond.wait()
                if self._shutdown and not self._queue:
                    return
                task = self._tasks[self._queue.popleft()]
                if task.record.state != "queued":
                    continue  # cancelled while waiting
                task.record.started = time.time()
                self._transition(task, "running", event="started",
                                 payload={"kind": task.record.kind, "description": task.record.description})
            ctx = TaskContext(self, task)
            try:
                result = task.fn(ctx)
            except _Cancelled:
                self._finish(task, "stopped", result=None)
            except Exception as exc:  # noqa: BLE001 - worker must survive any task
                self._finish(task, "failed", error=f"{type(exc).__name__}: {exc}")
            else:
                if task.cancel_flag.is_set():
                    self._finish(task, "stopped", result=_jsonable(result))
                else:
                    self._finish(task, "succeeded", result=_jsonable(result))

    def _finish(self, task: _Task, state: str, result=None, error: str | None = None):
        event = {"succeeded": "finished", "failed": "failed", "stopped": "stopped"}[state]
        payload: dict = {}
        if result is not None:
            payload["result"] = result
        if error is not None:
            payload["error"] = error
        with self._lock:
            if task.record.state in TERMINAL_STATES:
                return
            task.record.result = result
            task.record.error = error
            if state == "succeeded":
                task.record.progress = 1.0
            task.record.eta_seconds = 0.0
            self._transition(task, state, event=event, payload=payload)

    def _transition(self, task: _Task, new_state: str, event: str, payload: dict):
        old = task.record.state
        if new_state not in _TRANSITIONS.get(old, set()):
            raise TaskError(f"illegal transition {old} -> {new_state} for task {task.record.id}")
        task.record.state = new_state
        if new_state in TERMINAL_STATES:
            task.record.finished = time.time()
        self._publish(task.record.id, event, payload)
        self._persist(task.record)

    def _publish_progress(self, task: _Task, fraction: float, payload: dict, eta: float | None):
        with self._lock:
            if task.record.state != "running":
                return
            fraction = min(1.0, max(float(fraction), task.record.progress))
            task.record.progress = fraction
            if eta is not None:
                task.record.eta_seconds = max(0.0, float(eta))
            body = {"progress": fraction, "eta_seconds": task.record.eta_seconds, **payload}
            self._publish(task.record.id, "progress", body)

    def _publish(self, task_id: str, event: str, payload: dict):
        self._sequence += 1
        note = Notification(self._sequence, task_id, event, payload, time.time())
        self._feed.append(note)
        while len(self._feed) > self._capacity:
            evicted = self._feed.popleft()
            self._floor = evicted.sequence
        self._feed_cond.notify_all()

    def _persist(self, record: TaskRecord):
        if self._dir is None:
            return
        path = self._dir / f"{record.id}.json"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(record.to_json(), sort_keys=True), encoding="utf-8")
        tmp.replace(path)

    def _recover(self):
        for path in sorted(self._dir.glob("*.json")):
            try:
                data = json.loads(path.read_text(encoding="utf-8"))
                data.pop("schema_version", None)
                record = TaskRecord(**data)
            except (ValueError, TypeError):
                continue
            if record.state not in TERMINAL_STATES:
                record.state = "failed"
                record.error = "interrupted: the hub restarted while this task was in flight"
                record.finished = time.time()
                self._persist(record)
            self._tasks[record.id] = _Task(record=record, fn=None)
            self._order.append(record.id)


def _jsonable(value):
    if value is None:
        return None
    json.dumps(value)
    return value
