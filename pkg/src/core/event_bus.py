# core/event_bus.py
from __future__ import annotations
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional
import logging
import threading
import uuid

from src.config.settings import get_settings

logger = logging.getLogger(__name__)

EventHandler = Callable[[str, Dict[str, Any]], None]

# Channels published by the library
SWEEP_ROW = "sweep.row"
FIT_ITERATION = "fit.iteration"
MAP_DEFECT = "map.defect"


@dataclass
class Subscription:
    channel: str
    handler: EventHandler
    once: bool = False


class EventBus:
    """
    In-memory, thread-safe progress bus. Sweep workers publish from pool threads,
    so handlers must be thread-safe themselves.
    API:
      - subscribe(channel, handler) -> sub_id
      - subscribe_once(channel, handler) -> sub_id
      - unsubscribe(sub_id)
      - publish(channel, payload)
    """
    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self._lock = threading.RLock()
        self._subs: Dict[str, Dict[str, Subscription]] = {}

    def subscribe(self, channel: str, handler: EventHandler) -> str:
        return self._add(channel, handler, once=False)

    def subscribe_once(self, channel: str, handler: EventHandler) -> str:
        return self._add(channel, handler, once=True)

    def _add(self, channel: str, handler: EventHandler, once: bool) -> str:
        sub_id = str(uuid.uuid4())
        with self._lock:
            self._subs.setdefault(channel, {})[sub_id] = Subscription(channel, handler, once=once)
        return sub_id

    def unsubscribe(self, sub_id: str) -> None:
        with self._lock:
            for ch in list(self._subs.keys()):
                if sub_id in self._subs[ch]:
                    del self._subs[ch][sub_id]
                    if not self._subs[ch]:
                        del self._subs[ch]
                    return

    def publish(self, channel: str, payload: Dict[str, Any]) -> None:
        if not self.enabled:
            return
        with self._lock:
            items = list(self._subs.get(channel, {}).items())
            # once-subscriptions are removed before delivery so concurrent publishers fire them once
            for sub_id, s in items:
                if s.once:
                    del self._subs[channel][sub_id]
            if channel in self._subs and not self._subs[channel]:
                del self._subs[channel]
        # handlers run outside the lock
        for _, s in items:
            try:
                s.handler(channel, payload)
            except Exception:
                # handler errors are logged and swallowed
                logger.exception("event handler failed on %s", channel)


_bus: Optional[EventBus] = None
_bus_lock = threading.Lock()


def get_event_bus() -> EventBus:
    global _bus
    with _bus_lock:
        if _bus is None:
            _bus = EventBus(enabled=get_settings().eventbus_enabled)
        return _bus


def reset_event_bus() -> None:
    global _bus
    with _bus_lock:
        _bus = None
