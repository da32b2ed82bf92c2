from dataclasses import dataclass
from collections.abc import Callable
from typing import Generic, TypeVar, Any


from brenierlab.common._guards import on_not_callable


__all__ = [
    "Task",
]


A = TypeVar("A")
B = TypeVar("B")


class Task(Generic[A]):
    """
        A lazy pipeline of synchronous computation steps (building a map, solving a transport, checking a bound).
        Not executed until one of the runners in 'task_runners' is called.
    """

    @staticmethod
    def pure(value: A) -> 'Task[A]':
        return _Pure(value)

    @staticmethod
    def effect(fn: Callable[[], A]) -> 'Task[A]':
        """:raises ContractError: fn is not callable"""
        on_not_callable(fn, Task.__name__, 'effect')
        return _Effect(fn)

    def map(self, fn: Callable[[A], B]) -> 'Task[B]':
        """:raises ContractError: fn is not callable"""
        on_not_callable(fn, self.__class__.__name__, 'map')
        return _Continuation(self, lambda a: _Pure(fn(a)))

    def bind(self, fn: Callable[[A], 'Task[B]']) -> 'Task[B]':
        """:raises ContractError: fn is not callable"""
        on_not_callable(fn, self.__class__.__name__, 'bind')
        return _Continuation(self, fn)


#  All nodes share the attribute names 'value', 'prime', 'current' and 'next': the runners rely on them

@dataclass(frozen=True, slots=True, repr=True)
class _Pure(Task[A]):
    value: A


@dataclass(frozen=True, slots=True, repr=True)
class _Effect(Task[A]):
    prime: Callable[[], A]


@dataclass(frozen=True, slots=True, repr=True)
class _Continuation(Task[B]):
    current: Task[Any]
    next: Callable[[Any], Task[B]]
