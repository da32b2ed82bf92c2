import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import closing
from collections.abc import Generator, Sequence
from typing import TypeVar, Any

from brenierlab.common.exceptions import ContractError
from brenierlab.result import Result, Ok, Err
from brenierlab.task import Task
from brenierlab.task import _Pure, _Effect, _Continuation  # noqa


__all__ = [
    "run",
    "run_safe",
    "run_all",
]


logger = logging.getLogger(__name__)

A = TypeVar("A")


def _runner(chain: Task[Any]) -> Generator[Any, _Pure, Any]:
    """
        Knows how to handle Pure and Continuation nodes.
        Other nodes are given to the calling code, which sends back a Pure node.
    """
    entity, continuations = chain, list()
    while True:
        if isinstance(entity, _Continuation):
            continuations.append(entity.next)
            entity = entity.current

        elif isinstance(entity, _Pure):
            if len(continuations) == 0:
                return entity.value
            cont = continuations.pop()
            entity = cont(entity.value)

        else:
            entity = yield entity


def _panic_on_violations(runner_name: str, entity):
    """:raises ContractError: unknown node"""
    raise ContractError(
        entity=Task.__name__,
        method=runner_name,
        message=f"violation of the contract - unknown node {entity}.\n"
    )


def run(task: Task[A]) -> A:
    """
        Runs a pipeline step by step in the calling thread.
        :raises ContractError: a step returned something that is not a Task
    """
    with closing(_runner(task)) as gen:
        try:
            entity = next(gen)
            while True:
                if isinstance(entity, _Effect):
                    entity = gen.send(_Pure(entity.prime()))
                else:
                    _panic_on_violations('run', entity)
        except StopIteration as finish:
            return finish.value


def run_safe(task: Task[A]) -> Result[A, Exception]:
    """
        Runs a pipeline, catching possible errors - heirs of 'Exception'.
        ContractError is not suppressed.
    """
    try:
        return Ok(run(task))
    except Exception as err:
        logger.debug("task failed: %r", err)
        return Err(err)


def run_all(tasks: Sequence[Task[Any]], jobs: int = 1) -> list[Result[Any, Exception]]:
    """
        Runs independent pipelines on at most 'jobs' worker threads.
        Results come back in submission order, so the outcome does not depend on the worker count.
        ContractError is not suppressed.
    """
    if jobs <= 1 or len(tasks) <= 1:
        return [run_safe(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=jobs, thread_name_prefix="brenierlab") as pool:
        return list(pool.map(run_safe, tasks))
