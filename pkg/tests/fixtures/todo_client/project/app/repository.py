from abc import ABC, abstractmethod
from typing import List, Optional

from app.entities import Todo, TodoFilter
from app.models import TodoInDB


class TodoRepository(ABC):
    @abstractmethod
    def save(self, todo):
        ...

    @abstractmethod
    def get_by_key(self, key):
        ...

    @abstractmethod
    def get(self, todo_filter):
        ...


class SQLTodoRepository(TodoRepository):
    def __init__(self, session):
        self._session = session

    def save(self, todo):
        self._session.add(TodoInDB.from_entity(todo))
        self._session.commit()

    def get_by_key(self, key) -> Optional[Todo]:
        instance = self._session.query(TodoInDB).filter(TodoInDB.key == key).first()
        return instance.to_entity() if instance else None

    def get(self, todo_filter) -> List[Todo]:
        query = self._filtered(self._session.query(TodoInDB), todo_filter)
        if todo_filter.limit:
            query = query.limit(todo_filter.limit)
        return [todo.to_entity() for todo in query]

    def _filtered(self, query, todo_filter):
        if todo_filter.key_contains is not None:
            query = query.filter(TodoInDB.key.contains(todo_filter.key_contains))
        if todo_filter.value_contains is not None:
            query = query.filter(TodoInDB.value.contains(todo_filter.value_contains))
        if todo_filter.done is not None:
            query = query.filter(TodoInDB.done == todo_filter.done)
        return query
