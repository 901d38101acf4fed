from typing import Iterator

from fastapi import Depends, FastAPI, HTTPException

from app.database import SessionLocal
from app.entities import CreateTodoFields, Todo, TodoFilter
from app.repository import SQLTodoRepository, TodoRepository


def create_todo_repository() -> Iterator[TodoRepository]:
    session = SessionLocal()
    try:
        yield SQLTodoRepository(session)
    finally:
        session.close()


def create_app():
    app = FastAPI()
    app.post("/create/{key}")(create_todo)
    app.get("/get/{key}")(get_todo)
    app.get("/get")(get_todos)
    return app


def create_todo(key, data: CreateTodoFields, todo_repository=Depends(create_todo_repository)):
    todo = Todo(key=key, value=data.value, done=data.done)
    todo_repository.save(todo)
    return todo


def get_todo(key, todo_repository=Depends(create_todo_repository)):
    todo = todo_repository.get_by_key(key)
    if not todo:
        raise HTTPException(status_code=404, detail="Todo not found")
    return todo


def get_todos(limit=None, todo_repository=Depends(create_todo_repository)):
    return todo_repository.get(TodoFilter(limit=limit))


app = create_app()
