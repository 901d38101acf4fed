from typing import AsyncIterator, List, Optional

from fastapi import Depends, FastAPI, HTTPException

from app.database import SessionLocal
from app.entities import CreateTodoFields, Todo, TodoFilter
from app.repository import SQLTodoRepository, TodoRepository


async def create_todo_repository() -> AsyncIterator[TodoRepository]:
    async with SessionLocal() as session:
        yield SQLTodoRepository(session)


def create_app() -> FastAPI:
    app = FastAPI()
    app.post("/create/{key}")(create_todo)
    app.get("/get/{key}")(get_todo)
    app.get("/get")(get_todos)
    return app


async def create_todo(
    key: str,
    data: CreateTodoFields,
    todo_repository: TodoRepository = Depends(create_todo_repository),
) -> Todo:
    todo = Todo(key=key, value=data.value, done=data.done)
    await todo_repository.save(todo)
    return todo


async def get_todo(key: str, todo_repository: TodoRepository = Depends(create_todo_repository)) -> Todo:
    todo = await todo_repository.get_by_key(key)
    if not todo:
        raise HTTPException(status_code=404, detail="Todo not found")
    return todo


async def get_todos(
    limit: Optional[int] = None,
    todo_repository: TodoRepository = Depends(create_todo_repository),
) -> List[Todo]:
    return await todo_repository.get(TodoFilter(limit=limit))


app = create_app()
