from typing import AsyncIterator

import pytest_asyncio
from httpx import AsyncClient
from sqlalchemy import text
from sqlalchemy.ext.asyncio import AsyncSession


@pytest_asyncio.fixture(scope="session", autouse=True)
async def create_tables() -> None:
    from app.database import create_db_engine
    from app.models import Base

    async with create_db_engine().begin() as connection:
        await connection.run_sync(Base.metadata.create_all)


@pytest_asyncio.fixture(autouse=True)
async def session() -> AsyncIterator[AsyncSession]:
    from app.database import SessionLocal

    async with SessionLocal() as session:
        yield session
        await session.execute(text("TRUNCATE TABLE todo"))
        await session.commit()


@pytest_asyncio.fixture
async def client() -> AsyncIterator[AsyncClient]:
    from app.main import app

    async with AsyncClient(app=app, base_url="http://test") as client:
        yield client
