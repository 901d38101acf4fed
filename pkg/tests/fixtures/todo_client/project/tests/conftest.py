import pytest
from fastapi.testclient import TestClient
from sqlalchemy import text


@pytest.fixture(scope="session", autouse=True)
def create_tables():
    from app.database import create_db_engine
    from app.models import Base

    Base.metadata.create_all(bind=create_db_engine())


@pytest.fixture(autouse=True)
def session():
    from app.database import SessionLocal

    session = SessionLocal()
    yield session
    session.execute(text("TRUNCATE TABLE todo"))
    session.close()


@pytest.fixture
def client():
    from app.main import app

    return TestClient(app)
