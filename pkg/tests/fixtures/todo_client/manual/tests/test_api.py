import pytest
from httpx import AsyncClient


@pytest.mark.asyncio
async def test_create_todo(client: AsyncClient) -> None:
    response = await client.post("/create/groceries", json={"value": "buy milk"})
    assert response.status_code == 200
    assert response.json() == {"key": "groceries", "value": "buy milk", "done": False}


@pytest.mark.asyncio
async def test_get_todo(client: AsyncClient) -> None:
    await client.post("/create/groceries", json={"value": "buy milk"})
    response = await client.get("/get/groceries")
    assert response.status_code == 200
    assert response.json()["value"] == "buy milk"


@pytest.mark.asyncio
async def test_get_todos(client: AsyncClient) -> None:
    await client.post("/create/groceries", json={"value": "buy milk"})
    await client.post("/create/chores", json={"value": "wash dishes", "done": True})
    response = await client.get("/get")
    assert response.status_code == 200
    assert len(response.json()) == 2
