from typing import Any, Callable


class HTTPException(Exception):
    def __init__(self, status_code: int, detail: Any = None) -> None:
        super().__init__(status_code, detail)
        self.status_code = status_code
        self.detail = detail


def Depends(dependency: Callable[..., Any]) -> Any:
    return dependency


class FastAPI:
    def __init__(self, **kwargs: Any) -> None:
        self.routes: list[tuple[str, str, Callable[..., Any]]] = []

    def _route(self, method: str, path: str) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
        def register(func: Callable[..., Any]) -> Callable[..., Any]:
            self.routes.append((method, path, func))
            return func

        return register

    def get(self, path: str, **kwargs: Any) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
        return self._route("GET", path)

    def post(self, path: str, **kwargs: Any) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
        return self._route("POST", path)
