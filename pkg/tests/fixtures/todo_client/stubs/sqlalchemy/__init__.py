from sqlalchemy._base import _Anything

__version__ = "2.0.29"


class Integer(_Anything): ...
class String(_Anything): ...
class Boolean(_Anything): ...
class DateTime(_Anything): ...
class ForeignKey(_Anything): ...
class Column(_Anything): ...
class Select(_Anything): ...


def create_engine(*args, **kwargs):
    return _Anything()


def select(*args, **kwargs):
    return Select()


def delete(*args, **kwargs):
    return _Anything()


def text(*args, **kwargs):
    return _Anything()


func = _Anything()
