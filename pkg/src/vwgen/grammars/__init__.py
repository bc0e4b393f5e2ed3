"""Bundled grammar corpus (.vw files)."""

from importlib import resources

NAMES = (
    "anbncn.vw",
    "infinite-alphabet.vw",
    "cf-8.vw",
    "cf-216.vw",
    "toyisa.vw",
    "kary3.vw",
)


def text(name: str) -> str:
    return (resources.files(__package__) / name).read_text(encoding="utf-8")


def path(name: str) -> str:
    return str(resources.files(__package__) / name)
