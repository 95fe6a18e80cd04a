"""Generic-case complexity workbench for one-way-function candidates."""

__version__ = "0.1.0"
