"""Benchmark harness for online battery scheduling with commitment and switching costs."""
__version__ = "0.1.0"
