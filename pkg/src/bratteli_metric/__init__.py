"""Internal (iterated Kantorovich) metrics on graded graphs."""
__version__ = "0.1.0"
