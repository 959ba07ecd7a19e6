"""Brown measure of Y_t P: characteristics, support boundary and log-potential."""
__version__ = "0.1.0"
