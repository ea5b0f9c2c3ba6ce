"""HTTP microservice exposing a tabular regressor behind a fixed wire protocol."""

from .app import ServiceConfig, create_app
from .backends import BackendFailure, KnnBackend, TabpfnBackend, load_backend

__all__ = [
    "ServiceConfig",
    "create_app",
    "BackendFailure",
    "KnnBackend",
    "TabpfnBackend",
    "load_backend",
]

__version__ = "0.1.0"
