"""Command-line launcher: ``tabserve [--host H] [--port P] ...``."""

from __future__ import annotations

import argparse
import os

import uvicorn

from .app import DEFAULT_MAX_CONTEXT_ROWS, ServiceConfig, create_app


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tabserve",
        description="Serve a tabular regressor over HTTP (/health, /predict).",
    )
    parser.add_argument(
        "--host", default=os.environ.get("TABSERVE_HOST", "127.0.0.1")
    )
    parser.add_argument(
        "--port", type=int, default=int(os.environ.get("TABSERVE_PORT", "8321"))
    )
    parser.add_argument(
        "--max-context-rows",
        type=int,
        default=int(os.environ.get("TABSERVE_MAX_CONTEXT_ROWS", str(DEFAULT_MAX_CONTEXT_ROWS))),
        help="requests with more context rows are rejected with HTTP 413",
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--knn-k", type=int, default=8,
        help="neighbor count for the fallback regressor",
    )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    config = ServiceConfig(
        host=args.host,
        port=args.port,
        max_context_rows=args.max_context_rows,
        seed=args.seed,
        knn_k=args.knn_k,
    )
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")


if __name__ == "__main__":
    main()
