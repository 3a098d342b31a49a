"""Run the scoring service: python -m qgqa_scorer --port 8089"""

from __future__ import annotations

import argparse
import sys

import uvicorn

from .app import ServiceConfig, ServiceLoadError, create_app


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description="graph-text consistency scoring service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8089)
    args = parser.parse_args(argv)
    try:
        app = create_app(ServiceConfig.from_env())
    except ServiceLoadError as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        sys.exit(1)
    uvicorn.run(app, host=args.host, port=args.port)


if __name__ == "__main__":
    main()
