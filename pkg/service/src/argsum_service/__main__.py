"""Run the service: ``python -m argsum_service`` or the ``argsum-service`` script."""

from __future__ import annotations

import logging

import uvicorn

from .app import Settings, create_app


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    settings = Settings.from_env()
    uvicorn.run(create_app(settings), host=settings.host, port=settings.port)


if __name__ == "__main__":
    main()
