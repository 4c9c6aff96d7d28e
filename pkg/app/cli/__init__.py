from app.cli.router import cli_router

__all__ = ["cli_router"]
