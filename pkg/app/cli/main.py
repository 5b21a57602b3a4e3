"""
Main CLI application entry point.

Command-line interface for the s-mate protection coding engine and
multipath simulator.
"""

import sys

import click
import typer

from app.cli import commands

app = typer.Typer(
    name="s-mate",
    help="Protection coding over k paths: simulate, schedule, verify, trace",
    no_args_is_help=True,
)

# Register scenario commands
app.command("simulate")(commands.simulate)
app.command("schedule")(commands.schedule)
app.command("verify")(commands.verify)
app.command("trace")(commands.trace)


def main() -> None:
    """Entry point for the CLI application."""
    try:
        app(standalone_mode=False)
    except click.exceptions.UsageError as e:
        # Show help automatically on usage errors instead of just "try --help"
        if e.ctx is not None:
            click.echo(e.ctx.get_help())
            click.echo()
        click.echo(f"Error: {e.format_message()}", err=True)
        sys.exit(2)
    except click.exceptions.Abort:
        # User cancelled (e.g., Ctrl+C)
        sys.exit(1)
    except click.exceptions.Exit as e:
        # Normal exit requested (e.g., after showing error message)
        sys.exit(e.exit_code)
    except SystemExit:
        # Re-raise system exits (normal exit codes)
        raise


if __name__ == "__main__":
    main()
