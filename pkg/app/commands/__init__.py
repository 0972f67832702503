# Command-line subcommands; each module exposes register(subparsers)
from app.commands import estimate, simulate, verify

COMMANDS = (estimate, simulate, verify)
