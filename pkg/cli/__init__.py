# Command-line surface: run context and subcommands
