"""Command-line surface: config files, experiment runs and subcommands."""
