"""Configuration, serialization, acceptance suite and the command-line entry point."""
