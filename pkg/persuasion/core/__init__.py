"""Core config, logging setup, and app-wide facilities."""
