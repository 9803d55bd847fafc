"""Domain schemas and report records."""
