"""File formats, path helpers and root finding."""
