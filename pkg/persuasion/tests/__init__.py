"""Test suite for the persuasion package."""
