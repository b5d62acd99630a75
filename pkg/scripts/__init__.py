"""Helper scripts for the project."""
