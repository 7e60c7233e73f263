"""File formats, seeding, logging and shared errors."""
