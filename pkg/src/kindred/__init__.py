"""DNA-based mutual authentication and dead-drop keys over flooded contact graphs."""

__version__ = "0.1.0"
