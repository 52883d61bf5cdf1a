"""pitchguard - инструменты прогнозирования травм футболистов."""

__version__ = "1.0.0"
