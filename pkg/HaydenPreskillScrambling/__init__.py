"""HaydenPreskillScrambling package for simulating information scrambling and Hayden-Preskill recovery."""
__version__ = "0.1.0"
