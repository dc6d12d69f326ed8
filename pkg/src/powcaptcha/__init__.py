"""Self-hostable two-phase CAPTCHA: a hash proof-of-work gate in front of a
six-tile image-selection challenge, plus an attack-economics simulator."""

__version__ = "0.1.0"
