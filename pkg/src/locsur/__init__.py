"""Local surrogate explanations for black-box classifiers, with boundary-centred
sampling and a Local Fidelity benchmark."""

__version__ = "0.1.0"
