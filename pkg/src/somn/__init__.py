"""somn: automated sleep staging from overnight EEG.

Pipeline: EDF/synthetic ingest -> contralateral-mastoid montage at
200 Hz -> 30-second epochs -> multitaper spectrograms and expert
features -> neural staging models -> hypnograms with confidence, quality
metrics, and sleep statistics, exposed through a CLI and an HTTP scoring
service.
"""

__version__ = "0.1.0"
