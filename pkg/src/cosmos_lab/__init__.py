"""Matrix-optimizer laboratory: COSMOS, one-sided SOAP, MUON and Adam."""
__version__ = "0.1.0"
