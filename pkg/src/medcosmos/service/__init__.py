"""HTTP service, configuration, payload schemas and the batch CLI."""
