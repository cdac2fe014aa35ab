"""LLM prompting: assets, example selection, endpoints, response parsing and pipelines."""
