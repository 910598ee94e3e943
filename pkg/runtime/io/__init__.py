"""File formats: versioned tidy CSVs with JSON sidecars, volumes, cell tables."""
