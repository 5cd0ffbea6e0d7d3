"""High-temperature Casimir free energy of two spheres in an electrolyte."""
